//! Chung-Lu graph samplers.
//!
//! Sequences with few distinct weights are sampled per pair of weight classes
//! by geometric skipping over the (constant probability) candidate pairs.
//! Other sequences use the Miller-Hagberg sampler over weights in decreasing
//! order, which skips ahead with the current upper bound on the probability
//! and corrects by rejection. Both are exact.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::rng::SimRng;
use crate::weights::WeightSequence;

/// Sequences with at most this many distinct weights use the class-pair sampler.
pub const CLASS_SAMPLER_LIMIT: usize = 64;

/// `min(a b / normalizer, 1)`.
#[inline]
pub fn edge_probability(a: f64, b: f64, normalizer: f64) -> f64 {
    (a * b / normalizer).min(1.0)
}

/// Samples `CL(w)`: edge `{i, j}` is present with probability `min(w_i w_j / W, 1)`.
pub fn sample_chung_lu<R: Rng + ?Sized>(ws: &WeightSequence, rng: &mut R) -> SparseGraph {
    sample_chung_lu_prime(ws, ws.total_weight(), rng).expect("total weight is positive")
}

/// Samples `CL'`: as [`sample_chung_lu`] with an external normalizer.
pub fn sample_chung_lu_prime<R: Rng + ?Sized>(
    ws: &WeightSequence,
    normalizer: f64,
    rng: &mut R,
) -> Result<SparseGraph> {
    if !(normalizer > 0.0 && normalizer.is_finite()) {
        return Err(Error::invalid(format!(
            "normalizer must be positive, got {normalizer}"
        )));
    }
    let edges = if ws.distinct_count() <= CLASS_SAMPLER_LIMIT {
        class_pair_edges(ws.weights(), normalizer, rng)
    } else {
        miller_hagberg_edges(ws.weights(), normalizer, rng)
    };
    SparseGraph::from_edges(ws.n(), &edges)
}

fn class_ranges(w: &[f64]) -> Vec<(usize, usize)> {
    let mut ranges = Vec::new();
    let mut start = 0;
    for i in 1..=w.len() {
        if i == w.len() || w[i] != w[start] {
            ranges.push((start, i));
            start = i;
        }
    }
    ranges
}

/// Calls `emit(k)` for the indices `k < total` of a Bernoulli(q) subset, in increasing order.
pub(crate) fn geometric_subset<R: Rng + ?Sized>(
    total: u64,
    q: f64,
    rng: &mut R,
    mut emit: impl FnMut(u64),
) {
    if total == 0 || q <= 0.0 {
        return;
    }
    if q >= 1.0 {
        (0..total).for_each(emit);
        return;
    }
    let geo = Geometric::new(q).expect("q lies in (0, 1)");
    let mut k = geo.sample(rng);
    while k < total {
        emit(k);
        k = k.saturating_add(1).saturating_add(geo.sample(rng));
    }
}

fn class_pair_edges<R: Rng + ?Sized>(w: &[f64], normalizer: f64, rng: &mut R) -> Vec<(u32, u32)> {
    let ranges = class_ranges(w);
    let mut edges = Vec::new();
    for (a, &(sa, ea)) in ranges.iter().enumerate() {
        for &(sb, eb) in &ranges[a..] {
            let q = edge_probability(w[sa], w[sb], normalizer);
            if sa == sb {
                let s = (ea - sa) as u64;
                // Pairs (i, j), i < j, enumerated row by row.
                let (mut row, mut row_start) = (0u64, 0u64);
                geometric_subset(s * s.saturating_sub(1) / 2, q, rng, |k| {
                    while k >= row_start + (s - 1 - row) {
                        row_start += s - 1 - row;
                        row += 1;
                    }
                    let j = row + 1 + (k - row_start);
                    edges.push(((sa as u64 + row) as u32, (sa as u64 + j) as u32));
                });
            } else {
                let nb = (eb - sb) as u64;
                geometric_subset((ea - sa) as u64 * nb, q, rng, |k| {
                    edges.push(((sa as u64 + k / nb) as u32, (sb as u64 + k % nb) as u32));
                });
            }
        }
    }
    edges
}

fn miller_hagberg_edges<R: Rng + ?Sized>(
    w: &[f64],
    normalizer: f64,
    rng: &mut R,
) -> Vec<(u32, u32)> {
    let n = w.len();
    // Position k in decreasing order is vertex n - 1 - k.
    let wd = |k: usize| w[n - 1 - k];
    let mut edges = Vec::new();
    for u in 0..n.saturating_sub(1) {
        let wu = wd(u);
        let mut v = u + 1;
        let mut p = edge_probability(wu, wd(v), normalizer);
        while v < n && p > 0.0 {
            if p < 1.0 {
                let r: f64 = rng.random();
                let skip = ((1.0 - r).ln() / (1.0 - p).ln()).floor();
                if skip >= (n - v) as f64 {
                    break;
                }
                v += skip as usize;
            }
            if v >= n {
                break;
            }
            let q = edge_probability(wu, wd(v), normalizer);
            let r: f64 = rng.random();
            if r < q / p {
                edges.push(((n - 1 - u) as u32, (n - 1 - v) as u32));
            }
            p = q;
            v += 1;
        }
    }
    edges
}

/// Seeds from which both graphs of a coupled pair can be regenerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingTranscript {
    pub graph_seed: u64,
    pub thinning_seed: u64,
}

/// A graph `G ~ CL(w)` and `G- ~ CL'(w-)` with `G-` edgewise inside `G`.
#[derive(Debug, Clone)]
pub struct CoupledPair {
    pub graph: SparseGraph,
    /// Vertex `k` of `minus` is vertex `labels[k]` of `graph`.
    pub minus: SparseGraph,
    pub transcript: CouplingTranscript,
}

/// Samples the monotone coupling of `CL(w)` and `CL'(w-)` with normalizer `W(w)`.
///
/// `labels[k]` is the vertex of `ws` carrying the `k`-th weight of `ws_minus`;
/// domination `w-_k <= w_{labels[k]}` is required. An edge of `G` between two
/// retained vertices is kept in `G-` with probability `p-/p`, which is the same
/// as thresholding one shared uniform at both probabilities.
pub fn sample_coupled_minus<R: Rng + ?Sized>(
    ws: &WeightSequence,
    ws_minus: &WeightSequence,
    labels: &[usize],
    rng: &mut R,
) -> Result<CoupledPair> {
    let transcript = CouplingTranscript {
        graph_seed: rng.next_u64(),
        thinning_seed: rng.next_u64(),
    };
    replay_coupled_minus(ws, ws_minus, labels, transcript)
}

/// Regenerates a coupled pair from its transcript.
pub fn replay_coupled_minus(
    ws: &WeightSequence,
    ws_minus: &WeightSequence,
    labels: &[usize],
    transcript: CouplingTranscript,
) -> Result<CoupledPair> {
    let n = ws.n();
    if labels.len() != ws_minus.n() {
        return Err(Error::invalid(
            "one label per vertex of the minus sequence is required",
        ));
    }
    let mut index_of = vec![u32::MAX; n];
    for (k, &v) in labels.iter().enumerate() {
        if v >= n || index_of[v] != u32::MAX {
            return Err(Error::invalid(format!(
                "label {v} out of range or repeated"
            )));
        }
        if ws_minus.weight(k) > ws.weight(v) {
            return Err(Error::invalid(format!(
                "minus weight {} exceeds weight {} of vertex {v}",
                ws_minus.weight(k),
                ws.weight(v)
            )));
        }
        index_of[v] = k as u32;
    }
    let big_w = ws.total_weight();
    let graph =
        sample_chung_lu_prime(ws, big_w, &mut SimRng::seed_from_u64(transcript.graph_seed))?;
    let mut thin = SimRng::seed_from_u64(transcript.thinning_seed);
    let mut kept = Vec::new();
    for (u, v) in graph.edges() {
        let (ku, kv) = (index_of[u as usize], index_of[v as usize]);
        if ku == u32::MAX || kv == u32::MAX {
            continue;
        }
        let p = edge_probability(ws.weight(u as usize), ws.weight(v as usize), big_w);
        let pm = edge_probability(
            ws_minus.weight(ku as usize),
            ws_minus.weight(kv as usize),
            big_w,
        );
        if thin.random::<f64>() * p < pm {
            kept.push((ku.min(kv), ku.max(kv)));
        }
    }
    let minus = SparseGraph::from_edges(ws_minus.n(), &kept)?;
    Ok(CoupledPair {
        graph,
        minus,
        transcript,
    })
}

/// Exact expected degree of every vertex under `CL'` with the given normalizer.
pub fn expected_degrees(ws: &WeightSequence, normalizer: f64) -> Vec<f64> {
    let w = ws.weights();
    let n = w.len();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + w[i];
    }
    w.iter()
        .map(|&wi| {
            // Partners with w_j >= normalizer / w_i are joined with probability one.
            let t = w.partition_point(|&wj| wi * wj < normalizer);
            let sum = wi * prefix[t] / normalizer + (n - t) as f64;
            sum - edge_probability(wi, wi, normalizer)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeRow {
    pub weight_lo: f64,
    pub weight_hi: f64,
    pub count: usize,
    pub mean_degree: f64,
    pub expected_mean_degree: f64,
    /// Standard deviation of the class mean degree (exact for class-structured
    /// sequences, an upper bound otherwise).
    pub sd_of_mean: f64,
}

/// Observed versus expected mean degree per weight class, or per weight decile
/// when the sequence has many distinct weights.
pub fn expected_degree_report(ws: &WeightSequence, g: &SparseGraph) -> Vec<DegreeRow> {
    let w = ws.weights();
    let big_w = ws.total_weight();
    let expected = expected_degrees(ws, big_w);
    let ranges = class_ranges(w);
    let exact = ranges.len() <= CLASS_SAMPLER_LIMIT;
    let groups: Vec<(usize, usize)> = if exact {
        ranges.clone()
    } else {
        let n = w.len();
        (0..10)
            .map(|k| (k * n / 10, (k + 1) * n / 10))
            .filter(|r| r.1 > r.0)
            .collect()
    };
    groups
        .iter()
        .map(|&(s, e)| {
            let count = e - s;
            let observed: usize = (s..e).map(|v| g.degree(v)).sum();
            let exp: f64 = expected[s..e].iter().sum();
            let var = if exact {
                ranges
                    .iter()
                    .map(|&(sb, eb)| {
                        let q = edge_probability(w[s], w[sb], big_w);
                        if sb == s {
                            let c = count as f64;
                            4.0 * c * (c - 1.0) / 2.0 * q * (1.0 - q)
                        } else {
                            (count * (eb - sb)) as f64 * q * (1.0 - q)
                        }
                    })
                    .sum::<f64>()
            } else {
                2.0 * exp
            };
            DegreeRow {
                weight_lo: w[s],
                weight_hi: w[e - 1],
                count,
                mean_degree: observed as f64 / count as f64,
                expected_mean_degree: exp / count as f64,
                sd_of_mean: var.sqrt() / count as f64,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn triangular_enumeration_covers_all_pairs() {
        let ws = WeightSequence::new(vec![100.0; 6]).unwrap();
        // Every probability is one, so the graph is complete.
        let g = sample_chung_lu(&ws, &mut seeded(1));
        assert_eq!(g.m(), 15);
        g.check_structure().unwrap();
    }

    #[test]
    fn miller_hagberg_saturates_to_complete_graph() {
        let w: Vec<f64> = (0..100).map(|i| 1000.0 + i as f64).collect();
        let ws = WeightSequence::new(w).unwrap();
        assert!(ws.distinct_count() > CLASS_SAMPLER_LIMIT);
        let g = sample_chung_lu(&ws, &mut seeded(3));
        assert_eq!(g.m(), 100 * 99 / 2);
    }

    #[test]
    fn expected_degrees_small_case() {
        let ws = WeightSequence::new(vec![1.0, 1.0, 4.0]).unwrap();
        let e = expected_degrees(&ws, ws.total_weight());
        assert!((e[0] - (1.0 / 6.0 + 4.0 / 6.0)).abs() < 1e-15);
        assert!((e[2] - 4.0 / 3.0).abs() < 1e-15);
    }
}
