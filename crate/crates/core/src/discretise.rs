//! Finite-level discretisations of a weight sequence and the sandwich experiment.
//!
//! The light part `[x0, C_gamma)` is cut into cells `[W_i^-, W_i^+)`. Atoms of
//! the limiting law become cell left ends; continuous mass between atoms is
//! split into quantile cells of mass below `1/ell`; stretches without
//! continuous mass are cut into `ell` equal-length pieces. The lower sequence
//! rounds light weights down and keeps `k_-` seeded heavy vertices at weight
//! `C_gamma`; the upper sequence rounds up and replaces every heavy vertex by
//! copies of weight `2 C_gamma`.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphgen::{edge_probability, sample_chung_lu_prime, sample_coupled_minus};
use crate::percolation::{run_bootstrap, seed_bernoulli};
use crate::rng::replicate_rng;
use crate::weights::{WeightDistribution, WeightSequence};

/// Interval `[lo, hi)`, or `[lo, hi]` when `closed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub lo: f64,
    pub hi: f64,
    pub closed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Partition {
    pub requested_gamma: f64,
    /// `P(W in heavy part)`; differs from the request when the law has an atom at the cutoff.
    pub gamma: f64,
    pub cutoff: f64,
    pub cells: Vec<Cell>,
    /// Whether the atom at the cutoff belongs to the light part.
    pub top_closed: bool,
    pub ell: usize,
    /// `max(1/ell, ...)`; the atom-driven term vanishes because every atom is a cell boundary.
    pub eps_ell: f64,
    /// Largest `F(W^+ -) - F(W^-)` over cells.
    pub max_open_mass: f64,
}

impl Partition {
    /// Partition from explicit cells, which must tile `[cells[0].lo, cutoff)` without gaps.
    pub fn from_cells(cells: Vec<Cell>, cutoff: f64, gamma: f64) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::invalid("a partition needs at least one cell"));
        }
        for w in cells.windows(2) {
            if w[0].hi != w[1].lo || w[0].closed {
                return Err(Error::invalid(
                    "cells must be contiguous and only the last may be closed",
                ));
            }
        }
        let last = cells[cells.len() - 1];
        if last.hi != cutoff
            || cells
                .iter()
                .any(|c| c.hi < c.lo || (c.hi == c.lo && !c.closed))
        {
            return Err(Error::invalid(
                "cells must end at the cutoff and be nonempty",
            ));
        }
        Ok(Partition {
            requested_gamma: gamma,
            gamma,
            cutoff,
            top_closed: last.closed,
            ell: cells.len(),
            eps_ell: 0.0,
            max_open_mass: 0.0,
            cells,
        })
    }

    pub fn is_light(&self, w: f64) -> bool {
        w < self.cutoff || (self.top_closed && w <= self.cutoff)
    }

    /// Cell index of a light weight; weights below the first cell map to it.
    pub fn cell_of(&self, w: f64) -> Option<usize> {
        if !self.is_light(w) {
            return None;
        }
        Some(self.cells.partition_point(|c| c.lo <= w).saturating_sub(1))
    }
}

fn push_segment(cells: &mut Vec<Cell>, dist: &WeightDistribution, a: f64, b: f64, ell: usize) {
    let open = (dist.survival(a) - dist.survival_closed(b)).max(0.0);
    let mut points = vec![a];
    if open > 1e-15 {
        let pieces = (open * ell as f64).floor() as usize + 1;
        let base = dist.cdf(a);
        for t in 1..pieces {
            let q = dist.quantile(base + open * t as f64 / pieces as f64);
            if q > *points.last().unwrap() && q < b {
                points.push(q);
            }
        }
    } else {
        for t in 1..ell {
            points.push(a + (b - a) * t as f64 / ell as f64);
        }
    }
    points.push(b);
    points.dedup();
    for w in points.windows(2) {
        cells.push(Cell {
            lo: w[0],
            hi: w[1],
            closed: false,
        });
    }
}

/// Builds the partition of the light part for cutoff `C_gamma` and level `ell`.
pub fn build_partition(dist: &WeightDistribution, gamma: f64, ell: usize) -> Result<Partition> {
    if ell == 0 {
        return Err(Error::invalid("ell must be at least 1"));
    }
    let c = dist.c_gamma(gamma)?;
    let g_hi = dist.survival_closed(c);
    let g_lo = dist.survival(c);
    let top_closed =
        g_hi > g_lo && (g_hi >= 1.0 - 1e-12 || (gamma - g_lo).abs() < (g_hi - gamma).abs());
    let eff = if top_closed { g_lo } else { g_hi };
    if (eff - gamma).abs() > 1e-12 {
        log::info!("gamma = {gamma} is not attained at the cutoff {c}; using gamma = {eff}");
    }
    let x0 = dist.x0();
    let mut starts: Vec<f64> = vec![x0];
    starts.extend(
        dist.atoms()
            .iter()
            .map(|a| a.0)
            .filter(|&x| x > x0 && x < c),
    );
    starts.sort_by(f64::total_cmp);
    starts.dedup();
    let mut cells = Vec::new();
    for (k, &a) in starts.iter().enumerate() {
        let b = starts.get(k + 1).copied().unwrap_or(c);
        if b > a {
            push_segment(&mut cells, dist, a, b, ell);
        }
    }
    if top_closed {
        cells.push(Cell {
            lo: c,
            hi: c,
            closed: true,
        });
    }
    let max_open_mass = cells
        .iter()
        .filter(|cl| !cl.closed)
        .map(|cl| (dist.survival(cl.lo) - dist.survival_closed(cl.hi)).max(0.0))
        .fold(0.0, f64::max);
    Ok(Partition {
        requested_gamma: gamma,
        gamma: eff,
        cutoff: c,
        cells,
        top_closed,
        ell,
        eps_ell: 1.0 / ell as f64,
        max_open_mass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Exact,
    Minus,
    Plus,
}

/// Heavy part: count fraction `gamma'` and weight fraction `W'_gamma`, both per original vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeavyPart {
    pub count_fraction: f64,
    pub weight_fraction: f64,
    pub side: Side,
}

/// Limit of a discretised sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretisation {
    pub gamma: f64,
    pub cutoff: f64,
    pub levels: Vec<f64>,
    pub fractions: Vec<f64>,
    pub heavy: HeavyPart,
    /// Mean weight of the original law; the per-vertex normalizer.
    pub mean_weight: f64,
}

fn cell_mass(dist: &WeightDistribution, c: &Cell) -> f64 {
    if c.closed {
        dist.survival_closed(c.lo) - dist.survival(c.hi)
    } else {
        dist.prob_in(c.lo, c.hi)
    }
}

impl Discretisation {
    /// The law itself, for point masses and finite mixtures.
    pub fn exact(dist: &WeightDistribution) -> Result<Self> {
        let atoms = dist.atoms();
        if !matches!(
            dist,
            WeightDistribution::PointMass { .. } | WeightDistribution::Mixture { .. }
        ) {
            return Err(Error::invalid(
                "only point masses and mixtures are already discrete",
            ));
        }
        Ok(Discretisation {
            gamma: 0.0,
            cutoff: atoms.last().unwrap().0,
            levels: atoms.iter().map(|a| a.0).collect(),
            fractions: atoms.iter().map(|a| a.1).collect(),
            heavy: HeavyPart {
                count_fraction: 0.0,
                weight_fraction: 0.0,
                side: Side::Exact,
            },
            mean_weight: dist.mean(),
        })
    }

    fn light(dist: &WeightDistribution, part: &Partition, plus: bool) -> (Vec<f64>, Vec<f64>) {
        let mut levels = Vec::new();
        let mut fractions = Vec::new();
        for c in &part.cells {
            let m = cell_mass(dist, c);
            if m > 0.0 {
                levels.push(if plus { c.hi } else { c.lo });
                fractions.push(m);
            }
        }
        (levels, fractions)
    }

    /// Limit of the lower sequence: light mass at cell left ends, a `p` share
    /// of the heavy vertices at weight `C_gamma`.
    pub fn limit_minus(dist: &WeightDistribution, part: &Partition, p: f64) -> Result<Self> {
        check_p(p)?;
        let (levels, fractions) = Self::light(dist, part, false);
        let count = p * part.gamma;
        Ok(Discretisation {
            gamma: part.gamma,
            cutoff: part.cutoff,
            levels,
            fractions,
            heavy: HeavyPart {
                count_fraction: count,
                weight_fraction: count * part.cutoff,
                side: Side::Minus,
            },
            mean_weight: dist.mean(),
        })
    }

    /// Limit of the upper sequence: light mass at cell right ends, heavy
    /// vertices in `[C, 2C)` kept and heavier ones split into copies at `2C`.
    pub fn limit_plus(dist: &WeightDistribution, part: &Partition) -> Result<Self> {
        let (levels, fractions) = Self::light(dist, part, true);
        let (count, weight) = plus_heavy(dist, part);
        Ok(Discretisation {
            gamma: part.gamma,
            cutoff: part.cutoff,
            levels,
            fractions,
            heavy: HeavyPart {
                count_fraction: count,
                weight_fraction: weight,
                side: Side::Plus,
            },
            mean_weight: dist.mean(),
        })
    }

    /// Checks the structural conditions: fractions sum to `1 - gamma`, levels
    /// lie in `[x0, C]`, `gamma' < gamma + 2 W_gamma / C` and `W' <= 5 W_gamma`.
    pub fn check(&self, dist: &WeightDistribution) -> Result<()> {
        let sum: f64 = self.fractions.iter().sum();
        if (sum - (1.0 - self.gamma)).abs() > 1e-12 {
            return Err(Error::InvariantViolation(format!(
                "fractions sum to {sum}, expected {}",
                1.0 - self.gamma
            )));
        }
        let x0 = dist.x0();
        if self
            .levels
            .iter()
            .any(|&w| w < x0 * (1.0 - 1e-12) || w > self.cutoff * (1.0 + 1e-12))
        {
            return Err(Error::InvariantViolation(
                "a level lies outside [x0, C_gamma]".into(),
            ));
        }
        if self.gamma > 0.0 {
            let wg = dist.mean_from(self.cutoff);
            let bound = self.gamma + 2.0 * wg / self.cutoff;
            if self.heavy.count_fraction >= bound + 1e-15 {
                return Err(Error::InvariantViolation(format!(
                    "heavy count fraction {} not below {bound}",
                    self.heavy.count_fraction
                )));
            }
            if self.heavy.weight_fraction > 5.0 * wg * (1.0 + 1e-12) {
                return Err(Error::InvariantViolation(format!(
                    "heavy weight fraction {} exceeds 5 W_gamma = {}",
                    self.heavy.weight_fraction,
                    5.0 * wg
                )));
            }
        }
        Ok(())
    }

    /// Total mass `1 - gamma + gamma'` of the discretised law per original vertex.
    pub fn total_mass(&self) -> f64 {
        1.0 - self.gamma + self.heavy.count_fraction
    }

    /// Mean of the normalized discretised law.
    pub fn normalized_mean(&self) -> f64 {
        let s: f64 = self
            .levels
            .iter()
            .zip(&self.fractions)
            .map(|(w, g)| w * g)
            .sum();
        (s + self.heavy.weight_fraction) / self.total_mass()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "seed probability must lie in [0, 1], got {p}"
        )));
    }
    Ok(())
}

/// `(gamma+, W+)` of the upper sequence.
fn plus_heavy(dist: &WeightDistribution, part: &Partition) -> (f64, f64) {
    let c = part.cutoff;
    let (p_mid, m_mid) = if part.top_closed {
        (
            dist.survival(c) - dist.survival_closed(2.0 * c),
            dist.mean_above(c) - dist.mean_from(2.0 * c),
        )
    } else {
        (dist.prob_in(c, 2.0 * c), dist.mean_in(c, 2.0 * c))
    };
    let m_top = dist.mean_from(2.0 * c);
    (
        p_mid.max(0.0) + 2.0 * m_top / c,
        m_mid.max(0.0) + 4.0 * m_top,
    )
}

/// Lower sequence on retained vertices.
#[derive(Debug, Clone)]
pub struct MinusSequence {
    pub seq: WeightSequence,
    /// Vertex of the original sequence behind each vertex of `seq`.
    pub labels: Vec<usize>,
    /// Indices in `seq` of the heavy vertices, which start infected.
    pub always_infected: Vec<usize>,
    /// Heavy vertices in the original sequence.
    pub heavy_total: usize,
    /// `floor(p |C_gamma| - n^{2/3})`, possibly negative.
    pub k_minus: i64,
    /// No heavy vertex was kept because `k_minus <= 0`.
    pub vacuous: bool,
    /// Fewer than `k_minus` heavy vertices were seeded.
    pub shortfall: bool,
}

impl MinusSequence {
    /// Seeds in `seq` given seeds of the original sequence: seeded light vertices plus the heavy part.
    pub fn seeds_from(&self, original_seeds: &[usize], n: usize) -> Vec<usize> {
        let mut seeded = vec![false; n];
        for &s in original_seeds {
            seeded[s] = true;
        }
        let mut out: Vec<usize> = self.always_infected.clone();
        let mut heavy = vec![false; self.seq.n()];
        for &h in &self.always_infected {
            heavy[h] = true;
        }
        out.extend((0..self.seq.n()).filter(|&k| !heavy[k] && seeded[self.labels[k]]));
        out
    }
}

fn heavy_vertices(ws: &WeightSequence, part: &Partition) -> Vec<usize> {
    (0..ws.n())
        .filter(|&v| !part.is_light(ws.weight(v)))
        .collect()
}

fn k_minus(p: f64, heavy: usize, n: usize) -> i64 {
    (p * heavy as f64 - (n as f64).powf(2.0 / 3.0)).floor() as i64
}

fn build_minus(
    ws: &WeightSequence,
    part: &Partition,
    chosen_heavy: &[usize],
    k: i64,
    heavy_total: usize,
) -> Result<MinusSequence> {
    let first_lo = part.cells[0].lo.min(ws.min_weight());
    let mut items: Vec<(f64, usize, bool)> = Vec::with_capacity(ws.n());
    for (v, &w) in ws.weights().iter().enumerate() {
        if let Some(ci) = part.cell_of(w) {
            let lo = if ci == 0 { first_lo } else { part.cells[ci].lo };
            items.push((lo, v, false));
        }
    }
    for &v in chosen_heavy {
        items.push((part.cutoff, v, true));
    }
    if items.is_empty() {
        return Err(Error::invalid("the lower sequence has no vertices"));
    }
    items.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut levels: Vec<f64> = Vec::new();
    let mut class_of = Vec::with_capacity(items.len());
    for it in &items {
        if levels.last() != Some(&it.0) {
            levels.push(it.0);
        }
        class_of.push((levels.len() - 1) as u32);
    }
    let seq = WeightSequence::with_classes(levels, class_of)?;
    Ok(MinusSequence {
        seq,
        labels: items.iter().map(|it| it.1).collect(),
        always_infected: items
            .iter()
            .enumerate()
            .filter(|(_, it)| it.2)
            .map(|(k, _)| k)
            .collect(),
        heavy_total,
        k_minus: k,
        vacuous: k <= 0,
        shortfall: k > 0 && (chosen_heavy.len() as i64) < k,
    })
}

/// Lower sequence with `k_-` heavy vertices drawn uniformly from the heavy part.
pub fn discretise_minus<R: Rng + ?Sized>(
    ws: &WeightSequence,
    part: &Partition,
    p: f64,
    rng: &mut R,
) -> Result<MinusSequence> {
    check_p(p)?;
    let heavy = heavy_vertices(ws, part);
    let k = k_minus(p, heavy.len(), ws.n());
    let take = k.clamp(0, heavy.len() as i64) as usize;
    let mut chosen: Vec<usize> = sample_indices(rng, heavy.len(), take)
        .into_iter()
        .map(|i| heavy[i])
        .collect();
    chosen.sort_unstable();
    build_minus(ws, part, &chosen, k, heavy.len())
}

/// Lower sequence whose heavy vertices are the first `k_-` seeded heavy vertices.
pub fn discretise_minus_with_seeds(
    ws: &WeightSequence,
    part: &Partition,
    p: f64,
    seeds: &[usize],
) -> Result<MinusSequence> {
    check_p(p)?;
    let heavy = heavy_vertices(ws, part);
    let k = k_minus(p, heavy.len(), ws.n());
    let mut seeded = vec![false; ws.n()];
    for &s in seeds {
        seeded[s] = true;
    }
    let chosen: Vec<usize> = heavy
        .iter()
        .copied()
        .filter(|&v| seeded[v])
        .take(k.max(0) as usize)
        .collect();
    build_minus(ws, part, &chosen, k, heavy.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PlusOrigin {
    Light(usize),
    Copy(usize),
    Filler,
}

#[derive(Debug, Clone)]
pub struct PlusSequence {
    pub seq: WeightSequence,
    pub origin: Vec<PlusOrigin>,
    /// Heavy copies, heavy singles and fillers; all start infected.
    pub always_infected: Vec<usize>,
    pub copies: usize,
    pub fillers: usize,
    /// `sum_j eps_j` over heavy vertices of weight at least `2C`.
    pub eps_sum: f64,
}

impl PlusSequence {
    pub fn seeds_from(&self, original_seeds: &[usize], n: usize) -> Vec<usize> {
        let mut seeded = vec![false; n];
        for &s in original_seeds {
            seeded[s] = true;
        }
        let mut out = self.always_infected.clone();
        out.extend(self.origin.iter().enumerate().filter_map(|(k, o)| match o {
            PlusOrigin::Light(v) if seeded[*v] => Some(k),
            _ => None,
        }));
        out
    }
}

/// Upper sequence: light weights rounded up, heavy `w >= 2C` replaced by
/// `2 floor(w / C)` copies at `2C`, heavy `w < 2C` kept, and
/// `ceil(2 sum eps_j)` fillers at `2C`.
pub fn discretise_plus(ws: &WeightSequence, part: &Partition) -> Result<PlusSequence> {
    let c = part.cutoff;
    let mut items: Vec<(f64, PlusOrigin)> = Vec::with_capacity(ws.n());
    let mut eps_sum = 0.0;
    let mut copies = 0;
    for (v, &w) in ws.weights().iter().enumerate() {
        match part.cell_of(w) {
            Some(ci) => items.push((part.cells[ci].hi, PlusOrigin::Light(v))),
            None if w >= 2.0 * c => {
                let q = (w / c).floor();
                eps_sum += w / c - q;
                let r = 2 * q as usize;
                copies += r;
                items.extend(std::iter::repeat_n((2.0 * c, PlusOrigin::Copy(v)), r));
            }
            None => {
                copies += 1;
                items.push((w, PlusOrigin::Copy(v)));
            }
        }
    }
    let fillers = (2.0 * eps_sum - 1e-9).ceil().max(0.0) as usize;
    items.extend(std::iter::repeat_n((2.0 * c, PlusOrigin::Filler), fillers));
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let seq = WeightSequence::new(items.iter().map(|it| it.0).collect())?;
    let origin: Vec<PlusOrigin> = items.iter().map(|it| it.1).collect();
    let always_infected = origin
        .iter()
        .enumerate()
        .filter(|(_, o)| !matches!(o, PlusOrigin::Light(_)))
        .map(|(k, _)| k)
        .collect();
    Ok(PlusSequence {
        seq,
        origin,
        always_infected,
        copies,
        fillers,
        eps_sum,
    })
}

/// One row of the F-convergence report.
#[derive(Debug, Clone, Serialize)]
pub struct FConvergenceRow {
    pub ell: usize,
    pub sup_gap_minus: f64,
    pub sup_gap_plus: f64,
    pub mean_gap_minus: f64,
    pub mean_gap_plus: f64,
    pub sup_ok: bool,
    pub mean_ok: bool,
    pub shift_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FConvergenceReport {
    pub gamma: f64,
    /// `2 (gamma + W_gamma / C_gamma)`.
    pub sup_bound: f64,
    /// `2C P(W > 2C) + 3 gamma C + 6 W_gamma + E[W 1{W > 2C}]`.
    pub rho: f64,
    /// `1.5 (gamma+ - gamma) / (1 - gamma + gamma+)`.
    pub shift_bound: f64,
    pub rows: Vec<FConvergenceRow>,
    /// Sup gaps are nonincreasing along the requested `ell`.
    pub gaps_shrink: bool,
    /// Smallest `ell` from which the sup bound holds for every `ell` up to the search limit.
    pub l1: Option<usize>,
}

/// `sup_{x in [x0, C]} |G(x) - F(x)|` for the normalized discretised law `G`.
fn sup_gap(disc: &Discretisation, dist: &WeightDistribution, mass_at_cutoff: f64) -> f64 {
    let total = disc.total_mass();
    let c = disc.cutoff;
    let x0 = dist.x0();
    let mut pts: Vec<(f64, f64)> = disc
        .levels
        .iter()
        .copied()
        .zip(disc.fractions.iter().map(|g| g / total))
        .collect();
    pts.push((c, mass_at_cutoff / total));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut breaks: Vec<f64> = vec![x0];
    breaks.extend(pts.iter().map(|p| p.0).filter(|&x| x > x0 && x <= c));
    breaks.dedup();
    let g_at = |x: f64| {
        pts.iter()
            .filter(|p| p.0 <= x)
            .map(|p| p.1)
            .sum::<f64>()
            .min(1.0)
    };
    let mut best: f64 = 0.0;
    for (k, &b) in breaks.iter().enumerate() {
        let s = g_at(b);
        best = best.max((s - dist.cdf(b)).abs());
        if let Some(&next) = breaks.get(k + 1) {
            best = best.max((s - dist.cdf_left(next)).abs());
        }
    }
    best
}

fn f_row(
    dist: &WeightDistribution,
    gamma: f64,
    ell: usize,
    p: f64,
) -> Result<(FConvergenceRow, f64, f64, f64)> {
    let part = build_partition(dist, gamma, ell)?;
    let minus = Discretisation::limit_minus(dist, &part, p)?;
    let plus = Discretisation::limit_plus(dist, &part)?;
    let c = part.cutoff;
    let g = part.gamma;
    let wg = if g > 0.0 { dist.mean_from(c) } else { 0.0 };
    let sup_bound = 2.0 * (g + wg / c);
    let rho = 2.0 * c * dist.survival(2.0 * c) + 3.0 * g * c + 6.0 * wg + dist.mean_above(2.0 * c);
    let shift_bound = 1.5 * (plus.heavy.count_fraction - g) / (1.0 - g + plus.heavy.count_fraction);
    let at_c_plus = if part.top_closed {
        0.0
    } else {
        dist.survival_closed(c) - dist.survival(c)
    };
    let d = dist.mean();
    let sm = sup_gap(&minus, dist, minus.heavy.count_fraction);
    let sp = sup_gap(&plus, dist, at_c_plus);
    let mm = (minus.normalized_mean() - d).abs();
    let mp = (plus.normalized_mean() - d).abs();
    let row = FConvergenceRow {
        ell,
        sup_gap_minus: sm,
        sup_gap_plus: sp,
        mean_gap_minus: mm,
        mean_gap_plus: mp,
        sup_ok: sm < sup_bound && sp < sup_bound,
        mean_ok: mm < rho && mp < rho,
        shift_ok: sm < shift_bound && sp < shift_bound,
    };
    Ok((row, sup_bound, rho, shift_bound))
}

/// Evaluates both F-convergence conditions along `ells`, and searches for
/// `L_1` over `1..=search_limit`.
pub fn check_f_convergence(
    dist: &WeightDistribution,
    gamma: f64,
    p: f64,
    ells: &[usize],
    search_limit: usize,
) -> Result<FConvergenceReport> {
    if ells.len() < 2 {
        return Err(Error::invalid(
            "F-convergence needs at least two values of ell",
        ));
    }
    let mut rows = Vec::new();
    let mut bounds = (0.0, 0.0, 0.0, 0.0);
    for &ell in ells {
        let (row, sb, rho, lb) = f_row(dist, gamma, ell, p)?;
        bounds = (build_partition(dist, gamma, ell)?.gamma, sb, rho, lb);
        rows.push(row);
    }
    let gaps_shrink = rows.windows(2).all(|w| {
        w[1].sup_gap_minus <= w[0].sup_gap_minus + 1e-15
            && w[1].sup_gap_plus <= w[0].sup_gap_plus + 1e-15
    });
    let passing: Vec<bool> = (1..=search_limit)
        .into_par_iter()
        .map(|ell| f_row(dist, gamma, ell, p).map(|r| r.0.sup_ok))
        .collect::<Result<_>>()?;
    let mut l1 = None;
    for ell in (1..=search_limit).rev() {
        if passing[ell - 1] {
            l1 = Some(ell);
        } else {
            break;
        }
    }
    Ok(FConvergenceReport {
        gamma: bounds.0,
        sup_bound: bounds.1,
        rho: bounds.2,
        shift_bound: bounds.3,
        rows,
        gaps_shrink,
        l1,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DecileCheck {
    pub x: f64,
    pub cdf_middle: f64,
    pub cdf_upper: f64,
    pub sigma: f64,
    pub ok: bool,
}

/// Pairwise adjacency comparison behind the upper coupling, at the largest light weight.
#[derive(Debug, Clone, Serialize)]
pub struct BonferroniReport {
    pub light_weight: f64,
    pub pairs: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub lower: Vec<usize>,
    pub middle: Vec<usize>,
    pub upper: Vec<usize>,
    /// Coupled pairs where the lower graph is not a subgraph or the lower final set is not contained.
    pub coupled_violations: usize,
    pub deciles: Vec<DecileCheck>,
    pub dominance_ok: bool,
    pub lower_vacuous: bool,
    pub lower_shortfalls: usize,
    pub k_minus: i64,
    pub heavy_total: usize,
    pub plus_size: usize,
    pub bonferroni: BonferroniReport,
}

struct Replicate {
    lower: usize,
    middle: usize,
    upper: usize,
    violation: bool,
    vacuous: bool,
    shortfall: bool,
    k_minus: i64,
    heavy_total: usize,
}

/// Sizes of the final sets on `CL'(W-)` (coupled inside `CL(w)`), on `CL(w)`,
/// and on an independent `CL'(W+)`, over `replicates` runs.
pub fn sandwich_experiment(
    ws: &WeightSequence,
    part: &Partition,
    p: f64,
    r: u32,
    replicates: usize,
    seed: u64,
) -> Result<SandwichReport> {
    check_p(p)?;
    let n = ws.n();
    let big_w = ws.total_weight();
    let plus = discretise_plus(ws, part)?;
    let reps: Vec<Replicate> = (0..replicates)
        .into_par_iter()
        .map(|i| -> Result<Replicate> {
            let mut rng = replicate_rng(seed, i as u64);
            let seeds = seed_bernoulli(n, p, &mut rng)?;
            let minus = discretise_minus_with_seeds(ws, part, p, &seeds)?;
            let pair = sample_coupled_minus(ws, &minus.seq, &minus.labels, &mut rng)?;
            let mid = run_bootstrap(&pair.graph, &seeds, r)?;
            let low = run_bootstrap(&pair.minus, &minus.seeds_from(&seeds, n), r)?;
            let lab = &minus.labels;
            let sub = pair
                .minus
                .edges()
                .all(|(a, b)| pair.graph.has_edge(lab[a as usize], lab[b as usize]));
            let inside = (0..minus.seq.n()).all(|k| !low.infected[k] || mid.infected[lab[k]]);
            let gp = sample_chung_lu_prime(&plus.seq, big_w, &mut rng)?;
            let up = run_bootstrap(&gp, &plus.seeds_from(&seeds, n), r)?;
            Ok(Replicate {
                lower: low.final_size,
                middle: mid.final_size,
                upper: up.final_size,
                violation: !(sub && inside && low.final_size <= mid.final_size),
                vacuous: minus.vacuous,
                shortfall: minus.shortfall,
                k_minus: minus.k_minus,
                heavy_total: minus.heavy_total,
            })
        })
        .collect::<Result<_>>()?;
    let middle: Vec<usize> = reps.iter().map(|r| r.middle).collect();
    let upper: Vec<usize> = reps.iter().map(|r| r.upper).collect();
    let deciles = decile_dominance(&middle, &upper);
    Ok(SandwichReport {
        lower: reps.iter().map(|r| r.lower).collect(),
        coupled_violations: reps.iter().filter(|r| r.violation).count(),
        dominance_ok: deciles.iter().all(|d| d.ok),
        deciles,
        lower_vacuous: reps.first().is_some_and(|r| r.vacuous),
        lower_shortfalls: reps.iter().filter(|r| r.shortfall).count(),
        k_minus: reps.first().map_or(0, |r| r.k_minus),
        heavy_total: reps.first().map_or(0, |r| r.heavy_total),
        plus_size: plus.seq.n(),
        bonferroni: bonferroni_check(ws, part),
        middle,
        upper,
    })
}

/// Checks `F_upper(x) <= F_middle(x) + 4 sigma` at the deciles of the middle sample.
pub fn decile_dominance(middle: &[usize], upper: &[usize]) -> Vec<DecileCheck> {
    if middle.is_empty() || upper.is_empty() {
        return Vec::new();
    }
    let mut sorted = middle.to_vec();
    sorted.sort_unstable();
    let ecdf = |xs: &[usize], x: f64| {
        xs.iter().filter(|&&v| v as f64 <= x).count() as f64 / xs.len() as f64
    };
    (1..10)
        .map(|k| {
            let idx = ((k as f64 / 10.0) * sorted.len() as f64).ceil() as usize;
            let x = sorted[idx.clamp(1, sorted.len()) - 1] as f64;
            let fm = ecdf(middle, x);
            let fu = ecdf(upper, x);
            let pooled = (fm * middle.len() as f64 + fu * upper.len() as f64)
                / (middle.len() + upper.len()) as f64;
            let sigma =
                (pooled * (1.0 - pooled) * (1.0 / middle.len() as f64 + 1.0 / upper.len() as f64))
                    .sqrt();
            DecileCheck {
                x,
                cdf_middle: fm,
                cdf_upper: fu,
                sigma,
                ok: fu <= fm + 4.0 * sigma + 1e-12,
            }
        })
        .collect()
}

/// `w_k w_j / W <= 1 - (1 - 2 w_k C / W)^{2 floor(w_j / C)}` at the largest light weight `w_k`.
pub fn bonferroni_check(ws: &WeightSequence, part: &Partition) -> BonferroniReport {
    let c = part.cutoff;
    let big_w = ws.total_weight();
    let light = ws
        .weights()
        .iter()
        .copied()
        .filter(|&w| part.is_light(w))
        .fold(0.0, f64::max);
    let mut pairs = 0;
    let mut violations = 0;
    for &w in ws.weights().iter().filter(|&&w| w >= 2.0 * c) {
        pairs += 1;
        let lhs = edge_probability(light, w, big_w);
        let q = edge_probability(2.0 * light, c, big_w);
        let rhs = 1.0 - (1.0 - q).powi(2 * (w / c).floor() as i32);
        if lhs > rhs {
            violations += 1;
        }
    }
    BonferroniReport {
        light_weight: light,
        pairs,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_lookup() {
        let part = Partition::from_cells(
            vec![
                Cell {
                    lo: 1.0,
                    hi: 2.0,
                    closed: false,
                },
                Cell {
                    lo: 2.0,
                    hi: 5.0,
                    closed: false,
                },
            ],
            5.0,
            0.3,
        )
        .unwrap();
        assert_eq!(part.cell_of(1.0), Some(0));
        assert_eq!(part.cell_of(1.99), Some(0));
        assert_eq!(part.cell_of(2.0), Some(1));
        assert_eq!(part.cell_of(0.5), Some(0));
        assert_eq!(part.cell_of(5.0), None);
    }
}
