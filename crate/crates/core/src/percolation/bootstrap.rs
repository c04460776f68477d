use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::graphgen::geometric_subset;

/// Outcome of bootstrap percolation on a fixed graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PercolationResult {
    pub infected: Vec<bool>,
    pub initial_size: usize,
    pub final_size: usize,
    /// Number of synchronous waves that infected at least one vertex.
    pub rounds: usize,
    /// Infected count after each wave, starting with the seed count.
    pub per_round_sizes: Vec<usize>,
}

impl PercolationResult {
    pub fn fraction(&self) -> f64 {
        self.final_size as f64 / self.infected.len().max(1) as f64
    }

    /// Checks that the seeds are infected, that every other infected vertex has
    /// at least `r` infected neighbors, and that no healthy eligible vertex does.
    pub fn verify(
        &self,
        g: &SparseGraph,
        seeds: &[usize],
        r: u32,
        eligible: Option<&[bool]>,
    ) -> Result<()> {
        let mut seeded = vec![false; g.n()];
        for &s in seeds {
            if !self.infected[s] {
                return Err(Error::InvariantViolation(format!(
                    "seed {s} is not in the final set"
                )));
            }
            seeded[s] = true;
        }
        for v in 0..g.n() {
            let k = g
                .neighbors(v)
                .iter()
                .filter(|&&u| self.infected[u as usize])
                .count();
            if self.infected[v] && !seeded[v] && k < r as usize {
                return Err(Error::InvariantViolation(format!(
                    "vertex {v} infected with {k} < {r} infected neighbors"
                )));
            }
            let can = eligible.is_none_or(|e| e[v]);
            if !self.infected[v] && can && k >= r as usize {
                return Err(Error::InvariantViolation(format!(
                    "vertex {v} healthy with {k} >= {r} infected neighbors"
                )));
            }
        }
        Ok(())
    }
}

fn check_inputs(g: &SparseGraph, seeds: &[usize], r: u32) -> Result<()> {
    if r == 0 {
        return Err(Error::invalid("threshold r must be at least 1"));
    }
    if let Some(&s) = seeds.iter().find(|&&s| s >= g.n()) {
        return Err(Error::invalid(format!(
            "seed {s} out of range for n = {}",
            g.n()
        )));
    }
    Ok(())
}

/// Runs threshold-`r` bootstrap percolation from `seeds` to its final set.
pub fn run_bootstrap(g: &SparseGraph, seeds: &[usize], r: u32) -> Result<PercolationResult> {
    run_bootstrap_masked(g, seeds, r, None)
}

/// As [`run_bootstrap`], but only vertices with `eligible[v]` may become
/// infected after time zero. Seeds are infected regardless.
pub fn run_bootstrap_masked(
    g: &SparseGraph,
    seeds: &[usize],
    r: u32,
    eligible: Option<&[bool]>,
) -> Result<PercolationResult> {
    check_inputs(g, seeds, r)?;
    if eligible.is_some_and(|e| e.len() != g.n()) {
        return Err(Error::invalid(
            "eligibility mask must have one entry per vertex",
        ));
    }
    let n = g.n();
    let mut infected = vec![false; n];
    let mut frontier = Vec::with_capacity(seeds.len());
    for &s in seeds {
        if !infected[s] {
            infected[s] = true;
            frontier.push(s as u32);
        }
    }
    let initial_size = frontier.len();
    let mut count = vec![0u32; n];
    let mut per_round_sizes = vec![initial_size];
    let mut total = initial_size;
    let mut next = Vec::new();
    // Vertices infected in wave k only reach the counters after wave k is
    // complete, so the waves coincide with synchronous rounds.
    while !frontier.is_empty() {
        for &v in &frontier {
            for &u in g.neighbors(v as usize) {
                let u = u as usize;
                if infected[u] || eligible.is_some_and(|e| !e[u]) {
                    continue;
                }
                count[u] += 1;
                if count[u] == r {
                    infected[u] = true;
                    next.push(u as u32);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        total += next.len();
        per_round_sizes.push(total);
        std::mem::swap(&mut frontier, &mut next);
        next.clear();
    }
    Ok(PercolationResult {
        infected,
        initial_size,
        final_size: total,
        rounds: per_round_sizes.len() - 1,
        per_round_sizes,
    })
}

/// Reference engine: recount every healthy vertex each round.
pub fn run_bootstrap_synchronous(
    g: &SparseGraph,
    seeds: &[usize],
    r: u32,
) -> Result<PercolationResult> {
    check_inputs(g, seeds, r)?;
    let n = g.n();
    let mut infected = vec![false; n];
    for &s in seeds {
        infected[s] = true;
    }
    let initial_size = infected.iter().filter(|&&b| b).count();
    let mut per_round_sizes = vec![initial_size];
    loop {
        let newly: Vec<usize> = (0..n)
            .filter(|&v| !infected[v])
            .filter(|&v| {
                g.neighbors(v)
                    .iter()
                    .filter(|&&u| infected[u as usize])
                    .count()
                    >= r as usize
            })
            .collect();
        if newly.is_empty() {
            break;
        }
        for v in newly {
            infected[v] = true;
        }
        per_round_sizes.push(infected.iter().filter(|&&b| b).count());
    }
    Ok(PercolationResult {
        final_size: *per_round_sizes.last().unwrap(),
        initial_size,
        rounds: per_round_sizes.len() - 1,
        per_round_sizes,
        infected,
    })
}

/// Includes each of `0..n` independently with probability `p`.
pub fn seed_bernoulli<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "seed probability must lie in [0, 1], got {p}"
        )));
    }
    let mut seeds = Vec::new();
    geometric_subset(n as u64, p, rng, |k| seeds.push(k as usize));
    Ok(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waves_are_counted() {
        // Path 0-1-2-3 with a chord 0-2; r = 2 from {0, 1}: 2 sees 0 and 1, then 3 needs two.
        let g = SparseGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 2)]).unwrap();
        let res = run_bootstrap(&g, &[0, 1], 2).unwrap();
        assert_eq!(res.per_round_sizes, vec![2, 3]);
        assert_eq!(res.rounds, 1);
        res.verify(&g, &[0, 1], 2, None).unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        let g = SparseGraph::empty(3);
        assert!(run_bootstrap(&g, &[3], 2).is_err());
        assert!(run_bootstrap(&g, &[0], 0).is_err());
    }
}
