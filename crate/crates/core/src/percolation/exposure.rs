use std::io::Write;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphgen::edge_probability;
use crate::num::CompensatedSum;
use crate::odeflow::OdeSolution;
use crate::weights::WeightSequence;

/// State `V(t) = (u, w_U, c_{i,j})` after `t` exposures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub t: usize,
    /// Infected vertices not yet exposed.
    pub u: usize,
    /// Total weight of those vertices.
    pub w_u: f64,
    /// Healthy vertices of class `i` carrying `j` marks, at index `i * r + j`.
    pub c: Vec<usize>,
    /// Vertices whose mark count reached `r` at step `t`.
    pub newly_infected: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PercolationTrajectory {
    pub classes: usize,
    pub r: u32,
    /// Vertex count used for rescaling.
    pub n: usize,
    pub records: Vec<TrajectoryRecord>,
    /// Steps executed, which equals the number of vertices ever infected.
    pub final_count: usize,
    /// Light vertices infected during the process, seeds included.
    pub final_light_infected: usize,
}

impl PercolationTrajectory {
    pub fn c(&self, rec: &TrajectoryRecord, i: usize, j: usize) -> usize {
        rec.c[i * self.r as usize + j]
    }

    /// CSV with columns `t,u,w_U,c_i_j` (classes numbered from 1).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "t,u,w_U")?;
        for i in 0..self.classes {
            for j in 0..self.r {
                write!(out, ",c_{}_{}", i + 1, j)?;
            }
        }
        writeln!(out)?;
        for rec in &self.records {
            write!(out, "{},{},{}", rec.t, rec.u, rec.w_u)?;
            for c in &rec.c {
                write!(out, ",{c}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExposureOptions {
    /// Record every `stride`-th state; the first and last are always kept.
    pub stride: usize,
}

impl Default for ExposureOptions {
    fn default() -> Self {
        ExposureOptions { stride: 1 }
    }
}

/// Runs the sequential exposure process on a class-structured sequence.
///
/// `seeds` are vertices of `ws` infected at time zero. `always_infected`
/// lists the weights of extra vertices that start in `U`. At each step one
/// vertex `v` of `U` is chosen uniformly and exposed: every healthy vertex of
/// class `i` independently receives a mark with probability
/// `min(W_i w_v / normalizer, 1)` and moves up one level; vertices reaching
/// `r` marks join `U`. The run ends when `U` is empty.
pub fn run_sequential_exposure<R: Rng + ?Sized>(
    ws: &WeightSequence,
    normalizer: f64,
    seeds: &[usize],
    always_infected: &[f64],
    r: u32,
    opts: ExposureOptions,
    rng: &mut R,
) -> Result<PercolationTrajectory> {
    let (Some(levels), Some(class_of)) = (ws.levels(), ws.class_of()) else {
        return Err(Error::invalid(
            "sequential exposure needs a class-structured weight sequence",
        ));
    };
    if r == 0 {
        return Err(Error::invalid("threshold r must be at least 1"));
    }
    if !(normalizer > 0.0) {
        return Err(Error::invalid(format!(
            "normalizer must be positive, got {normalizer}"
        )));
    }
    let k = levels.len();
    let ru = r as usize;
    let mut c = vec![0usize; k * ru];
    let mut u_class = vec![0usize; k];
    let mut seeded = vec![false; ws.n()];
    for &s in seeds {
        if s >= ws.n() {
            return Err(Error::invalid(format!(
                "seed {s} out of range for n = {}",
                ws.n()
            )));
        }
        seeded[s] = true;
    }
    for (v, &cls) in class_of.iter().enumerate() {
        if seeded[v] {
            u_class[cls as usize] += 1;
        } else {
            c[cls as usize * ru] += 1;
        }
    }
    let mut heavy: Vec<f64> = always_infected.to_vec();
    let mut heavy_sum = CompensatedSum::new();
    for &w in &heavy {
        if !(w > 0.0) {
            return Err(Error::invalid(format!(
                "always-infected weights must be positive, got {w}"
            )));
        }
        heavy_sum.add(w);
    }
    let light_w_u = |u_class: &[usize]| -> f64 {
        u_class
            .iter()
            .zip(levels)
            .map(|(&m, &w)| m as f64 * w)
            .sum()
    };
    let u0 = u_class.iter().sum::<usize>() + heavy.len();
    let stride = opts.stride.max(1);
    let mut records = vec![TrajectoryRecord {
        t: 0,
        u: u0,
        w_u: light_w_u(&u_class) + heavy_sum.value(),
        c: c.clone(),
        newly_infected: 0,
    }];
    let mut u = u0;
    let mut t = 0;
    let mut marks = vec![0usize; ru];
    while u > 0 {
        // Pick a uniform member of U: heavy vertices first, then light by class.
        let pick = rng.random_range(0..u);
        let w_v = if pick < heavy.len() {
            let w = heavy.swap_remove(pick);
            heavy_sum.add(-w);
            w
        } else {
            let mut rest = pick - heavy.len();
            let mut cls = 0;
            while rest >= u_class[cls] {
                rest -= u_class[cls];
                cls += 1;
            }
            u_class[cls] -= 1;
            levels[cls]
        };
        u -= 1;
        t += 1;
        let mut newly = 0;
        for (i, &w_i) in levels.iter().enumerate() {
            let q = edge_probability(w_i, w_v, normalizer);
            let row = &mut c[i * ru..(i + 1) * ru];
            for j in 0..ru {
                marks[j] = if row[j] == 0 || q <= 0.0 {
                    0
                } else if q >= 1.0 {
                    row[j]
                } else {
                    Binomial::new(row[j] as u64, q)
                        .expect("valid binomial")
                        .sample(rng) as usize
                };
            }
            for j in 0..ru {
                row[j] -= marks[j];
                if j + 1 < ru {
                    row[j + 1] += marks[j];
                }
            }
            u_class[i] += marks[ru - 1];
            newly += marks[ru - 1];
        }
        u += newly;
        if t % stride == 0 || u == 0 {
            records.push(TrajectoryRecord {
                t,
                u,
                w_u: (light_w_u(&u_class) + heavy_sum.value()).max(0.0),
                c: c.clone(),
                newly_infected: newly,
            });
        }
    }
    let counts = ws.class_counts().expect("class-structured");
    let healthy: usize = c.iter().sum();
    Ok(PercolationTrajectory {
        classes: k,
        r,
        n: ws.n(),
        records,
        final_count: t,
        final_light_infected: counts.iter().sum::<usize>() - healthy,
    })
}

/// Largest rescaled gaps between a simulated trajectory and the fluid limit.
#[derive(Debug, Clone, Serialize)]
pub struct DeviationReport {
    pub u: f64,
    pub w_u: f64,
    /// Per `c_{i,j}`, indexed as in the trajectory.
    pub c: Vec<f64>,
    /// Maximum over all coordinates.
    pub max: f64,
    pub compared: usize,
    /// Records beyond the solved range of the ODE were skipped.
    pub truncated: bool,
}

/// `sup_t |Y(t)/n - z(t/n)|` per coordinate, over the records whose rescaled
/// time lies inside the ODE solution.
pub fn deviation_report(
    traj: &PercolationTrajectory,
    sol: &OdeSolution,
    n: usize,
) -> Result<DeviationReport> {
    if sol.classes() != traj.classes || sol.r() != traj.r {
        return Err(Error::invalid(
            "trajectory and ODE solution have different class structure",
        ));
    }
    let nf = n as f64;
    let mut rep = DeviationReport {
        u: 0.0,
        w_u: 0.0,
        c: vec![0.0; traj.classes * traj.r as usize],
        max: 0.0,
        compared: 0,
        truncated: false,
    };
    for rec in &traj.records {
        let tau = rec.t as f64 / nf;
        let Some(z) = sol.interpolate(tau) else {
            rep.truncated = true;
            continue;
        };
        rep.u = rep.u.max((rec.u as f64 / nf - z.nu).abs());
        rep.w_u = rep.w_u.max((rec.w_u / nf - z.mu).abs());
        for (k, &ck) in rec.c.iter().enumerate() {
            rep.c[k] = rep.c[k].max((ck as f64 / nf - z.gamma[k]).abs());
        }
        rep.compared += 1;
    }
    rep.max = rep.c.iter().copied().fold(rep.u.max(rep.w_u), f64::max);
    Ok(rep)
}
