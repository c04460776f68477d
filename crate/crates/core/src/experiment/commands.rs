use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::stats::{median, summarize, Summary};
use crate::discretise::{
    build_partition, discretise_minus, sandwich_experiment, Discretisation, SandwichReport,
};
use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::graphgen::sample_chung_lu;
use crate::odeflow::{
    alpha, discretised_fixed_point, integrate, IntegrateOptions, OdeSolution, OdeSystem, StopReason,
};
use crate::percolation::{
    deviation_report, run_bootstrap, run_bootstrap_masked, run_sequential_exposure, seed_bernoulli,
    DeviationReport, ExposureOptions, PercolationTrajectory,
};
use crate::rng::replicate_rng;
use crate::theory::{
    check_derivative_condition, critical_density, final_fraction, powerlaw_fixed_point,
    solve_fixed_point, CriticalDensity, SolveOptions,
};
use crate::weights::{WeightDistribution, WeightSequence};

struct Sink<'a>(Option<&'a Path>);

impl Sink<'_> {
    fn new(cfg: &ExperimentConfig) -> Result<Sink<'_>> {
        if let Some(dir) = cfg.out.as_deref() {
            fs::create_dir_all(dir)?;
        }
        Ok(Sink(cfg.out.as_deref()))
    }

    fn write(&self, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let Some(dir) = self.0 else { return Ok(()) };
        let mut f = BufWriter::new(File::create(dir.join(name))?);
        body(&mut f)?;
        f.flush()?;
        Ok(())
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }
}

fn graph_for(ws: &WeightSequence, seed: u64, index: usize) -> (SparseGraph, crate::rng::SimRng) {
    let mut rng = replicate_rng(seed, index as u64);
    let g = sample_chung_lu(ws, &mut rng);
    (g, rng)
}

#[derive(Debug, Clone, Serialize)]
pub struct GenerateReport {
    pub n: usize,
    pub m: usize,
    pub mean_degree: f64,
    /// `sum_{i<j} min(w_i w_j / W, 1)`.
    pub expected_m: f64,
}

/// Samples one graph from replicate stream 0 and writes `weights.csv`,
/// `graph.bin` and `edges.csv`.
pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<GenerateReport> {
    let ws = cfg.weight_sequence()?;
    let (g, _) = graph_for(&ws, cfg.seed, 0);
    let sink = Sink::new(cfg)?;
    sink.write("weights.csv", |w| ws.write_csv(w))?;
    sink.write("graph.bin", |w| g.write_binary(w))?;
    sink.write("edges.csv", |w| g.write_edge_csv(w))?;
    let expected_m = crate::graphgen::expected_degrees(&ws, ws.total_weight())
        .iter()
        .sum::<f64>()
        / 2.0;
    let report = GenerateReport {
        n: g.n(),
        m: g.m(),
        mean_degree: g.mean_degree(),
        expected_m,
    };
    sink.json("summary.json", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct PercolateReport {
    pub n: usize,
    pub m: usize,
    pub initial_size: usize,
    pub final_size: usize,
    pub fraction: f64,
    pub rounds: usize,
    pub per_round_sizes: Vec<usize>,
}

/// One graph, one seed set, one run; the final set is verified against the graph.
pub fn cmd_percolate(cfg: &ExperimentConfig) -> Result<PercolateReport> {
    let ws = cfg.weight_sequence()?;
    let (g, mut rng) = graph_for(&ws, cfg.seed, 0);
    let seeds = seed_bernoulli(ws.n(), cfg.p(), &mut rng)?;
    let res = run_bootstrap(&g, &seeds, cfg.r)?;
    res.verify(&g, &seeds, cfg.r, None)?;
    let sink = Sink::new(cfg)?;
    sink.write("rounds.csv", |w| {
        writeln!(w, "round,infected")?;
        for (k, s) in res.per_round_sizes.iter().enumerate() {
            writeln!(w, "{k},{s}")?;
        }
        Ok(())
    })?;
    let report = PercolateReport {
        n: g.n(),
        m: g.m(),
        initial_size: res.initial_size,
        final_size: res.final_size,
        fraction: res.fraction(),
        rounds: res.rounds,
        per_round_sizes: res.per_round_sizes,
    };
    sink.json("summary.json", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub initial_size: usize,
    pub final_size: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prediction {
    pub y_hat: f64,
    pub derivative: f64,
    pub fraction: f64,
    pub stable: bool,
}

/// Fixed point and final fraction of the limiting law.
pub fn predict(model: &WeightDistribution, p: f64, r: u32, tol: f64) -> Result<Prediction> {
    let fp = solve_fixed_point(
        &model.size_biased(),
        p,
        r,
        SolveOptions {
            tol,
            ..SolveOptions::default()
        },
    )?;
    let fraction = final_fraction(model, fp.y_hat, p, r)?;
    Ok(Prediction {
        y_hat: fp.y_hat,
        derivative: fp.derivative,
        fraction,
        stable: fp.stable || p == 1.0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LlnReport {
    pub p: f64,
    pub replicates: Vec<ReplicateOutcome>,
    pub summary: Summary,
    pub prediction: Prediction,
    /// `|mean fraction - prediction|`; absent when the fixed point is unstable.
    pub gap: Option<f64>,
    pub within_tolerance: Option<bool>,
}

/// Final fractions over independent graphs and seed sets, against the limit.
pub fn cmd_lln(cfg: &ExperimentConfig) -> Result<LlnReport> {
    let ws = cfg.weight_sequence()?;
    let p = cfg.p();
    let replicates: Vec<ReplicateOutcome> = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| {
            let (g, mut rng) = graph_for(&ws, cfg.seed, i);
            let seeds = seed_bernoulli(ws.n(), p, &mut rng)?;
            let res = run_bootstrap(&g, &seeds, cfg.r)?;
            Ok(ReplicateOutcome {
                replicate: i,
                initial_size: res.initial_size,
                final_size: res.final_size,
                fraction: res.fraction(),
            })
        })
        .collect::<Result<_>>()?;
    let fractions: Vec<f64> = replicates.iter().map(|o| o.fraction).collect();
    let summary = summarize(&fractions);
    let prediction = predict(&cfg.model, p, cfg.r, cfg.tolerances.fixed_point)?;
    let gap = if prediction.stable {
        Some((summary.mean - prediction.fraction).abs())
    } else {
        log::warn!(
            "fixed point is unstable (f' = {}); comparison skipped",
            prediction.derivative
        );
        None
    };
    let report = LlnReport {
        p,
        within_tolerance: gap.map(|g| g < cfg.tolerances.lln_gap),
        replicates,
        summary,
        prediction,
        gap,
    };
    let sink = Sink::new(cfg)?;
    sink.write("lln.csv", |w| {
        writeln!(w, "replicate,A0,Af,fraction")?;
        for o in &report.replicates {
            writeln!(
                w,
                "{},{},{},{}",
                o.replicate, o.initial_size, o.final_size, o.fraction
            )?;
        }
        Ok(())
    })?;
    sink.json("theory.json", &report.prediction)?;
    sink.json("summary.json", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub exponent: f64,
    pub a_n: f64,
    pub initial_sizes: Vec<usize>,
    pub final_sizes: Vec<usize>,
    /// `|A_f| / |A_0|` per replicate; 1 when nothing was seeded.
    pub ratios: Vec<f64>,
    pub fractions: Vec<f64>,
    pub mean_ratio: f64,
    pub mean_fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub critical: CriticalDensity,
    /// `E[psi_r(W y_hat)]` with `y_hat` the unseeded power-law fixed point.
    pub supercritical_fraction: f64,
    pub y_hat: f64,
    pub rows: Vec<ScanRow>,
}

/// Sweeps seed counts `n^a` over the configured exponents. Each replicate
/// samples one graph and draws a fresh seed set per exponent.
pub fn cmd_scan(cfg: &ExperimentConfig) -> Result<ScanReport> {
    let WeightDistribution::PowerLaw { beta, x0, .. } = cfg.model else {
        return Err(Error::invalid("the threshold scan needs a power-law model"));
    };
    if !(beta > 2.0 && beta < 3.0) {
        return Err(Error::invalid(format!(
            "the threshold scan needs 2 < beta < 3, got {beta}"
        )));
    }
    let ws = cfg.weight_sequence()?;
    let n = ws.n();
    let exps = &cfg.scan.exponents;
    let per_rep: Vec<Vec<(usize, usize)>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| {
            let (g, mut rng) = graph_for(&ws, cfg.seed, i);
            exps.iter()
                .map(|&a| {
                    let p = (n as f64).powf(a - 1.0).min(1.0);
                    let seeds = seed_bernoulli(n, p, &mut rng)?;
                    let res = run_bootstrap(&g, &seeds, cfg.r)?;
                    Ok((res.initial_size, res.final_size))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let rows = exps
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let initial_sizes: Vec<usize> = per_rep.iter().map(|r| r[k].0).collect();
            let final_sizes: Vec<usize> = per_rep.iter().map(|r| r[k].1).collect();
            let ratios: Vec<f64> = per_rep
                .iter()
                .map(|r| {
                    if r[k].0 == 0 {
                        1.0
                    } else {
                        r[k].1 as f64 / r[k].0 as f64
                    }
                })
                .collect();
            let fractions: Vec<f64> = final_sizes.iter().map(|&f| f as f64 / n as f64).collect();
            ScanRow {
                exponent: a,
                a_n: (n as f64).powf(a),
                mean_ratio: summarize(&ratios).mean,
                mean_fraction: summarize(&fractions).mean,
                initial_sizes,
                final_sizes,
                ratios,
                fractions,
            }
        })
        .collect();
    let zeta = cfg.zeta().expect("power law");
    let critical = critical_density(n as f64, cfg.r, beta, zeta);
    let fp = powerlaw_fixed_point(beta, x0, cfg.r, cfg.tolerances.fixed_point)?;
    let supercritical_fraction = final_fraction(
        &WeightDistribution::power_law(beta, x0)?,
        fp.y_hat,
        0.0,
        cfg.r,
    )?;
    let report = ScanReport {
        critical,
        supercritical_fraction,
        y_hat: fp.y_hat,
        rows,
    };
    let sink = Sink::new(cfg)?;
    sink.write("scan.csv", |w| {
        writeln!(w, "exponent,a_n,mean_ratio,mean_fraction,critical")?;
        for row in &report.rows {
            let crit = (row.exponent - report.critical.exponent).abs() < 1e-12;
            writeln!(
                w,
                "{},{},{},{},{}",
                row.exponent, row.a_n, row.mean_ratio, row.mean_fraction, crit
            )?;
        }
        Ok(())
    })?;
    sink.json("summary.json", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryReport {
    pub deviations: Vec<DeviationReport>,
    pub max_deviation: Vec<f64>,
    pub median_deviation: f64,
    pub within_tolerance: usize,
    /// Final infected fraction per run.
    pub final_fractions: Vec<f64>,
    /// Exposure steps per vertex until the fluid limit runs out of infected
    /// weight, from the first run's initial state; each step exposes one infected vertex.
    pub ode_fraction: f64,
}

/// Class-structured sequence, seeds and always-infected weights for the exposure process.
fn exposure_input<R: Rng + ?Sized>(
    cfg: &ExperimentConfig,
    ws: &WeightSequence,
    rng: &mut R,
) -> Result<(WeightSequence, Vec<usize>)> {
    let p = cfg.p();
    if ws.class_of().is_some() {
        let seeds = seed_bernoulli(ws.n(), p, rng)?;
        return Ok((ws.clone(), seeds));
    }
    let part = build_partition(&cfg.model, cfg.discretisation.gamma, cfg.discretisation.ell)?;
    let minus = discretise_minus(ws, &part, p, rng)?;
    let mut seeded = vec![false; minus.seq.n()];
    for &h in &minus.always_infected {
        seeded[h] = true;
    }
    let seeds = (0..minus.seq.n())
        .filter(|&k| seeded[k] || rng.random::<f64>() < p)
        .collect();
    Ok((minus.seq, seeds))
}

/// Fluid limit started from the rescaled initial state of a trajectory.
pub fn ode_from_trajectory(
    traj: &PercolationTrajectory,
    levels: &[f64],
    d: f64,
    h: f64,
) -> Result<OdeSolution> {
    let ru = traj.r as usize;
    let nf = traj.n as f64;
    let rec = &traj.records[0];
    let sys = OdeSystem::new(levels.to_vec(), d, traj.r, None)?;
    let mut init = vec![0.0; sys.dim()];
    for (k, &c) in rec.c.iter().enumerate() {
        init[k] = c as f64 / nf;
    }
    let base = traj.classes * ru;
    init[base] = rec.u as f64 / nf;
    init[base + 1] = rec.w_u / nf;
    if rec.u == 0 {
        // Nothing to expose: the fluid limit stays at its starting point.
        return Ok(OdeSolution {
            system: sys,
            tau: vec![0.0],
            states: vec![init],
            tau_hat: 0.0,
            i_hat: 0.0,
            y_hat: 0.0,
            stop: StopReason::MuExhausted,
        });
    }
    integrate(
        &sys,
        &init,
        IntegrateOptions {
            h,
            ..IntegrateOptions::default()
        },
    )
}

/// Sequential exposure runs compared with the fluid limit.
pub fn cmd_trajectory(cfg: &ExperimentConfig) -> Result<TrajectoryReport> {
    let ws = cfg.weight_sequence()?;
    let n = ws.n();
    let normalizer = ws.total_weight();
    let d = normalizer / n as f64;
    let opts = ExposureOptions {
        stride: cfg.trajectory.stride,
    };
    let runs: Vec<(PercolationTrajectory, OdeSolution, DeviationReport)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(cfg.seed, i as u64);
            let (seq, seeds) = exposure_input(cfg, &ws, &mut rng)?;
            let mut traj =
                run_sequential_exposure(&seq, normalizer, &seeds, &[], cfg.r, opts, &mut rng)?;
            traj.n = n;
            let levels = seq.levels().expect("class-structured");
            let sol = ode_from_trajectory(&traj, levels, d, cfg.trajectory.h)?;
            let dev = deviation_report(&traj, &sol, n)?;
            Ok((traj, sol, dev))
        })
        .collect::<Result<_>>()?;
    let max_deviation: Vec<f64> = runs.iter().map(|r| r.2.max).collect();
    let (traj0, sol0, _) = &runs[0];
    let report = TrajectoryReport {
        median_deviation: median(&max_deviation),
        within_tolerance: max_deviation
            .iter()
            .filter(|&&m| m < cfg.tolerances.trajectory_deviation)
            .count(),
        final_fractions: runs
            .iter()
            .map(|r| r.0.final_count as f64 / n as f64)
            .collect(),
        deviations: runs.iter().map(|r| r.2.clone()).collect(),
        max_deviation,
        ode_fraction: sol0.tau_hat,
    };
    let sink = Sink::new(cfg)?;
    sink.write("trajectory.csv", |w| write_joined(w, traj0, sol0))?;
    sink.json("deviation.json", &report)?;
    Ok(report)
}

fn write_joined(w: &mut dyn Write, traj: &PercolationTrajectory, sol: &OdeSolution) -> Result<()> {
    let nf = traj.n as f64;
    write!(w, "t,tau,u_sim,nu_ode,wU_sim,mu_ode")?;
    for i in 0..traj.classes {
        for j in 0..traj.r {
            write!(w, ",c_{0}_{1}_sim,gamma_{0}_{1}_ode", i + 1, j)?;
        }
    }
    writeln!(w)?;
    for rec in &traj.records {
        let tau = rec.t as f64 / nf;
        let Some(z) = sol.interpolate(tau) else {
            continue;
        };
        write!(
            w,
            "{},{tau},{},{},{},{}",
            rec.t,
            rec.u as f64 / nf,
            z.nu,
            rec.w_u / nf,
            z.mu
        )?;
        for (c, g) in rec.c.iter().zip(&z.gamma) {
            write!(w, ",{},{g}", *c as f64 / nf)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Coupled lower/middle runs and an independent upper run; fails with an
/// invariant violation if the coupling breaks in any replicate.
pub fn cmd_sandwich(cfg: &ExperimentConfig) -> Result<SandwichReport> {
    let ws = cfg.weight_sequence()?;
    let part = build_partition(&cfg.model, cfg.discretisation.gamma, cfg.discretisation.ell)?;
    let report = sandwich_experiment(&ws, &part, cfg.p(), cfg.r, cfg.replicates, cfg.seed)?;
    let sink = Sink::new(cfg)?;
    sink.write("sandwich.csv", |w| {
        writeln!(w, "replicate,lower,middle,upper")?;
        for i in 0..report.middle.len() {
            writeln!(
                w,
                "{i},{},{},{}",
                report.lower[i], report.middle[i], report.upper[i]
            )?;
        }
        Ok(())
    })?;
    sink.json("sandwich.json", &report)?;
    if report.coupled_violations > 0 {
        return Err(Error::InvariantViolation(format!(
            "coupling failed in {} of {} replicates",
            report.coupled_violations,
            report.middle.len()
        )));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    pub cutoff: f64,
    pub kernel_size: usize,
    /// Infected share of the kernel per replicate; 1 for an empty kernel.
    pub fractions: Vec<f64>,
    pub vacuous: bool,
}

/// Percolation in which only kernel vertices (weight at least the cutoff)
/// and seeds may ever be infected.
pub fn cmd_kernel(cfg: &ExperimentConfig) -> Result<KernelReport> {
    let ws = cfg.weight_sequence()?;
    let c = cfg.kernel.cutoff;
    let kernel: Vec<bool> = ws.weights().iter().map(|&w| w >= c).collect();
    let kernel_size = kernel.iter().filter(|&&k| k).count();
    let fractions: Vec<f64> = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| {
            if kernel_size == 0 {
                return Ok(1.0);
            }
            let (g, mut rng) = graph_for(&ws, cfg.seed, i);
            let seeds = seed_bernoulli(ws.n(), cfg.p(), &mut rng)?;
            let res = run_bootstrap_masked(&g, &seeds, cfg.r, Some(&kernel))?;
            let hit = (0..ws.n())
                .filter(|&v| kernel[v] && res.infected[v])
                .count();
            Ok(hit as f64 / kernel_size as f64)
        })
        .collect::<Result<_>>()?;
    let report = KernelReport {
        cutoff: c,
        kernel_size,
        fractions,
        vacuous: kernel_size == 0,
    };
    let sink = Sink::new(cfg)?;
    sink.write("kernel.csv", |w| {
        writeln!(w, "replicate,kernel_fraction")?;
        for (i, f) in report.fractions.iter().enumerate() {
            writeln!(w, "{i},{f}")?;
        }
        Ok(())
    })?;
    sink.json("kernel.json", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscretisedPrediction {
    pub gamma: f64,
    pub ell: usize,
    pub y_hat: f64,
    pub fraction: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoryReport {
    pub model: WeightDistribution,
    pub p: f64,
    pub r: u32,
    pub y_hat: f64,
    pub derivative: f64,
    pub derivative_fd: f64,
    pub stable: bool,
    pub exceptional_gap: f64,
    pub fraction: f64,
    pub critical: Option<CriticalDensity>,
    pub discretised: Option<DiscretisedPrediction>,
}

/// Fixed point, derivative condition and predicted fraction, without simulation.
pub fn cmd_theory(cfg: &ExperimentConfig) -> Result<TheoryReport> {
    let p = cfg.p();
    let star = cfg.model.size_biased();
    let opts = SolveOptions {
        tol: cfg.tolerances.fixed_point,
        ..SolveOptions::default()
    };
    let fp = solve_fixed_point(&star, p, cfg.r, opts)?;
    let cond = check_derivative_condition(&star, fp.y_hat, p, cfg.r)?;
    let fraction = final_fraction(&cfg.model, fp.y_hat, p, cfg.r)?;
    let critical = match cfg.model {
        WeightDistribution::PowerLaw { beta, .. } => Some(critical_density(
            cfg.n as f64,
            cfg.r,
            beta,
            cfg.zeta().expect("power law"),
        )),
        _ => None,
    };
    let discretised = if p < 1.0 {
        let disc = if cfg.model.is_continuous() {
            let part =
                build_partition(&cfg.model, cfg.discretisation.gamma, cfg.discretisation.ell)?;
            Discretisation::limit_minus(&cfg.model, &part, p)?
        } else {
            Discretisation::exact(&cfg.model)?
        };
        let dfp = discretised_fixed_point(&disc, p, cfg.r, opts)?;
        Some(DiscretisedPrediction {
            gamma: disc.gamma,
            ell: cfg.discretisation.ell,
            y_hat: dfp.y_hat,
            fraction: alpha(dfp.y_hat, &disc, p, cfg.r),
            stable: dfp.stable,
        })
    } else {
        None
    };
    let report = TheoryReport {
        model: cfg.model.clone(),
        p,
        r: cfg.r,
        y_hat: fp.y_hat,
        derivative: fp.derivative,
        derivative_fd: fp.derivative_fd,
        stable: cond.stable || p == 1.0,
        exceptional_gap: cond.exceptional_gap,
        fraction,
        critical,
        discretised,
    };
    Sink::new(cfg)?.json("theory.json", &report)?;
    Ok(report)
}
