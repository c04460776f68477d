//! Fluid limit of the sequential exposure process.
//!
//! State layout: `gamma[i * r + j]` for the rescaled number of healthy class-`i`
//! vertices with `j` marks, followed by `nu` (rescaled `u`), `mu` (rescaled
//! `w_U`) and the accumulated intensity `I`. The system is closed with
//! `G = mu / nu`.

use std::io::Write;

use serde::Serialize;

use crate::discretise::Discretisation;
use crate::error::{Error, Result};
use crate::num::poisson_pmf;
use crate::theory::{self, psi, FixedPointResult, SolveOptions};

/// Parameters of the ODE system.
#[derive(Debug, Clone, Serialize)]
pub struct OdeSystem {
    pub levels: Vec<f64>,
    /// Normalizer per vertex (mean weight of the original sequence).
    pub d: f64,
    pub r: u32,
    /// Upper bound on `G`; leaving it ends the solution.
    pub ratio_cap: Option<f64>,
}

/// Why the right-hand side is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DomainExit {
    NonPositiveNu,
    NonPositiveRatio,
    RatioAboveCap,
}

impl OdeSystem {
    pub fn new(levels: Vec<f64>, d: f64, r: u32, ratio_cap: Option<f64>) -> Result<Self> {
        if levels.is_empty() || levels.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::invalid("ODE levels must be positive and nonempty"));
        }
        if !(d > 0.0) || r == 0 {
            return Err(Error::invalid(format!(
                "ODE needs d > 0 and r >= 1 (d={d}, r={r})"
            )));
        }
        Ok(OdeSystem {
            levels,
            d,
            r,
            ratio_cap,
        })
    }

    /// System for a discretisation; `G` is capped at twice the cutoff.
    pub fn from_discretisation(disc: &Discretisation, r: u32) -> Result<Self> {
        let cap = disc.cutoff.is_finite().then_some(2.0 * disc.cutoff);
        OdeSystem::new(disc.levels.clone(), disc.mean_weight, r, cap)
    }

    pub fn classes(&self) -> usize {
        self.levels.len()
    }

    /// Length of the flat state vector.
    pub fn dim(&self) -> usize {
        self.classes() * self.r as usize + 3
    }

    fn nu_idx(&self) -> usize {
        self.classes() * self.r as usize
    }

    /// Right-hand side, written into `out`.
    pub fn rhs_into(&self, y: &[f64], out: &mut [f64]) -> std::result::Result<f64, DomainExit> {
        let ru = self.r as usize;
        let k = self.nu_idx();
        let (nu, mu) = (y[k], y[k + 1]);
        if !(nu > 0.0) {
            return Err(DomainExit::NonPositiveNu);
        }
        let g = mu / nu;
        if !(g > 0.0) {
            return Err(DomainExit::NonPositiveRatio);
        }
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for (i, &w) in self.levels.iter().enumerate() {
            let rate = w / self.d * g;
            let row = &y[i * ru..(i + 1) * ru];
            out[i * ru] = -row[0] * rate;
            for j in 1..ru {
                out[i * ru + j] = (row[j - 1] - row[j]) * rate;
            }
            s1 += w / self.d * row[ru - 1];
            s2 += w * w / self.d * row[ru - 1];
        }
        out[k] = -1.0 + g * s1;
        out[k + 1] = -g + g * s2;
        out[k + 2] = g;
        Ok(g)
    }
}

/// Right-hand side of the system at `state`.
pub fn ode_rhs(sys: &OdeSystem, state: &[f64]) -> std::result::Result<Vec<f64>, DomainExit> {
    let mut out = vec![0.0; sys.dim()];
    sys.rhs_into(state, &mut out)?;
    Ok(out)
}

/// Initial state for seed probability `p` in `[0, 1)`.
pub fn initial_state(disc: &Discretisation, p: f64, r: u32) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "the fluid limit needs p in [0, 1), got {p}"
        )));
    }
    let ru = r as usize;
    let k = disc.levels.len();
    let mut y = vec![0.0; k * ru + 3];
    for (i, &g) in disc.fractions.iter().enumerate() {
        y[i * ru] = (1.0 - p) * g;
    }
    let seeded_weight: f64 = disc
        .levels
        .iter()
        .zip(&disc.fractions)
        .map(|(w, g)| w * g)
        .sum();
    y[k * ru] = p * (1.0 - disc.gamma) + disc.heavy.count_fraction;
    y[k * ru + 1] = disc.heavy.weight_fraction + p * seeded_weight;
    Ok(y)
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    pub h: f64,
    /// Stop once `mu` falls to this level; defaults to `1e-8 mu(0)`.
    pub eps_domain: Option<f64>,
    /// Smallest step tried when approaching the boundary.
    pub h_min: f64,
    /// Stop at this time even if the domain has not been left.
    pub max_tau: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            h: 1e-4,
            eps_domain: None,
            h_min: 1e-13,
            max_tau: 1e4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    /// `mu` dropped below the domain tolerance.
    MuExhausted,
    /// Steps shrank to the minimum without leaving the domain; `nu` and `mu`
    /// vanish together at the boundary.
    Boundary,
    /// `G` exceeded its cap.
    RatioBlowUp,
    MaxTau,
}

/// Point on the solution.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeState {
    pub gamma: Vec<f64>,
    pub nu: f64,
    pub mu: f64,
    pub i: f64,
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub system: OdeSystem,
    pub tau: Vec<f64>,
    /// Flat states on the `tau` grid.
    pub states: Vec<Vec<f64>>,
    /// Estimated first zero of `mu`.
    pub tau_hat: f64,
    pub i_hat: f64,
    /// `I(tau_hat) / d`.
    pub y_hat: f64,
    pub stop: StopReason,
}

impl OdeSolution {
    pub fn classes(&self) -> usize {
        self.system.classes()
    }

    pub fn r(&self) -> u32 {
        self.system.r
    }

    pub fn tau_end(&self) -> f64 {
        *self.tau.last().unwrap()
    }

    fn unpack(&self, y: &[f64]) -> OdeState {
        let k = self.system.nu_idx();
        OdeState {
            gamma: y[..k].to_vec(),
            nu: y[k],
            mu: y[k + 1],
            i: y[k + 2],
        }
    }

    pub fn state(&self, idx: usize) -> OdeState {
        self.unpack(&self.states[idx])
    }

    /// Linear interpolation on the solution grid; `None` outside it.
    pub fn interpolate(&self, tau: f64) -> Option<OdeState> {
        if tau < 0.0 || tau > self.tau_end() {
            return None;
        }
        let k = self.tau.partition_point(|&t| t <= tau);
        if k == self.tau.len() {
            return Some(self.state(k - 1));
        }
        let (t0, t1) = (self.tau[k - 1], self.tau[k]);
        let a = (tau - t0) / (t1 - t0);
        let y: Vec<f64> = self.states[k - 1]
            .iter()
            .zip(&self.states[k])
            .map(|(x0, x1)| x0 + a * (x1 - x0))
            .collect();
        Some(self.unpack(&y))
    }

    /// CSV with columns `tau,nu,mu_U,I,gamma_i_j` (classes numbered from 1).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "tau,nu,mu_U,I")?;
        for i in 0..self.classes() {
            for j in 0..self.r() {
                write!(out, ",gamma_{}_{}", i + 1, j)?;
            }
        }
        writeln!(out)?;
        let k = self.system.nu_idx();
        for (t, y) in self.tau.iter().zip(&self.states) {
            write!(out, "{t},{},{},{}", y[k], y[k + 1], y[k + 2])?;
            for g in &y[..k] {
                write!(out, ",{g}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(dim: usize) -> Self {
        Rk4 {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    fn stage_ok(
        sys: &OdeSystem,
        g: std::result::Result<f64, DomainExit>,
    ) -> std::result::Result<(), DomainExit> {
        let g = g?;
        match sys.ratio_cap {
            Some(cap) if g > cap => Err(DomainExit::RatioAboveCap),
            _ => Ok(()),
        }
    }

    /// One classical step; `Err` if any stage leaves the domain.
    fn step(
        &mut self,
        sys: &OdeSystem,
        y: &[f64],
        h: f64,
        out: &mut [f64],
    ) -> std::result::Result<(), DomainExit> {
        Self::stage_ok(sys, sys.rhs_into(y, &mut self.k1))?;
        for (t, (a, b)) in self.tmp.iter_mut().zip(y.iter().zip(&self.k1)) {
            *t = a + 0.5 * h * b;
        }
        Self::stage_ok(sys, sys.rhs_into(&self.tmp, &mut self.k2))?;
        for (t, (a, b)) in self.tmp.iter_mut().zip(y.iter().zip(&self.k2)) {
            *t = a + 0.5 * h * b;
        }
        Self::stage_ok(sys, sys.rhs_into(&self.tmp, &mut self.k3))?;
        for (t, (a, b)) in self.tmp.iter_mut().zip(y.iter().zip(&self.k3)) {
            *t = a + h * b;
        }
        Self::stage_ok(sys, sys.rhs_into(&self.tmp, &mut self.k4))?;
        for (idx, o) in out.iter_mut().enumerate() {
            *o = y[idx]
                + h / 6.0 * (self.k1[idx] + 2.0 * self.k2[idx] + 2.0 * self.k3[idx] + self.k4[idx]);
        }
        Ok(())
    }
}

/// Integrates the system with fixed-step RK4 until `mu` is exhausted or the
/// domain is left. Near the boundary the step is halved instead of crossing it.
pub fn integrate(sys: &OdeSystem, init: &[f64], opts: IntegrateOptions) -> Result<OdeSolution> {
    if init.len() != sys.dim() {
        return Err(Error::invalid(format!(
            "state has length {}, expected {}",
            init.len(),
            sys.dim()
        )));
    }
    if !(opts.h > 0.0) || !(opts.h_min > 0.0) {
        return Err(Error::invalid("step sizes must be positive"));
    }
    let k = sys.nu_idx();
    if !(init[k] > 0.0) {
        return Err(Error::DegenerateStart(format!(
            "nu(0) = {} is not positive: nothing is infected",
            init[k]
        )));
    }
    let eps = opts.eps_domain.unwrap_or(1e-8 * init[k + 1]);
    let mut rk = Rk4::new(sys.dim());
    let mut y = init.to_vec();
    let mut next = vec![0.0; sys.dim()];
    let mut tau = 0.0;
    let mut h = opts.h;
    let mut taus = vec![0.0];
    let mut states = vec![y.clone()];
    let stop = loop {
        if y[k + 1] <= eps {
            break StopReason::MuExhausted;
        }
        if tau >= opts.max_tau - 1e-12 * opts.max_tau.max(1.0) {
            break StopReason::MaxTau;
        }
        let hh = h.min(opts.max_tau - tau);
        match rk.step(sys, &y, hh, &mut next) {
            Ok(()) if next[k] > 0.0 && next[k + 1] > 0.0 => {
                tau += hh;
                std::mem::swap(&mut y, &mut next);
                taus.push(tau);
                states.push(y.clone());
            }
            Ok(()) | Err(DomainExit::NonPositiveNu) | Err(DomainExit::NonPositiveRatio) => {
                h *= 0.5;
                if h < opts.h_min {
                    break StopReason::Boundary;
                }
            }
            Err(DomainExit::RatioAboveCap) => {
                h *= 0.5;
                if h < opts.h_min {
                    break StopReason::RatioBlowUp;
                }
            }
        }
    };
    if !y.iter().all(|v| v.is_finite()) {
        return Err(Error::NumericFailure(format!(
            "non-finite ODE state at tau = {tau}"
        )));
    }
    // Extrapolate linearly to the zero of mu from the last state.
    let (mut tau_hat, mut i_hat) = (tau, y[k + 2]);
    if matches!(stop, StopReason::MuExhausted | StopReason::Boundary) {
        if let Ok(g) = sys.rhs_into(&y, &mut next) {
            let dmu = next[k + 1];
            if dmu < 0.0 {
                let dt = y[k + 1] / -dmu;
                tau_hat += dt;
                i_hat += g * dt;
            }
        }
    }
    let y_hat = i_hat / sys.d;
    Ok(OdeSolution {
        system: sys.clone(),
        tau: taus,
        states,
        tau_hat,
        i_hat,
        y_hat,
        stop,
    })
}

/// `gamma_{i,j}` as a function of `I`: `gamma_{i,0}(0) e^{-x} x^j / j!` with `x = W_i I / d`.
pub fn closed_form_gamma(sys: &OdeSystem, init: &[f64], i: usize, j: u32, i_val: f64) -> f64 {
    let x = sys.levels[i] * i_val / sys.d;
    init[i * sys.r as usize] * poisson_pmf(j, x)
}

/// `(nu, mu)` as functions of `tau` and `I`.
pub fn closed_form_nu_mu(sys: &OdeSystem, init: &[f64], i_val: f64, tau: f64) -> (f64, f64) {
    let k = sys.nu_idx();
    let ru = sys.r as usize;
    let mut nu = init[k] - tau;
    let mut mu = init[k + 1] - i_val;
    for (i, &w) in sys.levels.iter().enumerate() {
        let g0 = init[i * ru];
        let ps = psi(sys.r, w * i_val / sys.d);
        nu += g0 * ps;
        mu += w * g0 * ps;
    }
    (nu, mu)
}

/// `mu(x) = W'/d + (p/d) sum W_i gamma_i - x + (1-p) sum (W_i gamma_i / d) psi_r(W_i x)`.
pub fn mu_hat(x: f64, disc: &Discretisation, p: f64, r: u32) -> f64 {
    let d = disc.mean_weight;
    let mut acc = disc.heavy.weight_fraction / d - x;
    for (&w, &g) in disc.levels.iter().zip(&disc.fractions) {
        acc += p * w * g / d + (1.0 - p) * w * g / d * psi(r, w * x);
    }
    acc
}

fn mu_hat_derivative(x: f64, disc: &Discretisation, p: f64, r: u32) -> f64 {
    let d = disc.mean_weight;
    let s: f64 = disc
        .levels
        .iter()
        .zip(&disc.fractions)
        .map(|(&w, &g)| w * w * g / d * poisson_pmf(r - 1, w * x))
        .sum();
    -1.0 + (1.0 - p) * s
}

/// Smallest positive root of `mu_hat`, the discretised fixed point.
pub fn discretised_fixed_point(
    disc: &Discretisation,
    p: f64,
    r: u32,
    opts: SolveOptions,
) -> Result<FixedPointResult> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "the discretised fixed point needs p in [0, 1), got {p}"
        )));
    }
    if r == 0 {
        return Err(Error::invalid("threshold r must be at least 1"));
    }
    let total: f64 = disc
        .levels
        .iter()
        .zip(&disc.fractions)
        .map(|(w, g)| w * g)
        .sum();
    let hi = ((disc.heavy.weight_fraction + total) / disc.mean_weight).max(2.0 * opts.tol);
    let f = |x: f64| Ok(mu_hat(x, disc, p, r));
    let found = theory::smallest_root(f, opts.tol, hi, opts.scan_step, opts.tol)?;
    theory::finish(found, f, |x| Ok(mu_hat_derivative(x, disc, p, r)), opts)
}

/// `alpha(y) = p(1-gamma) + gamma' + (1-p) sum gamma_i psi_r(W_i y)`.
pub fn alpha(y: f64, disc: &Discretisation, p: f64, r: u32) -> f64 {
    let s: f64 = disc
        .levels
        .iter()
        .zip(&disc.fractions)
        .map(|(&w, &g)| g * psi(r, w * y))
        .sum();
    p * (1.0 - disc.gamma) + disc.heavy.count_fraction + (1.0 - p) * s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sums_give_unit_drift() {
        let sys = OdeSystem::new(vec![2.0], 2.0, 2, None).unwrap();
        // gamma_{1,1} = 0, nu = 0.5, mu = 1 => G = 2.
        let d = ode_rhs(&sys, &[0.3, 0.0, 0.5, 1.0, 0.0]).unwrap();
        assert_eq!(d[2], -1.0);
        assert_eq!(d[3], -2.0);
        assert!((d[0] + 0.3 * 2.0).abs() < 1e-15);
        assert_eq!(
            ode_rhs(&sys, &[0.3, 0.0, 0.0, 1.0, 0.0]),
            Err(DomainExit::NonPositiveNu)
        );
    }
}
