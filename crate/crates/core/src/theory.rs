//! Poisson tails, the limiting fixed-point equation and its solution.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::{poisson_pmf, poisson_saturation, CompensatedSum};
use crate::weights::{Saturation, SizeBiased, WeightDistribution};

/// `P(Po(x) >= r)`.
pub fn psi_r(r: u32, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::invalid(format!("psi_r needs x >= 0, got {x}")));
    }
    Ok(psi(r, x))
}

/// Unchecked `P(Po(x) >= r)` for `x >= 0`.
pub(crate) fn psi(r: u32, x: f64) -> f64 {
    if r == 0 {
        return 1.0;
    }
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    let rf = r as f64;
    if x <= rf {
        // Upper tail directly: terms decrease from j = r on.
        let mut term = poisson_pmf(r, x);
        let mut acc = CompensatedSum::new();
        let mut j = rf;
        while term > 0.0 {
            acc.add(term);
            j += 1.0;
            term *= x / j;
            if term < 1e-18 * acc.value() {
                break;
            }
        }
        acc.value().min(1.0)
    } else {
        if x > poisson_saturation(r) + 200.0 {
            return 1.0;
        }
        let mut acc = CompensatedSum::new();
        for j in 0..r {
            acc.add(poisson_pmf(j, x));
        }
        (1.0 - acc.value()).clamp(0.0, 1.0)
    }
}

fn saturation_for(r: u32, y: f64, value: f64) -> Saturation {
    Saturation {
        from: poisson_saturation(r) / y,
        value,
    }
}

/// `E[psi_r(W* y)]`.
pub fn expected_psi(star: &SizeBiased, y: f64, r: u32) -> Result<f64> {
    if y <= 0.0 {
        return Ok(psi(r, 0.0));
    }
    star.expect(
        |w| psi(r, w * y),
        Some(saturation_for(r, y, 1.0)),
        &[r as f64 / y],
    )
}

/// `E[e^{-W* y} (W* y)^r / r!]`.
pub fn expected_pmf(star: &SizeBiased, y: f64, r: u32) -> Result<f64> {
    if y <= 0.0 {
        return Ok(poisson_pmf(r, 0.0));
    }
    star.expect(
        |w| poisson_pmf(r, w * y),
        Some(saturation_for(r, y, 0.0)),
        &[r as f64 / y],
    )
}

/// `f_r(y; W*, p) = (1-p) E[psi_r(W* y)] + p - y`.
pub fn f_r(y: f64, star: &SizeBiased, p: f64, r: u32) -> Result<f64> {
    check_p(p)?;
    Ok((1.0 - p) * expected_psi(star, y, r)? + p - y)
}

/// Analytic derivative `-1 + (1-p)(r/y) E[pmf_r(W* y)]`.
pub fn f_r_derivative(y: f64, star: &SizeBiased, p: f64, r: u32) -> Result<f64> {
    check_p(p)?;
    if y <= 0.0 {
        return Err(Error::invalid("derivative is evaluated at y > 0 only"));
    }
    if r == 0 || p == 1.0 {
        return Ok(-1.0);
    }
    Ok(-1.0 + (1.0 - p) * (r as f64 / y) * expected_pmf(star, y, r)?)
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "seed probability must lie in [0, 1], got {p}"
        )));
    }
    Ok(())
}

/// Settings for the left-to-right root scan.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Target residual and left end of the scan.
    pub tol: f64,
    pub scan_step: f64,
    /// Half-width of the central difference.
    pub fd_step: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-12,
            scan_step: 1e-4,
            fd_step: 1e-7,
        }
    }
}

/// Smallest root of a scalar equation found by scan plus bisection.
#[derive(Debug, Clone, Serialize)]
pub struct FixedPointResult {
    pub y_hat: f64,
    pub residual: f64,
    /// Analytic derivative at the root.
    pub derivative: f64,
    /// Central finite-difference derivative at the root.
    pub derivative_fd: f64,
    pub stable: bool,
    pub bracket: (f64, f64),
    /// No sign change was found; the right end of the scan was returned.
    pub boundary_root: bool,
    /// The function is negative right after zero and never changes sign: only the trivial root exists.
    pub zero_root: bool,
    /// Scan grid `(y, f(y))` up to and including the bracketing point.
    #[serde(skip)]
    pub scan: Vec<(f64, f64)>,
}

pub(crate) struct RootScan {
    pub root: f64,
    pub residual: f64,
    pub bracket: (f64, f64),
    pub boundary: bool,
    pub zero: bool,
    pub scan: Vec<(f64, f64)>,
}

/// Scans `[lo, hi]` at `step` for the first sign change of `f` and bisects it.
pub(crate) fn smallest_root<F>(f: F, lo: f64, hi: f64, step: f64, tol: f64) -> Result<RootScan>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(step > 0.0) || !(hi > lo) {
        return Err(Error::invalid(format!(
            "bad scan range [{lo}, {hi}] with step {step}"
        )));
    }
    let mut scan = Vec::new();
    let f0 = f(lo)?;
    scan.push((lo, f0));
    if f0 == 0.0 {
        return Ok(RootScan {
            root: lo,
            residual: 0.0,
            bracket: (lo, lo),
            boundary: false,
            zero: false,
            scan,
        });
    }
    let steps = ((hi - lo) / step).ceil() as usize;
    let (mut a, mut fa) = (lo, f0);
    for k in 1..=steps {
        let b = if k == steps { hi } else { lo + k as f64 * step };
        let fb = f(b)?;
        scan.push((b, fb));
        if fb == 0.0 {
            return Ok(RootScan {
                root: b,
                residual: 0.0,
                bracket: (a, b),
                boundary: false,
                zero: false,
                scan,
            });
        }
        if fb.signum() != fa.signum() {
            let (root, residual) = bisect(&f, a, fa, b, tol)?;
            return Ok(RootScan {
                root,
                residual,
                bracket: (a, b),
                boundary: false,
                zero: false,
                scan,
            });
        }
        a = b;
        fa = fb;
    }
    if f0 < 0.0 {
        Ok(RootScan {
            root: 0.0,
            residual: 0.0,
            bracket: (0.0, lo),
            boundary: false,
            zero: true,
            scan,
        })
    } else {
        Ok(RootScan {
            root: hi,
            residual: fa.abs(),
            bracket: (hi, hi),
            boundary: true,
            zero: false,
            scan,
        })
    }
}

fn bisect<F>(f: &F, mut a: f64, fa: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let sa = fa.signum();
    let mut best = (a, fa.abs());
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        if fm.abs() < best.1 {
            best = (m, fm.abs());
        }
        if fm == 0.0 {
            return Ok((m, 0.0));
        }
        if fm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
        if fm.abs() < tol && (b - a) < tol {
            return Ok((m, fm.abs()));
        }
    }
    Ok(best)
}

/// Smallest positive root of `f_r(y; W*, p) = 0` on `[tol, 1]`.
pub fn solve_fixed_point(
    star: &SizeBiased,
    p: f64,
    r: u32,
    opts: SolveOptions,
) -> Result<FixedPointResult> {
    check_p(p)?;
    if p == 1.0 {
        return Ok(FixedPointResult {
            y_hat: 1.0,
            residual: 0.0,
            derivative: -1.0,
            derivative_fd: -1.0,
            stable: true,
            bracket: (1.0, 1.0),
            boundary_root: false,
            zero_root: false,
            scan: vec![(1.0, 0.0)],
        });
    }
    let found = smallest_root(
        |y| f_r(y, star, p, r),
        opts.tol,
        1.0,
        opts.scan_step,
        opts.tol,
    )?;
    finish(
        found,
        |y| f_r(y, star, p, r),
        |y| f_r_derivative(y, star, p, r),
        opts,
    )
}

pub(crate) fn finish<F, D>(
    found: RootScan,
    f: F,
    df: D,
    opts: SolveOptions,
) -> Result<FixedPointResult>
where
    F: Fn(f64) -> Result<f64>,
    D: Fn(f64) -> Result<f64>,
{
    let y = found.root;
    let (derivative, derivative_fd) = if y > opts.fd_step {
        let h = opts.fd_step;
        (df(y)?, (f(y + h)? - f(y - h)?) / (2.0 * h))
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(FixedPointResult {
        y_hat: y,
        residual: found.residual,
        derivative,
        derivative_fd,
        stable: derivative < -1e-9,
        bracket: found.bracket,
        boundary_root: found.boundary,
        zero_root: found.zero,
        scan: found.scan,
    })
}

/// Predicted final fraction `(1-p) E[psi_r(W y_hat)] + p`.
pub fn final_fraction(dist: &WeightDistribution, y_hat: f64, p: f64, r: u32) -> Result<f64> {
    check_p(p)?;
    if y_hat <= 0.0 {
        return Ok(p);
    }
    let e = dist.expect(
        |w| psi(r, w * y_hat),
        Some(saturation_for(r, y_hat, 1.0)),
        &[r as f64 / y_hat],
    )?;
    Ok((1.0 - p) * e + p)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DerivativeCondition {
    pub stable: bool,
    pub derivative: f64,
    /// `|E[e^{-y W*}(W* y)^r / r!] - y / ((1-p) r)|`; zero exactly in the exceptional case.
    pub exceptional_gap: f64,
}

pub fn check_derivative_condition(
    star: &SizeBiased,
    y_hat: f64,
    p: f64,
    r: u32,
) -> Result<DerivativeCondition> {
    let derivative = f_r_derivative(y_hat, star, p, r)?;
    let exceptional_gap = if p == 1.0 {
        f64::INFINITY
    } else {
        (expected_pmf(star, y_hat, r)? - y_hat / ((1.0 - p) * r as f64)).abs()
    };
    Ok(DerivativeCondition {
        stable: derivative < -1e-9,
        derivative,
        exceptional_gap,
    })
}

/// Smallest positive root of `y = E[psi_r(W* y)]` for an uncapped power law, no seeds.
pub fn powerlaw_fixed_point(beta: f64, x0: f64, r: u32, tol: f64) -> Result<FixedPointResult> {
    let dist = WeightDistribution::power_law(beta, x0)?;
    solve_fixed_point(
        &dist.size_biased(),
        0.0,
        r,
        SolveOptions {
            tol,
            ..SolveOptions::default()
        },
    )
}

/// Critical seed scale `a_c(n) = n^{(r(1-zeta) + zeta(beta-1) - 1)/r}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CriticalDensity {
    pub exponent: f64,
    pub a_c: f64,
    /// Whether `(r-1)/(2r-beta+1) < zeta <= 1/(beta-1)`.
    pub zeta_in_range: bool,
}

pub fn critical_density(n: f64, r: u32, beta: f64, zeta: f64) -> CriticalDensity {
    let rf = r as f64;
    let exponent = (rf * (1.0 - zeta) + zeta * (beta - 1.0) - 1.0) / rf;
    let lower = (rf - 1.0) / (2.0 * rf - beta + 1.0);
    let upper = 1.0 / (beta - 1.0);
    let zeta_in_range = zeta > lower && zeta <= upper + 1e-12;
    if !zeta_in_range {
        log::warn!("zeta = {zeta} lies outside ({lower}, {upper}]; the threshold is only an upper estimate");
    }
    CriticalDensity {
        exponent,
        a_c: n.powf(exponent),
        zeta_in_range,
    }
}

/// JSON record of a theory evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct TheoryRecord {
    pub inputs: serde_json::Value,
    pub y_hat: f64,
    pub derivative: f64,
    pub fraction: f64,
    pub stable: bool,
}
