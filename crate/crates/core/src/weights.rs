//! Vertex weight sequences and their limiting laws.

use std::io::{BufRead, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::compensated_sum;
use crate::quad::{self, QuadOptions};

/// Nondecreasing sequence of positive vertex weights, optionally grouped into
/// classes that share a weight value.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    weights: Vec<f64>,
    class_of: Option<Vec<u32>>,
    levels: Option<Vec<f64>>,
    total_weight: f64,
}

impl WeightSequence {
    /// Builds a sequence from arbitrary positive weights; they are sorted.
    pub fn new(mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid(
                "a weight sequence needs at least one vertex",
            ));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::invalid(format!(
                "weights must be positive and finite, got {w}"
            )));
        }
        weights.sort_by(f64::total_cmp);
        let total_weight = compensated_sum(weights.iter().copied());
        Ok(WeightSequence {
            weights,
            class_of: None,
            levels: None,
            total_weight,
        })
    }

    /// Builds a class-structured sequence: vertex `v` has weight `levels[class_of[v]]`.
    /// Levels must be strictly increasing; vertices are reordered by class.
    pub fn with_classes(levels: Vec<f64>, mut class_of: Vec<u32>) -> Result<Self> {
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("class levels must be strictly increasing"));
        }
        if let Some(c) = class_of.iter().find(|&&c| c as usize >= levels.len()) {
            return Err(Error::invalid(format!(
                "class index {c} out of range for {} levels",
                levels.len()
            )));
        }
        class_of.sort_unstable();
        let weights: Vec<f64> = class_of.iter().map(|&c| levels[c as usize]).collect();
        let mut ws = WeightSequence::new(weights)?;
        ws.class_of = Some(class_of);
        ws.levels = Some(levels);
        Ok(ws)
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, v: usize) -> f64 {
        self.weights[v]
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn mean(&self) -> f64 {
        self.total_weight / self.n() as f64
    }

    pub fn min_weight(&self) -> f64 {
        self.weights[0]
    }

    pub fn max_weight(&self) -> f64 {
        self.weights[self.n() - 1]
    }

    pub fn class_of(&self) -> Option<&[u32]> {
        self.class_of.as_deref()
    }

    pub fn levels(&self) -> Option<&[f64]> {
        self.levels.as_deref()
    }

    /// Number of vertices per class, if the sequence is class-structured.
    pub fn class_counts(&self) -> Option<Vec<usize>> {
        let (levels, class_of) = (self.levels.as_ref()?, self.class_of.as_ref()?);
        let mut counts = vec![0; levels.len()];
        for &c in class_of {
            counts[c as usize] += 1;
        }
        Some(counts)
    }

    /// Groups equal weights into classes. Useful for sequences with few distinct values.
    pub fn classify(&self) -> WeightSequence {
        let mut levels: Vec<f64> = Vec::new();
        let mut class_of = Vec::with_capacity(self.n());
        for &w in &self.weights {
            if levels.last() != Some(&w) {
                levels.push(w);
            }
            class_of.push((levels.len() - 1) as u32);
        }
        WeightSequence {
            weights: self.weights.clone(),
            class_of: Some(class_of),
            levels: Some(levels),
            total_weight: self.total_weight,
        }
    }

    /// Number of distinct weight values.
    pub fn distinct_count(&self) -> usize {
        match &self.levels {
            Some(l) => l.len(),
            None => 1 + self.weights.windows(2).filter(|w| w[0] != w[1]).count(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "weight")?;
        for w in &self.weights {
            writeln!(out, "{w}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?;
        if header.as_deref().map(str::trim) != Some("weight") {
            return Err(Error::Format(
                "weight CSV must start with the header \"weight\"".into(),
            ));
        }
        let mut weights = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let w: f64 = t
                .parse()
                .map_err(|_| Error::Format(format!("line {}: cannot parse weight {t:?}", k + 2)))?;
            weights.push(w);
        }
        WeightSequence::new(weights)
    }
}

/// All `n` weights equal to `d`.
pub fn make_point_mass(d: f64, n: usize) -> Result<WeightSequence> {
    if !(d > 0.0 && d.is_finite()) || n == 0 {
        return Err(Error::invalid(format!(
            "point mass needs d > 0 and n >= 1, got d={d}, n={n}"
        )));
    }
    Ok(WeightSequence {
        weights: vec![d; n],
        class_of: Some(vec![0; n]),
        levels: Some(vec![d]),
        total_weight: d * n as f64,
    })
}

/// `w_i = d (n / (i + i0))^{1/(beta-1)}` for `i = 1..=n`, sorted.
pub fn make_power_law(n: usize, d: f64, beta: f64, i0: f64) -> Result<WeightSequence> {
    if !(beta > 2.0) {
        return Err(Error::invalid(format!(
            "power law needs beta > 2, got {beta}"
        )));
    }
    if n == 0 || !(d > 0.0) || !(i0 >= 0.0) {
        return Err(Error::invalid(format!(
            "power law needs n >= 1, d > 0, i0 >= 0 (n={n}, d={d}, i0={i0})"
        )));
    }
    let e = 1.0 / (beta - 1.0);
    let nf = n as f64;
    let weights = (1..=n)
        .rev()
        .map(|i| d * (nf / (i as f64 + i0)).powf(e))
        .collect();
    WeightSequence::new(weights)
}

/// Offset `i0` for which the largest weight of [`make_power_law`] equals `n^zeta`.
/// Clamped at zero when the cap exceeds the uncapped maximum `d n^{1/(beta-1)}`.
pub fn power_law_i0_for_cap(n: usize, d: f64, beta: f64, zeta: f64) -> f64 {
    let nf = n as f64;
    (nf.powf(1.0 - zeta * (beta - 1.0)) * d.powf(beta - 1.0) - 1.0).max(0.0)
}

/// Mixture sequence with `round(n p_k)` vertices at `values[k]`, rounding by
/// largest remainder so that the counts sum to `n`.
pub fn make_mixture(values: &[f64], probs: &[f64], n: usize) -> Result<WeightSequence> {
    let dist = WeightDistribution::mixture(values.to_vec(), probs.to_vec())?;
    let WeightDistribution::Mixture { values, probs } = &dist else {
        unreachable!()
    };
    let exact: Vec<f64> = probs.iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let short = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    for &k in order.iter().take(short) {
        counts[k] += 1;
    }
    let mut class_of = Vec::with_capacity(n);
    let mut levels = Vec::new();
    for (k, &c) in counts.iter().enumerate() {
        if c > 0 {
            levels.push(values[k]);
            class_of.extend(std::iter::repeat_n((levels.len() - 1) as u32, c));
        }
    }
    WeightSequence::with_classes(levels, class_of)
}

/// Fraction of weights at most `x`.
pub fn empirical_cdf(ws: &WeightSequence, x: f64) -> f64 {
    ws.weights.partition_point(|&w| w <= x) as f64 / ws.n() as f64
}

/// Limiting weight law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightDistribution {
    PointMass {
        d: f64,
    },
    /// Atoms `values[k]` with probabilities `probs[k]`; values strictly increasing.
    Mixture {
        values: Vec<f64>,
        probs: Vec<f64>,
    },
    /// `F(x) = 1 - c x^{1-beta}` on `[x0, cap)` with `c = x0^{beta-1}`; the
    /// remaining mass sits in an atom at `cap` when a cap is given.
    PowerLaw {
        beta: f64,
        x0: f64,
        cap: Option<f64>,
    },
}

/// Point beyond which an integrand is constant, used to close expectations
/// against heavy tails analytically.
#[derive(Debug, Clone, Copy)]
pub struct Saturation {
    pub from: f64,
    pub value: f64,
}

impl WeightDistribution {
    pub fn point_mass(d: f64) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::invalid(format!("point mass needs d > 0, got {d}")));
        }
        Ok(WeightDistribution::PointMass { d })
    }

    /// Mixture law; equal values are merged and probabilities must sum to 1.
    pub fn mixture(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(Error::invalid(
                "mixture needs matching, nonempty values and probabilities",
            ));
        }
        if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) || probs.iter().any(|p| !(*p >= 0.0))
        {
            return Err(Error::invalid(
                "mixture values must be positive and probabilities nonnegative",
            ));
        }
        let total: f64 = compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "mixture probabilities sum to {total}, not 1"
            )));
        }
        let mut pairs: Vec<(f64, f64)> = values
            .into_iter()
            .zip(probs)
            .filter(|p| p.1 > 0.0)
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut vs: Vec<f64> = Vec::new();
        let mut ps: Vec<f64> = Vec::new();
        for (v, p) in pairs {
            if vs.last() == Some(&v) {
                *ps.last_mut().unwrap() += p;
            } else {
                vs.push(v);
                ps.push(p);
            }
        }
        for p in ps.iter_mut() {
            *p /= total;
        }
        Ok(WeightDistribution::Mixture {
            values: vs,
            probs: ps,
        })
    }

    pub fn power_law(beta: f64, x0: f64) -> Result<Self> {
        Self::check_power_law(beta, x0)?;
        Ok(WeightDistribution::PowerLaw {
            beta,
            x0,
            cap: None,
        })
    }

    /// Power law whose mass above `cap` is moved into an atom at `cap`.
    pub fn truncated_power_law(beta: f64, x0: f64, cap: f64) -> Result<Self> {
        Self::check_power_law(beta, x0)?;
        if !(cap > x0 && cap.is_finite()) {
            return Err(Error::invalid(format!("cap {cap} must exceed x0 {x0}")));
        }
        Ok(WeightDistribution::PowerLaw {
            beta,
            x0,
            cap: Some(cap),
        })
    }

    fn check_power_law(beta: f64, x0: f64) -> Result<()> {
        if !(beta > 2.0 && beta.is_finite()) {
            return Err(Error::invalid(format!(
                "power law needs beta > 2 for a finite mean, got {beta}"
            )));
        }
        if !(x0 > 0.0 && x0.is_finite()) {
            return Err(Error::invalid(format!("power law needs x0 > 0, got {x0}")));
        }
        Ok(())
    }

    /// Power-law constant `c = x0^{beta-1}`; `None` for other kinds.
    pub fn c(&self) -> Option<f64> {
        match *self {
            WeightDistribution::PowerLaw { beta, x0, .. } => Some(x0.powf(beta - 1.0)),
            _ => None,
        }
    }

    /// Smallest point of the support.
    pub fn x0(&self) -> f64 {
        match self {
            WeightDistribution::PointMass { d } => *d,
            WeightDistribution::Mixture { values, .. } => values[0],
            WeightDistribution::PowerLaw { x0, .. } => *x0,
        }
    }

    /// Atoms as `(location, mass)`.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match self {
            WeightDistribution::PointMass { d } => vec![(*d, 1.0)],
            WeightDistribution::Mixture { values, probs } => {
                values.iter().copied().zip(probs.iter().copied()).collect()
            }
            WeightDistribution::PowerLaw { beta, x0, cap } => match cap {
                Some(k) => vec![(*k, (x0 / k).powf(beta - 1.0))],
                None => vec![],
            },
        }
    }

    /// True when the law has no atoms.
    pub fn is_continuous(&self) -> bool {
        matches!(self, WeightDistribution::PowerLaw { cap: None, .. })
    }

    /// `P(W > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        match self {
            WeightDistribution::PointMass { d } => f64::from(x < *d),
            WeightDistribution::Mixture { values, probs } => {
                let k = values.partition_point(|&v| v <= x);
                compensated_sum(probs[k..].iter().copied())
            }
            WeightDistribution::PowerLaw { beta, x0, cap } => {
                if x < *x0 {
                    1.0
                } else if cap.is_some_and(|k| x >= k) {
                    0.0
                } else {
                    (x0 / x).powf(beta - 1.0)
                }
            }
        }
    }

    /// `P(W >= x)`.
    pub fn survival_closed(&self, x: f64) -> f64 {
        match self {
            WeightDistribution::PointMass { d } => f64::from(x <= *d),
            WeightDistribution::Mixture { values, probs } => {
                let k = values.partition_point(|&v| v < x);
                compensated_sum(probs[k..].iter().copied())
            }
            WeightDistribution::PowerLaw { beta, x0, cap } => {
                if x <= *x0 {
                    1.0
                } else if cap.is_some_and(|k| x > k) {
                    0.0
                } else {
                    let x = cap.map_or(x, |k| x.min(k));
                    (x0 / x).powf(beta - 1.0)
                }
            }
        }
    }

    /// `F(x) = P(W <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - self.survival(x)
    }

    /// `F(x-) = P(W < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        1.0 - self.survival_closed(x)
    }

    pub fn mean(&self) -> f64 {
        match self {
            WeightDistribution::PointMass { d } => *d,
            WeightDistribution::Mixture { values, probs } => {
                compensated_sum(values.iter().zip(probs).map(|(v, p)| v * p))
            }
            WeightDistribution::PowerLaw { .. } => self.mean_from(self.x0()),
        }
    }

    /// `E[W 1{W >= x}]`.
    pub fn mean_from(&self, x: f64) -> f64 {
        match self {
            WeightDistribution::PointMass { d } => {
                if x <= *d {
                    *d
                } else {
                    0.0
                }
            }
            WeightDistribution::Mixture { values, probs } => {
                let k = values.partition_point(|&v| v < x);
                compensated_sum(values[k..].iter().zip(&probs[k..]).map(|(v, p)| v * p))
            }
            WeightDistribution::PowerLaw { beta, x0, cap } => {
                let c = x0.powf(beta - 1.0);
                let lo = x.max(*x0);
                match cap {
                    None => (beta - 1.0) * c * lo.powf(2.0 - beta) / (beta - 2.0),
                    Some(k) if lo > *k => 0.0,
                    Some(k) => {
                        (beta - 1.0) * c / (beta - 2.0) * (lo.powf(2.0 - beta) - k.powf(2.0 - beta))
                            + c * k.powf(2.0 - beta)
                    }
                }
            }
        }
    }

    /// `E[W 1{W > x}]`.
    pub fn mean_above(&self, x: f64) -> f64 {
        let atom: f64 = self
            .atoms()
            .iter()
            .filter(|a| a.0 == x)
            .map(|a| a.0 * a.1)
            .sum();
        self.mean_from(x) - atom
    }

    /// `P(a <= W < b)`.
    pub fn prob_in(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        (self.survival_closed(a) - self.survival_closed(b)).max(0.0)
    }

    /// `E[W 1{a <= W < b}]`.
    pub fn mean_in(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        (self.mean_from(a) - self.mean_from(b)).max(0.0)
    }

    /// `inf{x : F(x) >= u}` for `u` in `(0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            WeightDistribution::PointMass { d } => *d,
            WeightDistribution::Mixture { values, probs } => {
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if acc >= u - 1e-15 {
                        return *v;
                    }
                }
                *values.last().unwrap()
            }
            WeightDistribution::PowerLaw { beta, x0, cap } => {
                if u <= 0.0 {
                    return *x0;
                }
                let x = x0 * (1.0 - u).powf(-1.0 / (beta - 1.0));
                cap.map_or(x, |k| x.min(k))
            }
        }
    }

    /// Tail cutoff `C_gamma = inf{x : F(x) >= 1 - gamma}`.
    pub fn c_gamma(&self, gamma: f64) -> Result<f64> {
        check_gamma(gamma)?;
        Ok(match self {
            WeightDistribution::PowerLaw { beta, x0, cap } => {
                let x = x0 * gamma.powf(-1.0 / (beta - 1.0));
                cap.map_or(x, |k| x.min(k))
            }
            _ => self.quantile(1.0 - gamma),
        })
    }

    /// Tail mean `W_gamma = E[W 1{W >= C_gamma}]`, atom at the cutoff included.
    pub fn w_gamma(&self, gamma: f64) -> Result<f64> {
        Ok(self.mean_from(self.c_gamma(gamma)?))
    }

    /// Size-biased law with density `x dF(x) / d`.
    pub fn size_biased(&self) -> SizeBiased {
        SizeBiased { base: self.clone() }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            WeightDistribution::PointMass { d } => *d,
            WeightDistribution::Mixture { values, probs } => {
                let idx = WeightedIndex::new(probs).expect("validated probabilities");
                values[idx.sample(rng)]
            }
            WeightDistribution::PowerLaw { .. } => {
                let s: f64 = 1.0 - rng.random::<f64>();
                let tail = self.law_tail(false);
                tail.sample_from_survival(s)
            }
        }
    }

    /// `E[g(W)]`.
    pub fn expect<G: Fn(f64) -> f64>(
        &self,
        g: G,
        sat: Option<Saturation>,
        breaks: &[f64],
    ) -> Result<f64> {
        self.expect_inner(g, sat, breaks, false)
    }

    fn law_tail(&self, biased: bool) -> TailLaw {
        let WeightDistribution::PowerLaw { beta, x0, cap } = *self else {
            unreachable!("tail law is only defined for power laws")
        };
        let c = x0.powf(beta - 1.0);
        if !biased {
            return TailLaw {
                x0,
                cap,
                e: beta - 1.0,
                a: c,
                b: 0.0,
            };
        }
        let d = self.mean();
        let a = (beta - 1.0) * c / ((beta - 2.0) * d);
        let b = match cap {
            Some(k) => c * k.powf(2.0 - beta) / d - a * k.powf(2.0 - beta),
            None => 0.0,
        };
        TailLaw {
            x0,
            cap,
            e: beta - 2.0,
            a,
            b,
        }
    }

    fn expect_inner<G: Fn(f64) -> f64>(
        &self,
        g: G,
        sat: Option<Saturation>,
        breaks: &[f64],
        biased: bool,
    ) -> Result<f64> {
        match self {
            WeightDistribution::PointMass { d } => Ok(g(*d)),
            WeightDistribution::Mixture { values, probs } => {
                let d = if biased { self.mean() } else { 1.0 };
                let w = |v: f64| if biased { v / d } else { 1.0 };
                Ok(compensated_sum(
                    values.iter().zip(probs).map(|(&v, &p)| p * w(v) * g(v)),
                ))
            }
            WeightDistribution::PowerLaw { .. } => self.law_tail(biased).expect(g, sat, breaks),
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    Ok(())
}

/// Continuous part of a (possibly size-biased, possibly capped) power law,
/// parametrised by its survival function `S(x) = a x^{-e} + b` on `[x0, cap)`.
/// The mass `S(cap)` sits in an atom at `cap`.
#[derive(Debug, Clone, Copy)]
struct TailLaw {
    x0: f64,
    cap: Option<f64>,
    e: f64,
    a: f64,
    b: f64,
}

impl TailLaw {
    fn survival(&self, x: f64) -> f64 {
        if x <= self.x0 {
            return 1.0;
        }
        let x = self.cap.map_or(x, |k| x.min(k));
        self.a * x.powf(-self.e) + self.b
    }

    fn inverse(&self, s: f64) -> f64 {
        ((s - self.b) / self.a).powf(-1.0 / self.e)
    }

    fn atom(&self) -> f64 {
        self.cap.map_or(0.0, |k| self.survival(k))
    }

    fn sample_from_survival(&self, s: f64) -> f64 {
        match self.cap {
            Some(k) if s <= self.atom() => k,
            _ => self.inverse(s).max(self.x0),
        }
    }

    fn expect<G: Fn(f64) -> f64>(
        &self,
        g: G,
        sat: Option<Saturation>,
        breaks: &[f64],
    ) -> Result<f64> {
        // Integrate g(x(s)) over s = S(x), which is exactly uniform on the
        // continuous part; the saturated tail and the cap atom close analytically.
        let (s_lo, tail) = match (sat, self.cap) {
            (Some(st), Some(k)) if st.from < k => {
                let s = self.survival(st.from.max(self.x0));
                (s, st.value * s)
            }
            (Some(st), None) => {
                let s = self.survival(st.from.max(self.x0));
                (s, st.value * s)
            }
            (_, Some(k)) => (self.atom(), g(k) * self.atom()),
            (None, None) => (0.0, 0.0),
        };
        let mut cuts: Vec<f64> = breaks
            .iter()
            .map(|&b| self.survival(b))
            .filter(|&s| s > s_lo && s < 1.0)
            .collect();
        cuts.push(s_lo);
        cuts.push(1.0);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let opts = QuadOptions {
            abs_tol: 1e-15,
            rel_tol: 1e-14,
            max_intervals: 4000,
        };
        let mut total = tail;
        for w in cuts.windows(2) {
            total += quad::integrate(|s| g(self.inverse(s)), w[0], w[1], opts)?.value;
        }
        Ok(total)
    }
}

/// Size-biased version of a weight law.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeBiased {
    base: WeightDistribution,
}

impl SizeBiased {
    pub fn base(&self) -> &WeightDistribution {
        &self.base
    }

    /// True when the size-biased law has infinite mean (uncapped power law with beta <= 3).
    pub fn infinite_mean(&self) -> bool {
        matches!(self.base, WeightDistribution::PowerLaw { beta, cap: None, .. } if beta <= 3.0)
    }

    pub fn mean(&self) -> f64 {
        if self.infinite_mean() {
            return f64::INFINITY;
        }
        match &self.base {
            WeightDistribution::PowerLaw {
                beta, cap: None, ..
            } => {
                // E[W^2]/E[W] for the Pareto law.
                let x0 = self.base.x0();
                (beta - 2.0) * x0 / (beta - 3.0)
            }
            _ => self.expect(|x| x, None, &[]).unwrap_or(f64::NAN),
        }
    }

    /// Class probabilities `W_k p_k / d` for mixtures and point masses.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        let d = self.base.mean();
        self.base
            .atoms()
            .into_iter()
            .map(|(v, p)| (v, v * p / d))
            .collect()
    }

    /// `P(W* <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.base {
            WeightDistribution::PowerLaw { cap, .. } => {
                if cap.is_some_and(|k| x >= k) {
                    1.0
                } else {
                    1.0 - self.base.law_tail(true).survival(x)
                }
            }
            _ => self
                .atoms()
                .iter()
                .filter(|a| a.0 <= x)
                .map(|a| a.1)
                .sum::<f64>()
                .min(1.0),
        }
    }

    /// `E[g(W*)]`.
    pub fn expect<G: Fn(f64) -> f64>(
        &self,
        g: G,
        sat: Option<Saturation>,
        breaks: &[f64],
    ) -> Result<f64> {
        self.base.expect_inner(g, sat, breaks, true)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_size_biased(&self.base, rng).value
    }
}

/// A size-biased draw, with a flag when the size-biased law has infinite mean.
#[derive(Debug, Clone, Copy)]
pub struct SizeBiasedSample {
    pub value: f64,
    pub infinite_mean: bool,
}

pub fn sample_size_biased<R: Rng + ?Sized>(
    dist: &WeightDistribution,
    rng: &mut R,
) -> SizeBiasedSample {
    let infinite_mean = dist.size_biased().infinite_mean();
    let value = match dist {
        WeightDistribution::PointMass { d } => *d,
        WeightDistribution::Mixture { values, probs } => {
            let w: Vec<f64> = values.iter().zip(probs).map(|(v, p)| v * p).collect();
            let idx = WeightedIndex::new(&w).expect("validated probabilities");
            values[idx.sample(rng)]
        }
        WeightDistribution::PowerLaw { .. } => {
            let s: f64 = 1.0 - rng.random::<f64>();
            dist.law_tail(true).sample_from_survival(s)
        }
    };
    SizeBiasedSample {
        value,
        infinite_mean,
    }
}

/// One row of a regularity report.
#[derive(Debug, Clone, Serialize)]
pub struct RegularityRow {
    pub n: usize,
    /// `sup_x |F_n(x) - F(x)|`, evaluated exactly at the jump points.
    pub sup_distance: f64,
    /// `|mean(w) - E[W]|`.
    pub mean_gap: f64,
    pub min_weight: f64,
    pub min_weight_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub rows: Vec<RegularityRow>,
    pub distances_decrease: bool,
}

/// Exact Kolmogorov distance between the empirical law of `ws` and `dist`.
pub fn sup_distance(ws: &WeightSequence, dist: &WeightDistribution) -> f64 {
    let n = ws.n() as f64;
    let w = ws.weights();
    let mut best: f64 = 0.0;
    let mut k = 0;
    let mut below = 0.0;
    while k < w.len() {
        let v = w[k];
        let mut j = k;
        while j < w.len() && w[j] == v {
            j += 1;
        }
        let at = j as f64 / n;
        best = best
            .max((below - dist.cdf_left(v)).abs())
            .max((at - dist.cdf(v)).abs());
        below = at;
        k = j;
    }
    for (x, _) in dist.atoms() {
        let fx = empirical_cdf(ws, x);
        let fl = ws.weights.partition_point(|&v| v < x) as f64 / n;
        best = best
            .max((fx - dist.cdf(x)).abs())
            .max((fl - dist.cdf_left(x)).abs());
    }
    best
}

/// Checks weak convergence, mean convergence and the lower weight bound along `n_grid`.
pub fn check_regularity<G>(
    family: G,
    dist: &WeightDistribution,
    n_grid: &[usize],
) -> Result<RegularityReport>
where
    G: Fn(usize) -> Result<WeightSequence>,
{
    if n_grid.len() < 2 {
        return Err(Error::invalid("regularity check needs at least two sizes"));
    }
    let x0 = dist.x0();
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let ws = family(n)?;
        rows.push(RegularityRow {
            n,
            sup_distance: sup_distance(&ws, dist),
            mean_gap: (ws.mean() - dist.mean()).abs(),
            min_weight: ws.min_weight(),
            min_weight_ok: ws.min_weight() >= x0 * (1.0 - 1e-12),
        });
    }
    let distances_decrease = rows
        .windows(2)
        .all(|r| r[1].sup_distance <= r[0].sup_distance);
    Ok(RegularityReport {
        rows,
        distances_decrease,
    })
}

/// Tightest `(c1, c2)` with `c1 x^{1-beta} <= 1 - F_n(x) <= c2 x^{1-beta}` for
/// `x` between the smallest and the largest weight.
pub fn fit_power_law_bounds(ws: &WeightSequence, beta: f64) -> (f64, f64) {
    let n = ws.n() as f64;
    let w = ws.weights();
    let mut c1 = f64::INFINITY;
    let mut c2: f64 = 0.0;
    let mut k = 0;
    while k < w.len() {
        let mut j = k;
        while j < w.len() && w[j] == w[k] {
            j += 1;
        }
        if j == w.len() {
            break;
        }
        let tail = 1.0 - j as f64 / n;
        c1 = c1.min(tail * w[k].powf(beta - 1.0));
        c2 = c2.max(tail * w[j].powf(beta - 1.0));
        k = j;
    }
    (c1, c2)
}
