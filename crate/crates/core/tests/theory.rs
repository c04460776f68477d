use bootperc::theory::*;
use bootperc::weights::WeightDistribution;
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn solve(dist: &WeightDistribution, p: f64, r: u32) -> FixedPointResult {
    solve_fixed_point(&dist.size_biased(), p, r, SolveOptions::default()).unwrap()
}

/// Independent scalar root finder used as an oracle: fine scan then bisection.
fn oracle_root(f: impl Fn(f64) -> f64, lo: f64, step: f64) -> f64 {
    let mut a = lo;
    let mut fa = f(a);
    loop {
        let b = a + step;
        let fb = f(b);
        if fa.signum() != fb.signum() {
            let (mut x, mut y) = (a, b);
            for _ in 0..200 {
                let m = 0.5 * (x + y);
                if f(m).signum() == fa.signum() {
                    x = m;
                } else {
                    y = m;
                }
            }
            return 0.5 * (x + y);
        }
        a = b;
        fa = fb;
        assert!(a < 1.5, "no root");
    }
}

fn pmf_tail(r: u32, x: f64) -> f64 {
    let mut term = (-x).exp();
    let mut below = 0.0;
    for j in 0..r {
        below += term;
        term *= x / (j + 1) as f64;
    }
    1.0 - below
}

#[test]
fn psi_examples() {
    for r in 1..6 {
        assert_eq!(psi_r(r, 0.0).unwrap(), 0.0);
    }
    assert_eq!(psi_r(0, 3.0).unwrap(), 1.0);
    for x in [1e-8, 0.1, 1.0, 5.0, 40.0] {
        assert!((psi_r(1, x).unwrap() - (-(-x as f64).exp_m1())).abs() < 1e-15);
    }
    let v = psi_r(2, 1.0).unwrap();
    assert!((v - (1.0 - 2.0 * (-1.0f64).exp())).abs() < 1e-15);
    assert!((v - 0.264_241_117_657_115_4).abs() < 1e-15);
    assert!(psi_r(2, -0.1).is_err());
}

#[test]
fn f_r_examples() {
    let pm = WeightDistribution::point_mass(10.0).unwrap();
    let star = pm.size_biased();
    assert_eq!(f_r(0.0, &star, 0.3, 2).unwrap(), 0.3);
    for y in [0.05, 0.2, 0.5, 0.9] {
        let direct = 0.8 * pmf_tail(2, 10.0 * y) + 0.2 - y;
        assert!((f_r(y, &star, 0.2, 2).unwrap() - direct).abs() < 1e-14);
    }
}

#[test]
fn point_mass_golden() {
    let pm = WeightDistribution::point_mass(10.0).unwrap();
    let fp = solve(&pm, 0.2, 2);
    assert!((fp.y_hat - 0.999_599_021_635_956_3).abs() < TOL);
    assert!((fp.derivative - -0.996_354_875_072_561_1).abs() < 1e-8);
    assert!(fp.stable && !fp.boundary_root);
    let frac = final_fraction(&pm, fp.y_hat, 0.2, 2).unwrap();
    assert!((frac - 0.999_599_021_635_956_3).abs() < TOL);
    let oracle = oracle_root(|y| 0.8 * pmf_tail(2, 10.0 * y) + 0.2 - y, 1e-12, 1e-5);
    assert!((fp.y_hat - oracle).abs() < TOL);
    let cond = check_derivative_condition(&pm.size_biased(), fp.y_hat, 0.2, 2).unwrap();
    assert!(cond.stable);
    assert!(cond.exceptional_gap > 0.0);
}

#[test]
fn mixture_golden() {
    let mix = WeightDistribution::mixture(vec![1.0, 3.0], vec![0.5, 0.5]).unwrap();
    let fp = solve(&mix, 0.3, 2);
    assert!((fp.y_hat - 0.607_026_593_449_980_8).abs() < TOL);
    assert!((fp.derivative - -0.477_887_307_355_293_8).abs() < 1e-8);
    let frac = final_fraction(&mix, fp.y_hat, 0.3, 2).unwrap();
    assert!((frac - 0.533_669_184_333_997_3).abs() < TOL);
    // Size-biased weights: 1 w.p. 1/4 and 3 w.p. 3/4.
    let f = |y: f64| 0.7 * (0.25 * pmf_tail(2, y) + 0.75 * pmf_tail(2, 3.0 * y)) + 0.3 - y;
    assert!((fp.y_hat - oracle_root(f, 1e-12, 1e-5)).abs() < TOL);
}

#[test]
fn two_class_golden() {
    let mix = WeightDistribution::mixture(vec![1.0, 10.0], vec![0.7, 0.3]).unwrap();
    let fp = solve(&mix, 0.3, 2);
    assert!((fp.y_hat - 0.896_823_645_587_448_8).abs() < TOL);
    assert!((fp.derivative - -0.945_074_305_403_855).abs() < 1e-8);
    let frac = final_fraction(&mix, fp.y_hat, 0.3, 2).unwrap();
    assert!((frac - 0.620_647_562_110_088_9).abs() < TOL);
}

#[test]
fn power_law_golden() {
    let fp = powerlaw_fixed_point(2.5, 1.0, 2, 1e-12).unwrap();
    assert!((fp.y_hat - 0.665_883_442_543_620_7).abs() < 1e-9);
    assert!((fp.derivative - -0.608_154_644_272_428_2).abs() < 1e-7);
    assert!(!fp.zero_root);
    let dist = WeightDistribution::power_law(2.5, 1.0).unwrap();
    let frac = final_fraction(&dist, fp.y_hat, 0.0, 2).unwrap();
    assert!((frac - 0.383_359_064_866_175_8).abs() < 1e-9);
}

#[test]
fn all_seeded_is_trivial() {
    let mix = WeightDistribution::mixture(vec![1.0, 3.0], vec![0.5, 0.5]).unwrap();
    let fp = solve(&mix, 1.0, 2);
    assert!((fp.y_hat - 1.0).abs() < 1e-10);
    assert_eq!(final_fraction(&mix, fp.y_hat, 1.0, 2).unwrap(), 1.0);
    let cond = check_derivative_condition(&mix.size_biased(), 1.0, 1.0, 2).unwrap();
    assert!((cond.derivative + 1.0).abs() < 1e-12);
    assert_eq!(final_fraction(&mix, 0.0, 0.25, 2).unwrap(), 0.25);
}

#[test]
fn power_law_is_stable_on_a_grid() {
    for beta in [2.1, 2.5, 2.9] {
        let dist = WeightDistribution::power_law(beta, 1.0).unwrap();
        for p in [0.01, 0.1, 0.5] {
            let fp = solve(&dist, p, 2);
            let cond = check_derivative_condition(&dist.size_biased(), fp.y_hat, p, 2).unwrap();
            assert!(cond.stable, "beta {beta}, p {p}: {}", cond.derivative);
        }
    }
}

#[test]
fn r_one_has_the_survival_root() {
    let dist = WeightDistribution::power_law(2.5, 1.0).unwrap();
    let fp = powerlaw_fixed_point(2.5, 1.0, 1, 1e-12).unwrap();
    let star = dist.size_biased();
    assert!(fp.y_hat > 0.01);
    // Direct check of y = E[1 - e^{-W* y}] on either side of the root.
    let g = |y: f64| f_r(y, &star, 0.0, 1).unwrap();
    assert!(g(fp.y_hat * 0.9) > 0.0 && g(fp.y_hat * 1.1) < 0.0);
}

#[test]
fn fraction_grows_as_beta_falls() {
    let mut prev = 0.0;
    for beta in [2.9, 2.7, 2.5, 2.3, 2.1] {
        let fp = powerlaw_fixed_point(beta, 1.0, 2, 1e-12).unwrap();
        let dist = WeightDistribution::power_law(beta, 1.0).unwrap();
        let frac = final_fraction(&dist, fp.y_hat, 0.0, 2).unwrap();
        assert!(frac >= prev, "beta {beta}: {frac} < {prev}");
        prev = frac;
    }
}

#[test]
fn tiny_seed_probability_approaches_the_unseeded_root() {
    let dist = WeightDistribution::power_law(2.5, 1.0).unwrap();
    let a = powerlaw_fixed_point(2.5, 1.0, 2, 1e-12).unwrap();
    let b = solve(&dist, 1e-9, 2);
    assert!((a.y_hat - b.y_hat).abs() < 1e-6);
}

#[test]
fn critical_density_examples() {
    let c = critical_density(1e6, 2, 2.5, 2.0 / 3.0);
    assert!((c.exponent - 1.0 / 3.0).abs() < 1e-15);
    assert!((c.a_c - 100.0).abs() < 1e-9);
    assert!(c.zeta_in_range);
    assert!(critical_density(1e6, 2, 2.5, 1.0 / 1.5).zeta_in_range);
    let c = critical_density(1e6, 3, 2.5, 0.6);
    assert!((c.exponent - 1.1 / 3.0).abs() < 1e-15);
    assert!(!critical_density(1e6, 2, 2.5, 0.2).zeta_in_range);
}

#[test]
fn scan_is_minimal_and_brackets_a_sign_change() {
    let mix = WeightDistribution::mixture(vec![1.0, 10.0], vec![0.7, 0.3]).unwrap();
    let fp = solve(&mix, 0.3, 2);
    let last = fp.scan.len() - 1;
    assert!(fp.scan[..last].iter().all(|&(_, f)| f > 0.0));
    let star = mix.size_biased();
    let h = 10.0 * 1e-12;
    let lo = f_r(fp.y_hat - h, &star, 0.3, 2).unwrap();
    let hi = f_r(fp.y_hat + h, &star, 0.3, 2).unwrap();
    assert!(lo >= 0.0 && hi <= 0.0);
    assert!(fp.residual < 1e-12);
    assert!((fp.derivative - fp.derivative_fd).abs() < 1e-6 * fp.derivative.abs());
}

fn arb_mixture() -> impl Strategy<Value = WeightDistribution> {
    prop::collection::vec((0.1f64..30.0, 0.01f64..1.0), 1..6).prop_map(|pairs| {
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        WeightDistribution::mixture(
            pairs.iter().map(|p| p.0).collect(),
            pairs.iter().map(|p| p.1 / total).collect(),
        )
        .unwrap()
    })
}

proptest! {
    #[test]
    fn psi_is_a_tail_probability(r in 0u32..12, x in 0.0f64..100.0, dx in 0.0f64..5.0) {
        let v = psi_r(r, x).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!(psi_r(r, x + dx).unwrap() >= v - 1e-15);
        prop_assert!(psi_r(r + 1, x).unwrap() <= v + 1e-15);
        // Complement against a log-space pmf sum.
        let below: f64 = (0..r).map(|j| (-x + j as f64 * x.ln() - statrs::function::gamma::ln_gamma(j as f64 + 1.0)).exp()).sum();
        let below = if x == 0.0 { if r > 0 { 1.0 } else { 0.0 } } else { below };
        prop_assert!((v + below - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f_r_is_nonpositive_at_one(dist in arb_mixture(), p in 0.0f64..=1.0, r in 1u32..5) {
        prop_assert!(f_r(1.0, &dist.size_biased(), p, r).unwrap() <= 1e-15);
    }

    #[test]
    fn solved_roots_are_fixed_points(dist in arb_mixture(), p in 0.01f64..0.99, r in 2u32..4) {
        let fp = solve(&dist, p, r);
        let frac = final_fraction(&dist, fp.y_hat, p, r).unwrap();
        prop_assert!(fp.y_hat > 0.0 && fp.y_hat <= 1.0 + 1e-12);
        prop_assert!(fp.residual < 1e-10 || fp.boundary_root);
        prop_assert!((p..=1.0 + 1e-12).contains(&frac));
    }
}
