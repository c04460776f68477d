use bootperc::discretise::*;
use bootperc::rng::seeded;
use bootperc::weights::{
    make_mixture, make_point_mass, make_power_law, WeightDistribution, WeightSequence,
};
use proptest::prelude::*;

fn open(lo: f64, hi: f64) -> Cell {
    Cell {
        lo,
        hi,
        closed: false,
    }
}

#[test]
fn power_law_cells_are_quantile_cells() {
    let dist = WeightDistribution::power_law(2.5, 1.0).unwrap();
    let part = build_partition(&dist, 0.05, 20).unwrap();
    assert!(!part.top_closed);
    assert_eq!(part.cells[0].lo, 1.0);
    assert_eq!(part.cells.last().unwrap().hi, part.cutoff);
    assert!((part.gamma - 0.05).abs() < 1e-12);
    for c in &part.cells {
        let m = dist.prob_in(c.lo, c.hi);
        assert!(m <= 1.0 / 20.0 + 1e-12, "cell {c:?} has mass {m}");
    }
    assert!(part.max_open_mass < part.eps_ell + 1e-12);
}

#[test]
fn point_mass_has_one_cell() {
    let dist = WeightDistribution::point_mass(10.0).unwrap();
    let part = build_partition(&dist, 0.1, 20).unwrap();
    assert_eq!(part.cells.len(), 1);
    assert!(part.top_closed);
    assert_eq!(part.gamma, 0.0);
    let ws = make_point_mass(10.0, 100).unwrap();
    let minus = discretise_minus(&ws, &part, 0.3, &mut seeded(1)).unwrap();
    assert_eq!(minus.seq.weights(), ws.weights());
    assert!(minus.always_infected.is_empty());
    let plus = discretise_plus(&ws, &part).unwrap();
    assert_eq!(plus.seq.weights(), ws.weights());
    assert_eq!(plus.copies + plus.fillers, 0);
}

#[test]
fn atoms_become_cell_boundaries() {
    let dist = WeightDistribution::mixture(vec![1.0, 3.0, 7.0], vec![0.2, 0.5, 0.3]).unwrap();
    for ell in [2, 5, 10] {
        let part = build_partition(&dist, 0.1, ell).unwrap();
        let los: Vec<f64> = part.cells.iter().map(|c| c.lo).collect();
        assert!(los.contains(&1.0) && los.contains(&3.0), "{los:?}");
        // The atom at the cutoff is nearer to the request when kept light.
        assert!(part.top_closed);
        assert_eq!(part.gamma, 0.0);
        assert_eq!(part.cutoff, 7.0);
        let disc = Discretisation::limit_minus(&dist, &part, 0.3).unwrap();
        disc.check(&dist).unwrap();
        assert_eq!(disc.levels, vec![1.0, 3.0, 7.0]);
    }
}

#[test]
fn hand_built_lower_sequence() {
    let ws = WeightSequence::new(vec![1.2, 1.7, 9.0]).unwrap();
    let part = Partition::from_cells(vec![open(1.0, 2.0), open(2.0, 5.0)], 5.0, 1.0 / 3.0).unwrap();
    // Seeding the heavy vertex gives k_- = floor(1 - 3^{2/3}) < 0: the n^{2/3} margin empties the heavy part.
    let minus = discretise_minus_with_seeds(&ws, &part, 1.0, &[2]).unwrap();
    assert_eq!(minus.k_minus, (1.0 - 3f64.powf(2.0 / 3.0)).floor() as i64);
    assert!(minus.vacuous);
    assert_eq!(minus.seq.weights(), &[1.0, 1.0]);
    assert_eq!(minus.labels, vec![0, 1]);
    assert_eq!(minus.heavy_total, 1);
}

#[test]
fn heavy_vertices_kept_at_the_cutoff() {
    // 1000 light vertices and 400 heavy ones; p = 1 gives k_- = 400 - 100 = 300.
    let mut w = vec![1.5; 1000];
    w.extend(vec![9.0; 400]);
    let ws = WeightSequence::new(w).unwrap();
    let part = Partition::from_cells(vec![open(1.0, 2.0), open(2.0, 5.0)], 5.0, 0.3).unwrap();
    let k = (400.0 - 1400f64.powf(2.0 / 3.0)).floor() as usize;
    let minus = discretise_minus(&ws, &part, 1.0, &mut seeded(2)).unwrap();
    assert_eq!(minus.always_infected.len(), k);
    for &h in &minus.always_infected {
        assert_eq!(minus.seq.weight(h), 5.0);
    }
    for (kk, &v) in minus.labels.iter().enumerate() {
        assert!(minus.seq.weight(kk) <= ws.weight(v));
    }
    let seeds: Vec<usize> = (1000..1400).collect();
    let from_seeds = discretise_minus_with_seeds(&ws, &part, 1.0, &seeds).unwrap();
    assert_eq!(from_seeds.always_infected.len(), k);
    assert!(!from_seeds.shortfall);
    let few = discretise_minus_with_seeds(&ws, &part, 1.0, &seeds[..10]).unwrap();
    assert!(few.shortfall);
}

#[test]
fn upper_copies_and_fillers() {
    let part = Partition::from_cells(vec![open(1.0, 2.0)], 2.0, 0.5).unwrap();
    let ws = WeightSequence::new(vec![1.0, 10.0]).unwrap();
    let plus = discretise_plus(&ws, &part).unwrap();
    assert_eq!(plus.copies, 10);
    assert_eq!(plus.fillers, 0);
    assert_eq!(plus.eps_sum, 0.0);
    assert_eq!(plus.seq.weights().iter().filter(|&&w| w == 4.0).count(), 10);
    assert_eq!(plus.seq.weight(0), 2.0);

    let ws = WeightSequence::new(vec![1.0, 9.0]).unwrap();
    let plus = discretise_plus(&ws, &part).unwrap();
    assert_eq!(plus.copies, 8);
    assert_eq!(plus.eps_sum, 0.5);
    assert_eq!(plus.fillers, 1);
    assert_eq!(plus.seq.n(), 1 + 8 + 1);
    assert_eq!(plus.always_infected.len(), 9);

    // A heavy vertex below 2C stays a single copy at its own weight.
    let ws = WeightSequence::new(vec![1.0, 3.0]).unwrap();
    let plus = discretise_plus(&ws, &part).unwrap();
    assert_eq!(plus.seq.weights(), &[2.0, 3.0]);
}

#[test]
fn light_only_sequence_is_rounded_up() {
    let part = Partition::from_cells(vec![open(1.0, 2.0), open(2.0, 4.0)], 4.0, 0.0).unwrap();
    let ws = WeightSequence::new(vec![1.1, 1.9, 2.0, 3.5]).unwrap();
    let plus = discretise_plus(&ws, &part).unwrap();
    assert_eq!(plus.seq.weights(), &[2.0, 2.0, 4.0, 4.0]);
    assert!(plus.always_infected.is_empty());
}

#[test]
fn bad_partitions_are_rejected() {
    assert!(Partition::from_cells(vec![], 1.0, 0.1).is_err());
    assert!(Partition::from_cells(vec![open(1.0, 2.0), open(2.5, 3.0)], 3.0, 0.1).is_err());
    assert!(Partition::from_cells(vec![open(1.0, 2.0)], 3.0, 0.1).is_err());
    let dist = WeightDistribution::power_law(2.5, 1.0).unwrap();
    assert!(build_partition(&dist, 0.05, 0).is_err());
}

#[test]
fn structural_bounds_on_limits() {
    let dists = [
        WeightDistribution::power_law(2.5, 1.0).unwrap(),
        WeightDistribution::power_law(2.2, 2.0).unwrap(),
        WeightDistribution::truncated_power_law(2.5, 1.0, 40.0).unwrap(),
        WeightDistribution::mixture(vec![1.0, 10.0], vec![0.7, 0.3]).unwrap(),
    ];
    for dist in &dists {
        for gamma in [0.01, 0.05, 0.2] {
            let part = build_partition(dist, gamma, 20).unwrap();
            let minus = Discretisation::limit_minus(dist, &part, 0.2).unwrap();
            let plus = Discretisation::limit_plus(dist, &part).unwrap();
            minus.check(dist).unwrap();
            plus.check(dist).unwrap();
            let s: f64 = minus.fractions.iter().sum();
            assert!((s - (1.0 - part.gamma)).abs() < 1e-12);
        }
    }
}

#[test]
fn discretisation_json_layout() {
    let dist = WeightDistribution::power_law(2.5, 1.0).unwrap();
    let part = build_partition(&dist, 0.05, 5).unwrap();
    let disc = Discretisation::limit_plus(&dist, &part).unwrap();
    let v: serde_json::Value = serde_json::from_str(&disc.to_json().unwrap()).unwrap();
    assert!(v["gamma"].is_f64());
    assert_eq!(v["levels"].as_array().unwrap().len(), disc.levels.len());
    assert_eq!(
        v["fractions"].as_array().unwrap().len(),
        disc.fractions.len()
    );
    assert_eq!(v["heavy"]["side"], "plus");
    assert!(v["heavy"]["count_fraction"].is_f64());
    assert!(v["heavy"]["weight_fraction"].is_f64());
}

#[test]
fn point_mass_convergence_gaps_vanish() {
    let dist = WeightDistribution::point_mass(5.0).unwrap();
    let rep = check_f_convergence(&dist, 0.1, 0.2, &[1, 10], 10).unwrap();
    for row in &rep.rows {
        assert_eq!(row.sup_gap_minus, 0.0);
        assert_eq!(row.sup_gap_plus, 0.0);
        assert!(row.mean_gap_minus < 1e-12 && row.mean_gap_plus < 1e-12);
    }
}

#[test]
fn power_law_convergence() {
    let dist = WeightDistribution::power_law(2.5, 1.0).unwrap();
    let rep = check_f_convergence(&dist, 0.01, 0.2, &[10, 100], 200).unwrap();
    assert!(rep.gaps_shrink);
    for row in &rep.rows {
        assert!(row.mean_ok, "{row:?}");
        assert!(row.mean_gap_minus < rep.rho);
    }
    // The sup bound is only claimed once ell is large.
    assert!(
        rep.rows[1].sup_ok && rep.rows[1].shift_ok,
        "{:?}",
        rep.rows[1]
    );
    let l1 = rep.l1.expect("sup bound eventually holds");
    assert!(l1 <= 100);
    assert!(check_f_convergence(&dist, 0.01, 0.2, &[10], 10).is_err());
}

#[test]
fn sandwich_on_a_power_law() {
    let ws = make_power_law(1000, 1.0, 2.5, 0.0).unwrap();
    let dist = WeightDistribution::power_law(2.5, 1.0).unwrap();
    let part = build_partition(&dist, 0.05, 20).unwrap();
    let rep = sandwich_experiment(&ws, &part, 0.2, 2, 30, 7).unwrap();
    assert_eq!(rep.coupled_violations, 0);
    for i in 0..30 {
        assert!(rep.lower[i] <= rep.middle[i]);
    }
    assert!(rep.dominance_ok);
    assert!(rep.lower_vacuous);
    assert!(rep.bonferroni.violations <= rep.bonferroni.pairs);
}

#[test]
fn sandwich_collapses_without_a_heavy_part() {
    let ws = make_mixture(&[2.0, 5.0], &[0.6, 0.4], 800).unwrap();
    let dist = WeightDistribution::mixture(vec![2.0, 5.0], vec![0.6, 0.4]).unwrap();
    let part = build_partition(&dist, 0.1, 50).unwrap();
    assert_eq!(part.gamma, 0.0);
    let plus = discretise_plus(&ws, &part).unwrap();
    // Rounding up moves each weight by at most one cell width.
    for (a, b) in plus.seq.weights().iter().zip(ws.weights()) {
        assert!(a >= b && a - b <= 3.0 / 50.0 + 1e-12);
    }
    let rep = sandwich_experiment(&ws, &part, 0.2, 2, 20, 8).unwrap();
    assert_eq!(rep.lower, rep.middle);
    assert_eq!(rep.plus_size, ws.n());
}

#[test]
fn decile_dominance_flags_a_shifted_sample() {
    let a: Vec<usize> = (0..200).collect();
    let same = decile_dominance(&a, &a);
    assert!(same.iter().all(|d| d.ok));
    let lower: Vec<usize> = (0..200).map(|x| x / 4).collect();
    let bad = decile_dominance(&a, &lower);
    assert!(bad.iter().any(|d| !d.ok));
}

fn arb_dist() -> impl Strategy<Value = WeightDistribution> {
    prop_oneof![
        (2.05f64..3.5, 0.5f64..3.0)
            .prop_map(|(b, x0)| WeightDistribution::power_law(b, x0).unwrap()),
        (2.05f64..3.5, 0.5f64..3.0, 3.0f64..50.0)
            .prop_map(|(b, x0, k)| WeightDistribution::truncated_power_law(b, x0, x0 * k).unwrap()),
        prop::collection::vec((0.5f64..30.0, 0.05f64..1.0), 1..5).prop_map(|pairs| {
            let total: f64 = pairs.iter().map(|p| p.1).sum();
            WeightDistribution::mixture(
                pairs.iter().map(|p| p.0).collect(),
                pairs.iter().map(|p| p.1 / total).collect(),
            )
            .unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sequences_sandwich_the_original(
        dist in arb_dist(),
        gamma in 0.01f64..0.5,
        ell in 1usize..40,
        n in 50usize..400,
        p in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let mut rng = seeded(seed);
        let ws = WeightSequence::new((0..n).map(|_| dist.sample(&mut rng)).collect()).unwrap();
        let part = build_partition(&dist, gamma, ell).unwrap();
        let minus = discretise_minus(&ws, &part, p, &mut rng).unwrap();
        for (k, &v) in minus.labels.iter().enumerate() {
            prop_assert!(minus.seq.weight(k) <= ws.weight(v));
        }
        let plus = discretise_plus(&ws, &part).unwrap();
        for (k, o) in plus.origin.iter().enumerate() {
            if let PlusOrigin::Light(v) = o {
                prop_assert!(plus.seq.weight(k) >= ws.weight(*v));
            }
        }
        for side in [
            Discretisation::limit_minus(&dist, &part, p).unwrap(),
            Discretisation::limit_plus(&dist, &part).unwrap(),
        ] {
            prop_assert!(side.check(&dist).is_ok());
        }
    }
}
