use bootperc::graph::SparseGraph;
use bootperc::graphgen::*;
use bootperc::rng::seeded;
use bootperc::weights::{make_mixture, make_point_mass, make_power_law, WeightSequence};
use proptest::prelude::*;

fn seq(w: &[f64]) -> WeightSequence {
    WeightSequence::new(w.to_vec()).unwrap()
}

#[test]
fn edge_probability_examples() {
    assert_eq!(edge_probability(1.0, 1.0, 2.0), 0.5);
    assert!((edge_probability(1.0, 4.0, 6.0) - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(edge_probability(1.0, 1.0, 4.0), 0.25);
    assert_eq!(edge_probability(10.0, 10.0, 5.0), 1.0);
}

#[test]
fn two_vertex_edge_frequency() {
    let ws = seq(&[1.0, 1.0]);
    let mut rng = seeded(11);
    let runs = 100_000;
    let hits = (0..runs)
        .filter(|_| sample_chung_lu(&ws, &mut rng).m() == 1)
        .count();
    let se = (0.25f64 / runs as f64).sqrt();
    assert!((hits as f64 / runs as f64 - 0.5).abs() < 4.0 * se);
    let deg = expected_degrees(&ws, ws.total_weight());
    assert_eq!(deg, vec![0.5, 0.5]);
}

#[test]
fn point_mass_mean_degree() {
    let n = 100_000;
    let ws = make_point_mass(10.0, n).unwrap();
    let g = sample_chung_lu(&ws, &mut seeded(12));
    g.check_structure().unwrap();
    // Degree sum is twice a Binomial(n(n-1)/2, 10/n) count.
    let pairs = n as f64 * (n as f64 - 1.0) / 2.0;
    let q = 10.0 / n as f64;
    let sd_mean = 2.0 * (pairs * q * (1.0 - q)).sqrt() / n as f64;
    let expected = 10.0 * (1.0 - 1.0 / n as f64);
    assert!(
        (g.mean_degree() - expected).abs() < 3.0 * sd_mean,
        "{}",
        g.mean_degree()
    );
    let rep = expected_degree_report(&ws, &g);
    assert_eq!(rep.len(), 1);
    assert!((rep[0].mean_degree - rep[0].expected_mean_degree).abs() < 3.0 * rep[0].sd_of_mean);
}

#[test]
fn two_class_degree_report() {
    let ws = make_mixture(&[1.0, 10.0], &[0.7, 0.3], 20_000).unwrap();
    let g = sample_chung_lu(&ws, &mut seeded(13));
    let rep = expected_degree_report(&ws, &g);
    assert_eq!(rep.len(), 2);
    assert!((rep[0].expected_mean_degree - 1.0).abs() < 0.01);
    assert!((rep[1].expected_mean_degree - 10.0).abs() < 0.01);
    for row in &rep {
        assert!((row.mean_degree - row.expected_mean_degree).abs() < 4.0 * row.sd_of_mean);
    }
}

#[test]
fn prime_with_own_total_matches_plain_sampler() {
    let ws = make_power_law(500, 1.0, 2.5, 0.0).unwrap();
    let a = sample_chung_lu(&ws, &mut seeded(14));
    let b = sample_chung_lu_prime(&ws, ws.total_weight(), &mut seeded(14)).unwrap();
    assert_eq!(a, b);
    assert!(sample_chung_lu_prime(&ws, 0.0, &mut seeded(1)).is_err());
    assert!(sample_chung_lu_prime(&ws, f64::NAN, &mut seeded(1)).is_err());
}

#[test]
fn lowered_weights_lower_every_pair_probability() {
    let ws = make_power_law(100, 1.0, 2.5, 0.0).unwrap();
    let minus: Vec<f64> = ws.weights().iter().map(|w| (w * 0.5).max(0.6)).collect();
    let big_w = ws.total_weight();
    for i in 0..100 {
        for j in 0..100 {
            let p = edge_probability(ws.weight(i), ws.weight(j), big_w);
            let pm = edge_probability(
                minus[i].min(ws.weight(i)),
                minus[j].min(ws.weight(j)),
                big_w,
            );
            assert!(pm <= p);
        }
    }
}

#[test]
fn certain_pairs_are_always_present() {
    let ws = seq(&[1.0, 1.0, 50.0, 50.0]);
    for s in 0..50 {
        let g = sample_chung_lu(&ws, &mut seeded(s));
        assert!(g.has_edge(2, 3));
    }
}

#[test]
fn per_pair_frequencies_match_the_naive_law() {
    // Distinct weights above the class limit route through the sequential sampler.
    let n = 70;
    let w: Vec<f64> = (0..n).map(|i| 0.5 + 0.3 * i as f64).collect();
    let ws = seq(&w);
    assert!(ws.distinct_count() > CLASS_SAMPLER_LIMIT);
    let runs = 20_000;
    let mut counts = vec![0u32; n * n];
    let mut rng = seeded(15);
    for _ in 0..runs {
        for (u, v) in sample_chung_lu(&ws, &mut rng).edges() {
            counts[u as usize * n + v as usize] += 1;
        }
    }
    let big_w = ws.total_weight();
    for i in 0..n {
        for j in i + 1..n {
            let p = edge_probability(ws.weight(i), ws.weight(j), big_w);
            let f = counts[i * n + j] as f64 / runs as f64;
            let se = (p * (1.0 - p) / runs as f64).sqrt().max(1e-9);
            assert!((f - p).abs() < 5.0 * se, "pair ({i},{j}): {f} vs {p}");
        }
    }
}

#[test]
fn nested_thresholds_in_the_coupling() {
    let ws = seq(&[2.0, 2.0]);
    let minus = seq(&[1.0, 1.0]);
    let mut rng = seeded(16);
    let runs = 50_000;
    let (mut both, mut only) = (0, 0);
    for _ in 0..runs {
        let pair = sample_coupled_minus(&ws, &minus, &[0, 1], &mut rng).unwrap();
        match (pair.graph.m(), pair.minus.m()) {
            (1, 1) => both += 1,
            (1, 0) => only += 1,
            (0, 0) => {}
            other => panic!("minus edge outside the graph: {other:?}"),
        }
    }
    let se = (0.25f64 * 0.75 / runs as f64).sqrt();
    assert!((both as f64 / runs as f64 - 0.25).abs() < 4.0 * se);
    assert!((only as f64 / runs as f64 - 0.75).abs() < 4.0 * se);
}

#[test]
fn coupled_mixture_is_always_nested_and_replayable() {
    let ws = make_mixture(&[1.0, 3.0, 8.0], &[0.5, 0.3, 0.2], 1000).unwrap();
    // Keep every other vertex and lower its weight by a third.
    let labels: Vec<usize> = (0..1000).step_by(2).collect();
    let minus =
        WeightSequence::new(labels.iter().map(|&v| ws.weight(v) * 2.0 / 3.0).collect()).unwrap();
    let mut rng = seeded(17);
    for _ in 0..20 {
        let pair = sample_coupled_minus(&ws, &minus, &labels, &mut rng).unwrap();
        pair.minus.check_structure().unwrap();
        for (a, b) in pair.minus.edges() {
            assert!(pair.graph.has_edge(labels[a as usize], labels[b as usize]));
        }
        let again = replay_coupled_minus(&ws, &minus, &labels, pair.transcript).unwrap();
        assert_eq!(again.graph, pair.graph);
        assert_eq!(again.minus, pair.minus);
    }
}

#[test]
fn coupling_with_itself_is_identical() {
    let ws = make_power_law(300, 1.0, 2.5, 0.0).unwrap();
    let labels: Vec<usize> = (0..300).collect();
    let pair = sample_coupled_minus(&ws, &ws, &labels, &mut seeded(18)).unwrap();
    assert_eq!(pair.graph, pair.minus);
}

#[test]
fn coupling_rejects_bad_inputs() {
    let ws = seq(&[1.0, 2.0]);
    let up = seq(&[3.0]);
    assert!(sample_coupled_minus(&ws, &up, &[0], &mut seeded(1)).is_err());
    let one = seq(&[1.0]);
    assert!(sample_coupled_minus(&ws, &one, &[5], &mut seeded(1)).is_err());
    assert!(sample_coupled_minus(&ws, &one, &[0, 1], &mut seeded(1)).is_err());
}

#[test]
fn csv_and_binary_export() {
    let g = SparseGraph::from_edges(4, &[(0, 1), (2, 1), (3, 0)]).unwrap();
    let mut csv = Vec::new();
    g.write_edge_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 3 + text.starts_with("u,v") as usize);
    let mut bin = Vec::new();
    g.write_binary(&mut bin).unwrap();
    assert_eq!(&bin[..4], b"CLG1");
    assert_eq!(u64::from_le_bytes(bin[4..12].try_into().unwrap()), 4);
    assert_eq!(u64::from_le_bytes(bin[12..20].try_into().unwrap()), 3);
    assert_eq!(SparseGraph::read_binary(bin.as_slice()).unwrap(), g);
    assert!(SparseGraph::read_binary(&b"XXXX"[..]).is_err());
    assert!(SparseGraph::from_edges(2, &[(0, 0)]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_graphs_are_simple(
        w in prop::collection::vec(0.1f64..30.0, 1..150),
        seed in any::<u64>(),
    ) {
        let ws = WeightSequence::new(w).unwrap();
        let g = sample_chung_lu(&ws, &mut seeded(seed));
        prop_assert!(g.check_structure().is_ok());
        let deg: usize = (0..g.n()).map(|v| g.degree(v)).sum();
        prop_assert_eq!(deg, 2 * g.m());
        for v in 0..g.n() {
            prop_assert!(!g.has_edge(v, v));
            for &u in g.neighbors(v) {
                prop_assert!(g.has_edge(u as usize, v));
            }
        }
    }

    #[test]
    fn lowered_weights_give_subgraphs(
        w in prop::collection::vec(0.1f64..30.0, 2..120),
        shrink in prop::collection::vec(0.0f64..1.0, 120),
        seed in any::<u64>(),
    ) {
        let ws = WeightSequence::new(w).unwrap();
        let lowered: Vec<f64> = (0..ws.n()).map(|v| (ws.weight(v) * shrink[v]).max(1e-3).min(ws.weight(v))).collect();
        // The minus sequence is stored sorted, so pair each lowered weight with its vertex.
        let mut order: Vec<usize> = (0..ws.n()).collect();
        order.sort_by(|&a, &b| lowered[a].total_cmp(&lowered[b]));
        let minus = WeightSequence::new(order.iter().map(|&v| lowered[v]).collect()).unwrap();
        let labels: Vec<usize> = (0..ws.n()).map(|k| {
            let v = order[k];
            debug_assert_eq!(minus.weight(k), lowered[v]);
            v
        }).collect();
        let pair = sample_coupled_minus(&ws, &minus, &labels, &mut seeded(seed)).unwrap();
        for (a, b) in pair.minus.edges() {
            prop_assert!(pair.graph.has_edge(labels[a as usize], labels[b as usize]));
        }
    }
}
