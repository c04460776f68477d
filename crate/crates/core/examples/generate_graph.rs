// Sample a Chung-Lu graph from a power-law weight sequence and compare
// the observed mean degree per weight class with its expectation.

use bootperc::graphgen::{expected_degree_report, sample_chung_lu};
use bootperc::rng::seeded;
use bootperc::weights::{make_mixture, make_power_law};

fn run_example(n: usize) -> bootperc::Result<()> {
    let ws = make_power_law(n, 1.0, 2.5, 0.0)?;
    let g = sample_chung_lu(&ws, &mut seeded(1));
    g.check_structure()?;
    println!(
        "power law: n={} m={} mean degree {:.3} (weights average {:.3})",
        g.n(),
        g.m(),
        g.mean_degree(),
        ws.total_weight() / n as f64
    );
    let ws = make_mixture(&[1.0, 10.0], &[0.7, 0.3], n)?;
    let g = sample_chung_lu(&ws, &mut seeded(2));
    for row in expected_degree_report(&ws, &g) {
        println!(
            "class w={:.1}, {} vertices: mean degree {:.3}, expected {:.3} +- {:.3}",
            row.weight_lo, row.count, row.mean_degree, row.expected_mean_degree, row.sd_of_mean
        );
    }
    Ok(())
}

fn main() -> bootperc::Result<()> {
    run_example(20_000)
}
