// Sweep the seed count n^a across the critical exponent on a power-law graph.

use bootperc::experiment::{cmd_scan, ExperimentConfig, ExperimentKind, ScanSpec, SequenceSpec};
use bootperc::weights::WeightDistribution;

fn run_example(n: usize) -> bootperc::Result<()> {
    let cfg = ExperimentConfig {
        experiment: ExperimentKind::Scan,
        model: WeightDistribution::power_law(2.5, 1.0)?,
        sequence: SequenceSpec {
            offset: None,
            zeta: Some(2.0 / 3.0),
        },
        scan: ScanSpec {
            exponents: vec![0.2, 0.25, 0.4, 0.55, 0.7],
        },
        n,
        replicates: 3,
        ..ExperimentConfig::default()
    };
    let rep = cmd_scan(&cfg)?;
    println!(
        "critical exponent {:.4}, a_c = {:.1}, predicted fraction above it {:.4}",
        rep.critical.exponent, rep.critical.a_c, rep.supercritical_fraction
    );
    for row in &rep.rows {
        println!(
            "a={:.3} seeds~{:.0}: |A_f|/|A_0| {:.3}, |A_f|/n {:.4}",
            row.exponent, row.a_n, row.mean_ratio, row.mean_fraction
        );
    }
    Ok(())
}

fn main() -> bootperc::Result<()> {
    run_example(100_000)
}
