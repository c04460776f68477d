// Final infected fraction over replicates against the fixed-point prediction.

use bootperc::experiment::{cmd_lln, ExperimentConfig, ExperimentKind, Seeding};
use bootperc::weights::WeightDistribution;

fn run_example(n: usize) -> bootperc::Result<()> {
    let cfg = ExperimentConfig {
        experiment: ExperimentKind::Lln,
        model: WeightDistribution::mixture(vec![1.0, 10.0], vec![0.7, 0.3])?,
        seeding: Seeding::Probability { p: 0.3 },
        n,
        replicates: 5,
        ..ExperimentConfig::default()
    };
    let rep = cmd_lln(&cfg)?;
    println!(
        "simulated {:.4} +- {:.4}, predicted {:.4}, gap {:?}",
        rep.summary.mean, rep.summary.sd, rep.prediction.fraction, rep.gap
    );
    Ok(())
}

fn main() -> bootperc::Result<()> {
    run_example(50_000)
}
