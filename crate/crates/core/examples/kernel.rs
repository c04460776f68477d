// Infection of the heavy kernel when all light vertices are frozen.

use bootperc::experiment::{
    cmd_kernel, ExperimentConfig, ExperimentKind, KernelSpec, Seeding, SequenceSpec,
};
use bootperc::weights::WeightDistribution;

fn run_example(n: usize) -> bootperc::Result<()> {
    for cutoff in [5.0, 20.0, 1e9] {
        let cfg = ExperimentConfig {
            experiment: ExperimentKind::Kernel,
            model: WeightDistribution::power_law(2.5, 1.0)?,
            sequence: SequenceSpec {
                offset: None,
                zeta: Some(2.0 / 3.0),
            },
            seeding: Seeding::Exponent { a: 0.55 },
            kernel: KernelSpec { cutoff },
            n,
            replicates: 3,
            ..ExperimentConfig::default()
        };
        let rep = cmd_kernel(&cfg)?;
        println!(
            "cutoff {cutoff}: kernel size {}, infected fractions {:?}, vacuous {}",
            rep.kernel_size, rep.fractions, rep.vacuous
        );
    }
    Ok(())
}

fn main() -> bootperc::Result<()> {
    run_example(50_000)
}
