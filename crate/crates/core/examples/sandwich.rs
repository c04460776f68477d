// Lower, original and upper discretised processes on a power-law sequence.

use bootperc::discretise::{build_partition, sandwich_experiment};
use bootperc::weights::{make_power_law, WeightDistribution};

fn run_example(n: usize) -> bootperc::Result<()> {
    let dist = WeightDistribution::power_law(2.5, 1.0)?;
    let ws = make_power_law(n, 1.0, 2.5, 0.0)?;
    let part = build_partition(&dist, 0.05, 20)?;
    let rep = sandwich_experiment(&ws, &part, 0.2, 2, 20, 4)?;
    println!(
        "coupled violations {}, dominance {}, lower vacuous {}",
        rep.coupled_violations, rep.dominance_ok, rep.lower_vacuous
    );
    for d in &rep.deciles {
        println!("{d:?}");
    }
    Ok(())
}

fn main() -> bootperc::Result<()> {
    run_example(2000)
}
