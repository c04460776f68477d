// Sequential exposure against the fluid-limit ODE, with the deviation per run.

use bootperc::experiment::{cmd_trajectory, ExperimentConfig, ExperimentKind};

fn run_example(n: usize) -> bootperc::Result<()> {
    let cfg = ExperimentConfig {
        experiment: ExperimentKind::Trajectory,
        n,
        replicates: 4,
        ..ExperimentConfig::default()
    };
    let rep = cmd_trajectory(&cfg)?;
    println!("ODE final fraction {:.4}", rep.ode_fraction);
    for (f, d) in rep.final_fractions.iter().zip(&rep.max_deviation) {
        println!("simulated {f:.4}, max deviation {d:.4}");
    }
    println!("median deviation {:.4}", rep.median_deviation);
    Ok(())
}

fn main() -> bootperc::Result<()> {
    run_example(50_000)
}
