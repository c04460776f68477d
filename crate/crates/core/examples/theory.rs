// Fixed point, stability and predicted final fraction for several weight laws,
// with the discretised ODE answer alongside.

use bootperc::discretise::Discretisation;
use bootperc::odeflow::{alpha, discretised_fixed_point};
use bootperc::theory::{final_fraction, psi_r, solve_fixed_point, SolveOptions};
use bootperc::weights::WeightDistribution;

fn run_example(_n: usize) -> bootperc::Result<()> {
    println!("psi_2(1) = {:.12}", psi_r(2, 1.0)?);
    let laws = [
        WeightDistribution::point_mass(10.0)?,
        WeightDistribution::mixture(vec![1.0, 10.0], vec![0.7, 0.3])?,
        WeightDistribution::power_law(2.5, 1.0)?,
    ];
    let p = 0.2;
    for dist in &laws {
        let fp = solve_fixed_point(&dist.size_biased(), p, 2, SolveOptions::default())?;
        let frac = final_fraction(dist, fp.y_hat, p, 2)?;
        print!(
            "{dist:?}: y={:.6} f'={:.4} stable={} fraction {:.6}",
            fp.y_hat, fp.derivative, fp.stable, frac
        );
        if !dist.is_continuous() {
            let disc = Discretisation::exact(dist)?;
            let dfp = discretised_fixed_point(&disc, p, 2, SolveOptions::default())?;
            print!(", ODE {:.6}", alpha(dfp.y_hat, &disc, p, 2));
        }
        println!();
    }
    Ok(())
}

fn main() -> bootperc::Result<()> {
    run_example(0)
}
