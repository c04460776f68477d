// Bootstrap percolation with threshold 2 from random seeds, round by round.

use bootperc::graphgen::sample_chung_lu;
use bootperc::percolation::{run_bootstrap, seed_bernoulli};
use bootperc::rng::seeded;
use bootperc::weights::make_point_mass;

fn run_example(n: usize) -> bootperc::Result<()> {
    let ws = make_point_mass(10.0, n)?;
    let mut rng = seeded(3);
    let g = sample_chung_lu(&ws, &mut rng);
    let seeds = seed_bernoulli(n, 0.2, &mut rng)?;
    let res = run_bootstrap(&g, &seeds, 2)?;
    res.verify(&g, &seeds, 2, None)?;
    println!("round sizes: {:?}", res.per_round_sizes);
    println!(
        "{} seeds grew to {} of {} vertices in {} rounds",
        seeds.len(),
        res.final_size,
        n,
        res.rounds
    );
    Ok(())
}

fn main() -> bootperc::Result<()> {
    run_example(50_000)
}
