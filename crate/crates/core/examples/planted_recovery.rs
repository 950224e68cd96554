//! Generates instances with a planted solution and reports how often the
//! multi-start solver recovers a certified solution.

use mesoc::generate::generate_planted;
use mesoc::{solve, SolveOptions, SolveStatus};

fn main() -> mesoc::Result<()> {
    let mut solved = 0;
    let mut same_as_plant = 0;
    let total = 40;
    for seed in 0..total {
        let p = 2 + (seed as usize % 4);
        let q = 1 + (seed as usize / 4 % 5);
        let planted = generate_planted(p, q, seed)?;
        let sol = solve(&planted.instance, &SolveOptions { seed, ..SolveOptions::default() })?;
        let dist = (&sol.z.x - &planted.z.x).amax().max((&sol.z.u - &planted.z.u).amax());
        if sol.status == SolveStatus::Solved {
            solved += 1;
            if dist < 1e-8 {
                same_as_plant += 1;
            }
        }
        println!(
            "seed {seed:>2}  p={p} q={q}  {:<13}  residual {:.2e}  distance to plant {dist:.2e}",
            sol.status.as_str(),
            sol.residual_inf
        );
    }
    println!("\n{solved}/{total} certified, {same_as_plant} of them equal to the planted point");
    Ok(())
}
