//! A small family of equilibria by continuation from the spherical star.
//!
//! ```bash
//! cargo run --example continuation_sweep
//! ```

use magstar::basis::Basis;
use magstar::eos::{solve_radial_star, EquationOfState};
use magstar::equilibrium::{EquilibriumProblem, MagneticCurrentFunction, SolverSettings, SweepOrder};
use magstar::geometry::x_norm;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let star = solve_radial_star(&EquationOfState::polytrope(1.8)?, 1.0, 2048)?;
    let pb = EquilibriumProblem::new(star, Basis::new(12, 6)?, SolverSettings::default())?;
    let k = MagneticCurrentFunction::new(vec![1.0, 0.5, 0.25])?;
    let omega2 = [0.0, 0.01, 0.02, 0.03];
    let eps = [0.0, 0.05];

    let points = pb.continuation_sweep(&omega2, &eps, &k, SweepOrder::OmegaFirst)?;
    println!("{:>7} {:>6} {:>5} {:>12} {:>12}", "omega2", "eps", "iter", "|zeta|_X", "|phi|_X");
    for p in &points {
        match &p.outcome {
            Ok(o) => println!(
                "{:>7} {:>6} {:>5} {:>12.6e} {:>12.6e}",
                p.omega2,
                p.epsilon,
                o.iterations,
                x_norm(&o.state.zeta),
                x_norm(&o.state.phi)
            ),
            Err(e) => println!("{:>7} {:>6} failed: {e}", p.omega2, p.epsilon),
        }
    }
    Ok(())
}
