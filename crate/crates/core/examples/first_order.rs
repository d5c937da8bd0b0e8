//! First-order responses of the spherical star to rotation and to the
//! magnetic coupling, compared with full solutions at small parameters.
//!
//! ```bash
//! cargo run --example first_order
//! ```

use magstar::basis::Basis;
use magstar::eos::{solve_radial_star, EquationOfState};
use magstar::equilibrium::{EquilibriumProblem, MagneticCurrentFunction, SolverSettings};
use magstar::geometry::x_norm;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let star = solve_radial_star(&EquationOfState::polytrope(2.0)?, 1.0, 2048)?;
    let pb = EquilibriumProblem::new(star, Basis::new(12, 6)?, SolverSettings::default())?;
    let k = MagneticCurrentFunction::new(vec![1.0, 1.0])?;
    let pred = pb.first_order_predictors(&k)?;
    println!("|zeta1|_X = {:.6}  |phi1|_X = {:.6}", x_norm(&pred.zeta1), x_norm(&pred.phi1));

    println!("{:>8} {:>16}", "omega2", "|zeta - w zeta1|/w");
    for w in [0.04, 0.02, 0.01] {
        let out = pb.solve_from_predictor(&pb.params(w, 0.0, k.clone()))?;
        let err = out.state.zeta.axpy(-w, &pred.zeta1);
        println!("{w:>8} {:>16.6e}", x_norm(&err) / w);
    }
    println!("{:>8} {:>16} {:>12}", "eps", "|phi - e phi1|/e", "|zeta|_X");
    for e in [0.08, 0.04, 0.02] {
        let out = pb.solve_from_predictor(&pb.params(0.0, e, k.clone()))?;
        let err = out.state.phi.axpy(-e, &pred.phi1);
        println!("{e:>8} {:>16.6e} {:>12.4e}", x_norm(&err) / e, x_norm(&out.state.zeta));
    }
    Ok(())
}
