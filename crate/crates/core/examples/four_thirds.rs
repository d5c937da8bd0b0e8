//! Conditioning of the linearized problem as the exponent approaches 4/3,
//! where uniform compression stops costing energy.
//!
//! ```bash
//! cargo run --example four_thirds
//! ```

use magstar::basis::Basis;
use magstar::eos::{solve_radial_star, EquationOfState, DEFAULT_GAMMA_EXCLUSION};
use magstar::equilibrium::{EquilibriumProblem, JacobianMode, MagneticCurrentFunction, SolverSettings, StateVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let basis = Basis::new(12, 6)?;
    let k = MagneticCurrentFunction::new(vec![1.0, 1.0])?;
    println!("{:>8} {:>14} {:>14}", "gamma", "condition", "compression");
    for gamma in [2.0, 1.5, 1.4, 1.36, 1.34, 1.335, 1.334] {
        let eos = EquationOfState::polytrope(gamma)?;
        let pb = EquilibriumProblem::new(solve_radial_star(&eos, 1.0, 2048)?, basis, SolverSettings::default())?;
        let jac = pb.assemble_jacobian(&StateVector::zero(basis), &pb.params(0.0, 0.0, k.clone()), JacobianMode::Analytic)?;
        println!("{gamma:>8} {:>14.4e} {:>14.4e}", jac.condition, jac.dilation_condition(basis));
    }
    match EquationOfState::polytrope(4.0 / 3.0) {
        Err(e) => println!("4/3 rejected: {e}"),
        Ok(_) => println!("4/3 accepted"),
    }
    let forced = EquationOfState::guarded(4.0 / 3.0, DEFAULT_GAMMA_EXCLUSION, true)?;
    println!("with the override: gamma = {:.6}", forced.gamma);
    Ok(())
}
