//! A deformation `g(x) = x (1 + ζ(x)/|x|²)` of the unit ball: its norm, Jacobian
//! determinant, inverse and the density rescaling that keeps the mass.
//!
//! ```bash
//! cargo run --example deformation_map
//! ```

use magstar::basis::{AxiField, Basis, Interpolator};
use magstar::eos::{solve_radial_star, EquationOfState};
use magstar::geometry::{g_apply, g_inverse, g_jacobian, mass_factor, mass_factor_derivative, x_norm};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let basis = Basis::new(8, 4)?;
    let interp = Interpolator::new(basis);
    // flattened at the poles, stretched at the equator
    let zeta = AxiField::interpolate(&interp, |s, mu| 0.04 * s * s * (1.0 - 3.0 * mu * mu) / 2.0 - 0.01 * s * s);
    println!("|zeta|_X = {:.5}", x_norm(&zeta));

    for (name, x) in [("pole", [0.0, 0.0, 1.0]), ("equator", [1.0, 0.0, 0.0]), ("inside", [0.3, 0.2, 0.4])] {
        let y = g_apply(&zeta, x);
        let (_, det) = g_jacobian(&zeta, x)?;
        let back = g_inverse(&zeta, y)?;
        let err = (0..3).map(|i| (back[i] - x[i]).abs()).fold(0.0, f64::max);
        println!("{name:>8}: g = [{:.5}, {:.5}, {:.5}], det = {det:.5}, inverse error {err:.1e}", y[0], y[1], y[2]);
    }

    let star = solve_radial_star(&EquationOfState::polytrope(2.0)?, 1.0, 1024)?;
    let m = mass_factor(&zeta, &star)?;
    println!("mass factor M = {m:.8}");
    let dilation = AxiField::quadratic(basis, 1.0);
    println!(
        "M'(0) applied to |x|^2 = {:.8} (exactly -3)",
        mass_factor_derivative(&AxiField::zero(basis), &dilation, &star)?
    );
    Ok(())
}
