//! Spherical polytropes of unit radius for a few exponents, with the
//! profile of the `n = 1` star written as CSV.
//!
//! ```bash
//! cargo run --example radial_star -- out/radial
//! ```

use std::path::PathBuf;

use magstar::eos::{mass_of_central_density, solve_radial_star, EquationOfState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/radial".into()));

    println!("{:>8} {:>6} {:>14} {:>14} {:>12}", "gamma", "n", "xi1", "mass", "kappa");
    for gamma in [2.0, 5.0 / 3.0, 1.5, 1.4] {
        let eos = EquationOfState::polytrope(gamma)?;
        let star = solve_radial_star(&eos, 1.0, 2048)?;
        println!(
            "{gamma:>8.4} {:>6.3} {:>14.10} {:>14.10} {:>12.6}",
            star.polytropic_index(),
            star.xi1,
            star.total_mass,
            star.eos.kappa
        );
    }

    // at fixed kappa the mass grows with central density only above 4/3
    for gamma in [2.0, 1.3] {
        let eos = EquationOfState::polytrope(gamma)?;
        let (m1, _) = mass_of_central_density(&eos, 1.0)?;
        let (m2, _) = mass_of_central_density(&eos, 2.0)?;
        println!("gamma {gamma}: M(2 rho_c) / M(rho_c) = {:.4}", m2 / m1);
    }

    let star = solve_radial_star(&EquationOfState::polytrope(2.0)?, 1.0, 2048)?;
    star.save(&out, "profile", None)?;
    println!("wrote {}", out.join("profile.csv").display());
    Ok(())
}
