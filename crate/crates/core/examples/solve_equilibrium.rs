//! One rotating magnetized star by Newton's method from the first-order
//! predictor, with its iteration trace.
//!
//! ```bash
//! cargo run --example solve_equilibrium -- 0.02 0.05
//! ```

use magstar::config::RunConfig;
use magstar::diagnostics::reconstruct_fields;
use magstar::equilibrium::write_trace;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>());
    let omega2 = args.next().transpose()?.unwrap_or(0.02);
    let eps = args.next().transpose()?.unwrap_or(0.05);

    let mut cfg = RunConfig::default();
    cfg.grid.ns = 16;
    cfg.grid.nmu = 8;
    let pb = cfg.problem()?;
    let params = cfg.params(&pb, omega2, eps)?;
    let out = pb.solve_from_predictor(&params)?;
    write_trace(std::io::stdout().lock(), &out.trace)?;

    let sol = reconstruct_fields(&pb, &out.state, &params)?;
    println!("equatorial radius {:.8}", sol.r_eq);
    println!("polar radius      {:.8}", sol.r_pol);
    println!("oblateness        {:.6e}", sol.oblateness());
    println!("central density   {:.8}", sol.central_density());
    println!("mass              {:.12} (target {:.12})", sol.total_mass, sol.target_mass);
    Ok(())
}
