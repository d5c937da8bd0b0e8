//! The Newtonian potential of a uniform ball and the inverse of the
//! five-dimensional operator on a manufactured pair, each checked against
//! an independent answer.
//!
//! ```bash
//! cargo run --example potential_operators
//! ```

use std::f64::consts::PI;

use magstar::potentials::{linv_apply_radius, linv_fd_oracle, newtonian_potential, FdOracleSettings};
use magstar::quadrature::QuadratureSettings;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = QuadratureSettings::default();
    let uniform = |_s: f64, _mu: f64| 1.0;
    let targets = [[0.0, 0.0], [0.5, 0.0], [0.3, 0.6], [2.0, 1.0]];
    let u = newtonian_potential(&uniform, None, &targets, &q)?;
    println!("uniform ball:");
    for (t, v) in targets.iter().zip(&u) {
        let r = (t[0] * t[0] + t[1] * t[1]).sqrt();
        let exact = if r <= 1.0 { 2.0 * PI * (1.0 - r * r / 3.0) } else { 4.0 * PI / (3.0 * r) };
        println!("  r = {r:.4}: U = {v:.10} exact {exact:.10}");
    }

    // u = r² exp(-|x|²) has this source; densities take (s, μ)
    let source = |s: f64, _mu: f64| (4.0 * s * s - 10.0) * (-s * s).exp();
    let f = |r: f64, z: f64| source(r.hypot(z), 0.0);
    let fd = linv_fd_oracle(
        &f,
        &FdOracleSettings {
            extent: 8.0,
            cells: 256,
            ..Default::default()
        },
    )?;
    let pts = [[0.5, 0.0], [1.0, 0.5], [0.2, 1.2]];
    // the wider source needs more points per panel than the unit ball
    let kernel = linv_apply_radius(&source, 4.0, &pts, &QuadratureSettings::for_radial_degree(24))?;
    println!("manufactured solution:");
    for (p, k) in pts.iter().zip(&kernel) {
        let exact = p[0] * p[0] * (-(p[0] * p[0] + p[1] * p[1])).exp();
        println!(
            "  ({:.1}, {:.1}): kernel {k:.8} finite differences {:.8} exact {exact:.8}",
            p[0],
            p[1],
            fd.value(p[0], p[1])
        );
    }
    Ok(())
}
