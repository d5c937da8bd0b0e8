//! The ring-averaged Green's functions behind both potential operators.
//!
//! ```bash
//! cargo run --example green_kernels
//! ```

use std::f64::consts::PI;

use magstar::kernels::{g3_kernel, k5_kernel, C5};
use magstar::special::{agm_iterations, elliptic_e, elliptic_k};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for m in [0.0, 0.5, 0.9, 0.999999] {
        println!(
            "m = {m:<9} K = {:.15} E = {:.15} ({} AGM steps)",
            elliptic_k(m)?,
            elliptic_e(m)?,
            agm_iterations(m)
        );
    }

    // far from the ring both kernels approach point-source values; K5 leaves
    // out the q³ area factor of the sphere
    let (q, d) = (0.3, 20.0);
    println!("G3 far field: {:.6e} vs {:.6e}", g3_kernel(0.0, q, d), 2.0 * PI / d);
    println!(
        "K5 far field: {:.6e} vs {:.6e}",
        k5_kernel(0.0, q, d),
        2.0 * PI * PI / d.powi(3)
    );

    println!("approaching the ring, G3 diverges logarithmically:");
    for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
        println!("  dz = {eps:.0e}: G3 = {:.6}", g3_kernel(0.5, 0.5, eps));
    }
    println!("C5 = {C5:.12}");
    Ok(())
}
