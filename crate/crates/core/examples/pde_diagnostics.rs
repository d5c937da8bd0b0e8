//! Checks a computed star against the original field equations and dumps
//! its fields on an `(r, z)` grid.
//!
//! ```bash
//! cargo run --example pde_diagnostics -- out/fields.csv
//! ```

use std::fs::File;
use std::io::BufWriter;

use magstar::config::RunConfig;
use magstar::diagnostics::{diagnose, reconstruct_fields, DiagnosticSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1);
    let mut cfg = RunConfig::default();
    cfg.grid.ns = 16;
    cfg.grid.nmu = 8;
    let pb = cfg.problem()?;
    let params = cfg.params(&pb, 0.02, 0.05)?;
    let out = pb.solve_from_predictor(&params)?;
    let sol = reconstruct_fields(&pb, &out.state, &params)?;

    let settings = DiagnosticSettings::default();
    let report = diagnose(&sol, &settings)?;
    for c in &report.checks {
        println!("{:<24} {:>12.4e}  threshold {:>10.3e}  {}", c.name, c.value, c.threshold, if c.pass { "ok" } else { "FAIL" });
    }
    println!(
        "force identity deviation {:.3e} -> {:.3e} when the spacing halves",
        report.force_identity.coarse.deviation, report.force_identity.fine.deviation
    );

    // a deliberately wrong shape is caught by the momentum check
    let mut bad = out.state.clone();
    bad.zeta = bad.zeta.scaled(1.1);
    let worse = diagnose(&reconstruct_fields(&pb, &bad, &params)?, &settings)?;
    println!("momentum residual with zeta x 1.1: {:.3e}", worse.momentum.relative);

    if let Some(p) = path {
        if let Some(dir) = std::path::Path::new(&p).parent() {
            std::fs::create_dir_all(dir)?;
        }
        sol.sample_fields(settings.dump_spacing, settings.dump_extent)?
            .write_csv(BufWriter::new(File::create(&p)?))?;
        println!("wrote {p}");
    }
    Ok(())
}
