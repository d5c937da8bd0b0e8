//! The JSON run configuration: defaults, partial documents and the hash
//! stamped on every artifact.
//!
//! ```bash
//! cargo run --example run_config
//! ```

use magstar::config::RunConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let defaults = RunConfig::default();
    println!("{}", defaults.to_json());
    println!("hash {}", defaults.hash());

    let cfg = RunConfig::from_json(r#"{"eos": {"gamma": 1.8}, "k": [1.0, 0.0, 0.5], "sweep": {"omega2": [0, 0.02]}}"#)?;
    println!("gamma {} k {:?} omega2 {:?}", cfg.eos.gamma, cfg.k, cfg.sweep.omega2);
    println!("hash {}", cfg.hash());

    for bad in [r#"{"eos": {"gamma": 1.1}}"#, r#"{"sweep": {"epsilon": [0.1]}}"#, r#"{"grid": {"nz": 4}}"#] {
        println!("{bad}: {}", RunConfig::from_json(bad).unwrap_err());
    }
    Ok(())
}
