//! Runs chosen acceptance criteria (all when none are named) on the default
//! configuration and prints one line each.
//!
//! ```bash
//! cargo run --example acceptance_report -- 1 2 6
//! ```

use magstar::config::RunConfig;
use magstar::verify::{VerifyContext, CRITERIA};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut ids: Vec<usize> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    if ids.is_empty() {
        ids = (1..=CRITERIA.len()).collect();
    }
    let ctx = VerifyContext::new(&RunConfig::default())?;
    for id in ids {
        if !(1..=CRITERIA.len()).contains(&id) {
            return Err(format!("criteria are numbered 1 to {}", CRITERIA.len()).into());
        }
        let r = ctx.run(id);
        println!("{}", r.line());
        for (k, v) in &r.values {
            println!("    {k} = {v:.6e}");
        }
    }
    Ok(())
}
