//! The full acceptance suite at default settings.

use std::process::ExitCode;
use std::time::Instant;

use magstar::config::RunConfig;
use magstar::verify::{VerifyContext, CRITERIA};

fn main() -> ExitCode {
    let cfg = RunConfig::default();
    let ctx = match VerifyContext::new(&cfg) {
        Ok(c) => c,
        Err(e) => {
            println!("acceptance: cannot set up the verification problem: {e}");
            return ExitCode::FAILURE;
        }
    };
    let start = Instant::now();
    let mut failed = 0;
    for id in 1..=CRITERIA.len() {
        let t = Instant::now();
        let r = ctx.run(id);
        println!("{}  ({:.1}s)", r.line(), t.elapsed().as_secs_f64());
        if !r.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} of {} criteria pass in {:.1}s",
        CRITERIA.len() - failed,
        CRITERIA.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
