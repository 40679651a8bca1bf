//! One PASS/FAIL line per acceptance criterion; fails if any criterion does.

use gurarij_core::acceptance::run_all;

fn main() {
    let seed = std::env::var("GURARIJ_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let results = run_all(seed, |r| println!("{}", r.line()));
    let failed = results.iter().filter(|r| !r.passed).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
