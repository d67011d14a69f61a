//! Regenerates the committed probe baseline:
//! `cargo run -p ffproj --release --example probe_baseline > crates/cli/tests/data/probe_baseline.json`

use ffproj::sweep::{probe_grid, run_sweep};

fn main() {
    let report = run_sweep(&probe_grid(50), 0, 1_000_000).expect("probe grid runs");
    println!("{}", report.canonical_json());
}
