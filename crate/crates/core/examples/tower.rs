//! Runs the tower solver on f(t) = t − 1/2 and prints the stage ledger.

use coboundary::tower::solve_tower_certificate;
use coboundary::{rat, HybridFunction, SampledFunction, TowerConfig};

fn main() -> coboundary::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1 << 12);
    let s = SampledFunction::from_fn(&rat(0, 1), &rat(1, 1), n, rat(1, 1), |t| t - rat(1, 2))?;
    let f = HybridFunction::from_sampled(s)?;
    let cert = solve_tower_certificate(&f, &rat(1, 10), &rat(1, 1000), &TowerConfig::default())?;
    println!("{:>5} {:>6} {:>7} {:>12} {:>12}", "stage", "level", "cells", "‖g_k‖", "‖h_k‖");
    for s in cert.stage_ledger.iter().flatten() {
        println!(
            "{:>5} {:>6} {:>7} {:>12} {:>12}",
            s.k,
            s.level,
            s.cells,
            s.norm_g.to_string(),
            s.norm_h.to_string()
        );
    }
    println!("residual {}, ‖g‖/‖f‖ = {}", cert.residual_bound, cert.norm_ratio);
    Ok(())
}
