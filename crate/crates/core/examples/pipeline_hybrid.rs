//! Splits a domain with step and sampled parts into blocks and solves each.

use coboundary::{
    decompose_domain, rat, solve_full, verify_certificate, HybridFunction, IntervalSet, PipelineConfig, SampledFunction, StepFunction,
    StepPiece, VerifyMode,
};

fn main() -> coboundary::Result<()> {
    let atoms = StepFunction::new(vec![
        StepPiece::new(rat(0, 1), rat(1, 6), rat(1, 2)),
        StepPiece::new(rat(1, 6), rat(1, 3), rat(-1, 2)),
        StepPiece::new(rat(1, 3), rat(1, 2), rat(1, 4)),
    ])?;
    let s = SampledFunction::from_fn(&rat(1, 2), &rat(1, 1), 1 << 10, rat(5, 6), |t| {
        rat(1, 8) - rat(5, 6) * (t - rat(1, 2))
    })?;
    let f = HybridFunction::new(IntervalSet::unit(), atoms, Some(s))?;

    let cfg = PipelineConfig::default();
    let dec = decompose_domain(&f, &cfg)?;
    for (name, set) in dec.parts() {
        println!("{name:>3}: {:?} (measure {})", set.pieces(), set.measure());
    }
    let cert = solve_full(&f, &rat(1, 10), &rat(1, 1000), &cfg)?;
    for b in &cert.blocks {
        println!("{:>3}: residual {}, ‖g‖ {}", b.name, b.residual, b.norm_g);
    }
    let report = verify_certificate(&cert, VerifyMode::Numeric, &rat(1, 1_000_000_000))?;
    println!(
        "verified: {}, worst deviation {}",
        report.pass, report.identity_check.worst_deviation
    );
    Ok(())
}
