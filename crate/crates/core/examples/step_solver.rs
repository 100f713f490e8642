//! Solves f = g∘T − g exactly for a mean-zero step function.

use coboundary::{rat, solve_step, verify_certificate, Rat, StepFunction, StepPiece, VerifyMode};

fn main() -> coboundary::Result<()> {
    let f = StepFunction::new(vec![
        StepPiece::new(rat(0, 1), rat(1, 5), rat(1, 1)),
        StepPiece::new(rat(1, 5), rat(1, 2), rat(-1, 3)),
        StepPiece::new(rat(1, 2), rat(3, 4), rat(-1, 2)),
        StepPiece::new(rat(3, 4), rat(1, 1), rat(1, 10)),
    ])?;
    let cert = solve_step(&f)?;
    for p in cert.t.pieces() {
        println!("T: [{}, {}) → [{}, {})", p.src.lo, p.src.hi, p.dst.lo, p.dst.hi);
    }
    for p in cert.g.pieces() {
        println!("g = {}·t + {} on [{}, {})", p.slope, p.intercept, p.lo, p.hi);
    }
    let report = verify_certificate(&cert, VerifyMode::Exact, &Rat::zero())?;
    println!("verified: {}, ‖g‖/‖f‖ = {}", report.pass, report.norm_check.ratio);
    Ok(())
}
