//! Tampers with a valid certificate in several ways and shows that the
//! verifier rejects each copy.

use coboundary::verify::{apply_mutation, mutation_battery};
use coboundary::{rat, solve_step, verify_certificate, Rat, StepFunction, StepPiece, VerifyMode};

fn main() -> coboundary::Result<()> {
    let f = StepFunction::new(vec![
        StepPiece::new(rat(0, 1), rat(3, 7), rat(4, 7)),
        StepPiece::new(rat(3, 7), rat(1, 1), rat(-3, 7)),
    ])?;
    let cert = solve_step(&f)?;
    println!("original: {}", verify_certificate(&cert, VerifyMode::Exact, &Rat::zero())?.pass);
    for m in mutation_battery(&cert, 8, 42) {
        let r = verify_certificate(&apply_mutation(&cert, &m), VerifyMode::Exact, &Rat::zero())?;
        println!("{:<60} accepted: {}", format!("{m:?}"), r.pass);
    }
    Ok(())
}
