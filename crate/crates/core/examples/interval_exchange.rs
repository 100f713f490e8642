//! Builds a rotation and a three-piece exchange, composes them and follows
//! an orbit.

use coboundary::exchange::ExchangePiece;
use coboundary::verify::orbit;
use coboundary::{rat, Interval, IntervalExchange, IntervalSet};

fn main() -> coboundary::Result<()> {
    let r = IntervalExchange::rotation(&rat(1, 3))?;
    let t = IntervalExchange::new(vec![
        ExchangePiece::new(Interval::new(rat(0, 1), rat(1, 4)), Interval::new(rat(3, 4), rat(1, 1))),
        ExchangePiece::new(Interval::new(rat(1, 4), rat(1, 2)), Interval::new(rat(1, 2), rat(3, 4))),
        ExchangePiece::new(Interval::new(rat(1, 2), rat(1, 1)), Interval::new(rat(0, 1), rat(1, 2))),
    ])?;
    let c = IntervalExchange::compose(&t, &r)?;
    println!("T∘R has {} pieces, breakpoints {:?}", c.piece_count(), c.breakpoints());
    println!("measure preserving: {}", c.verify_measure_preserving().pass);

    let s = IntervalSet::interval(rat(0, 1), rat(1, 5));
    println!("T∘R maps [0, 1/5) to {:?}", c.map_set(&s)?.pieces());

    let o = orbit(&c, &rat(1, 7), 6);
    let pts: Vec<String> = o.points.iter().map(|x| x.to_string()).collect();
    println!("orbit of 1/7: {}", pts.join(" → "));
    Ok(())
}
