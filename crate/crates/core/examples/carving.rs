//! Trims a set so a function keeps mean zero on what remains, and splits it
//! around its midpoint with a dyadic left share.

use coboundary::carve::{shrink_mean_zero, split_half, CarveConfig};
use coboundary::{rat, Interval, IntervalSet, PiecewiseAffine};

fn main() -> coboundary::Result<()> {
    let k = IntervalSet::new(vec![Interval::new(rat(0, 1), rat(2, 5)), Interval::new(rat(1, 2), rat(1, 1))]);
    let f = PiecewiseAffine::linear(&Interval::unit(), rat(1, 1), rat(0, 1));
    let mean = f.integrate(&k)? / k.measure();
    let f = f.add_constant(&-mean);

    let cfg = CarveConfig {
        ratio_bits: Some(8),
        ..CarveConfig::default()
    };
    let (e, trace) = shrink_mean_zero(&k, &f, &rat(1, 10), &cfg)?;
    println!("shrunk set {:?}", e.pieces());
    println!(
        "measure {}, ∫ f = {}, monotone trace: {}",
        e.measure(),
        f.integrate(&e)?,
        trace.is_monotone()
    );

    let s = split_half(&k, &f, &rat(1, 20), &cfg)?;
    println!("split set {:?}", s.set.pieces());
    println!("left share {} = {}/{}", s.ratio, s.p(), s.q());
    Ok(())
}
