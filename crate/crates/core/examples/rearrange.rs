//! Reorders a zero-sum vector so every prefix stays within its max entry,
//! then does the same column-wise for a matrix.

use coboundary::rearrange::partial_sums;
use coboundary::{rat, rearrange_matrix, rearrange_zero_sum, Rat};

fn show(v: &[Rat]) -> String {
    v.iter().map(Rat::to_string).collect::<Vec<_>>().join(", ")
}

fn main() -> coboundary::Result<()> {
    let a = vec![rat(3, 1), rat(2, 1), rat(-1, 2), rat(-4, 1), rat(-1, 2)];
    let p = rearrange_zero_sum(&a)?;
    let b = p.apply(&a);
    println!("input        {}", show(&a));
    println!("order        {:?}", p.one_based());
    println!("prefix sums  {}", show(&partial_sums(&b)));

    let m = vec![
        vec![rat(1, 1), rat(1, 1), rat(-2, 1)],
        vec![rat(2, 1), rat(-1, 1), rat(-1, 1)],
        vec![rat(1, 1), rat(1, 1), rat(-2, 1)],
    ];
    let r = rearrange_matrix(&m)?;
    for (i, col) in r.column_partials(&m).iter().enumerate() {
        println!("column {i}     {}", show(col));
    }
    Ok(())
}
