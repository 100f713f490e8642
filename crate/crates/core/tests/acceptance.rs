//! Acceptance suite. Runs as a plain binary so that every criterion prints
//! one PASS/FAIL line; exits non-zero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use coboundary::carve::{shrink_mean_zero, split_half, CarveConfig};
use coboundary::certificate::CoboundaryCertificate;
use coboundary::verify::{apply_mutation, mutation_battery, Mutation};
use coboundary::{
    decompose_domain, rat, rearrange_matrix, rearrange_zero_sum, solve_full, solve_step, verify_certificate, HybridFunction, Interval,
    IntervalExchange, IntervalSet, PiecewiseAffine, PipelineConfig, Rat, SampledFunction, StepFunction, StepPiece, VerifyMode,
};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{permutations, random_cuts, random_matrix, random_step, random_zero_sum};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn sup_abs_step(f: &StepFunction) -> Rat {
    f.pieces().iter().map(|p| p.value.abs()).max().unwrap_or_default()
}

/// Sup of |g| from the piece endpoints; affine pieces peak at an end.
fn sup_abs_affine(g: &PiecewiseAffine) -> Rat {
    g.pieces()
        .iter()
        .flat_map(|p| [(&p.slope * &p.lo + &p.intercept).abs(), (&p.slope * &p.hi + &p.intercept).abs()])
        .max()
        .unwrap_or_default()
}

/// Targets of `t` tile its domain and every piece keeps its length.
fn tiles_domain(t: &IntervalExchange) -> bool {
    let mut src: Vec<_> = t.pieces().iter().map(|p| p.src.clone()).collect();
    let mut dst: Vec<_> = t.pieces().iter().map(|p| p.dst.clone()).collect();
    if t.pieces().iter().any(|p| p.src.length() != p.dst.length()) {
        return false;
    }
    src.sort_by(|a, b| a.lo.cmp(&b.lo));
    dst.sort_by(|a, b| a.lo.cmp(&b.lo));
    let total = |v: &[Interval]| v.iter().map(Interval::length).sum::<Rat>();
    let disjoint = |v: &[Interval]| v.windows(2).all(|w| w[0].hi <= w[1].lo);
    let union = |v: &[Interval]| IntervalSet::new(v.to_vec());
    disjoint(&src) && disjoint(&dst) && total(&src) == total(&dst) && union(&src) == union(&dst)
}

fn integral_over(f: &StepFunction, s: &IntervalSet) -> Rat {
    let mut acc = Rat::zero();
    for p in f.pieces() {
        for iv in s.pieces() {
            let lo = Rat::max_of(&p.lo, &iv.lo);
            let hi = Rat::min_of(&p.hi, &iv.hi);
            if lo < hi {
                acc += &p.value * (hi - lo);
            }
        }
    }
    acc
}

fn scale_to_ints(a: &[Rat]) -> Vec<i128> {
    let l = coboundary::rational::lcm_denominators(a.iter());
    let l = Rat::from_int(l);
    a.iter().map(|x| (x * &l).numer().to_i128().expect("small")).collect()
}

fn exact_step_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..200 {
        let f = random_step(&mut rng, 40, 1_000_000);
        let cert = solve_step(&f).map_err(|e| format!("case {case}: {e}"))?;
        let r = verify_certificate(&cert, VerifyMode::Exact, &Rat::zero()).map_err(|e| e.to_string())?;
        ensure!(r.pass, "case {case}: verifier rejected: {:?}", r.identity_check.failures);
        ensure!(r.identity_check.worst_deviation.is_zero(), "case {case}: nonzero residual");
        ensure!(tiles_domain(&cert.t), "case {case}: T is not measure preserving");
        ensure!(sup_abs_affine(&cert.g) <= sup_abs_step(&f), "case {case}: ‖g‖ > ‖f‖");
        for _ in 0..20 {
            let x = Rat::new(rng.gen_range(0..1_000_003i64), 1_000_003);
            let tx = cert.t.apply(&x).map_err(|e| e.to_string())?;
            let lhs = cert.g.value_at(&tx).unwrap() - cert.g.value_at(&x).unwrap();
            ensure!(&lhs == f.value_at(&x).unwrap(), "case {case}: identity fails at {x}");
        }
    }
    Ok("200 random step functions, residual 0, ‖g‖ ≤ ‖f‖".into())
}

fn introduction_function() -> Outcome {
    for a in [rat(2, 5), rat(3, 7), rat(1, 2)] {
        let f = StepFunction::new(vec![
            StepPiece::new(Rat::zero(), a.clone(), Rat::one() - &a),
            StepPiece::new(a.clone(), Rat::one(), -&a),
        ])
        .unwrap();
        let cert = solve_step(&f).map_err(|e| e.to_string())?;
        ensure!(cert.t == IntervalExchange::rotation(&a).unwrap(), "a = {a}: T is not the rotation");
        let offsets: Vec<Rat> = cert
            .g
            .pieces()
            .iter()
            .map(|p| if p.slope == Rat::one() { Some(p.intercept.clone()) } else { None })
            .collect::<Option<_>>()
            .ok_or(format!("a = {a}: g has a piece with slope ≠ 1"))?;
        ensure!(offsets.windows(2).all(|w| w[0] == w[1]), "a = {a}: g − t is not constant");
        let norm = sup_abs_affine(&cert.g);
        ensure!(norm == rat(1, 2), "a = {a}: ‖g‖ = {norm}");
        ensure!(norm <= *Rat::max_of(&a, &(Rat::one() - &a)), "a = {a}: ‖g‖ > ‖f‖");
        let r = verify_certificate(&cert, VerifyMode::Exact, &Rat::zero()).map_err(|e| e.to_string())?;
        ensure!(r.pass, "a = {a}: verifier rejected");
    }
    Ok("a ∈ {2/5, 3/7, 1/2}: rotation by a, g = t − 1/2".into())
}

fn zero_sum_rearrangement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut brute = 0;
    for case in 0..1000 {
        let n = rng.gen_range(1..=50);
        let a = random_zero_sum(&mut rng, n);
        let p = rearrange_zero_sum(&a).map_err(|e| format!("case {case}: {e}"))?;
        let bound = a.iter().map(Rat::abs).max().unwrap();
        let mut s = Rat::zero();
        for &i in p.image() {
            s += &a[i];
            ensure!(s.abs() <= bound, "case {case}: prefix sum {s} exceeds {bound}");
        }
        if n <= 8 {
            brute += 1;
            let ints = scale_to_ints(&a);
            let c = ints.iter().map(|x| x.abs()).max().unwrap();
            let valid: Vec<Vec<usize>> = permutations(n)
                .into_iter()
                .filter(|q| {
                    let mut acc = 0i128;
                    q.iter().all(|&i| {
                        acc += ints[i];
                        acc.abs() <= c
                    })
                })
                .collect();
            ensure!(
                valid.iter().any(|q| q.as_slice() == p.image()),
                "case {case}: output not among valid orders"
            );
        }
    }
    Ok(format!("1000 vectors, {brute} confirmed by brute force"))
}

fn feasible_exhaustive(a: &[Vec<i128>], c: i128) -> bool {
    fn go(row: usize, sums: &mut Vec<i128>, a: &[Vec<i128>], perms: &[Vec<usize>], c: i128) -> bool {
        if row == a.len() {
            return true;
        }
        for p in perms {
            if p.iter().enumerate().all(|(j, &k)| (sums[j] + a[row][k]).abs() <= 2 * c) {
                for (j, &k) in p.iter().enumerate() {
                    sums[j] += a[row][k];
                }
                let ok = go(row + 1, sums, a, perms, c);
                for (j, &k) in p.iter().enumerate() {
                    sums[j] -= a[row][k];
                }
                if ok {
                    return true;
                }
            }
        }
        false
    }
    let m = a.first().map_or(0, Vec::len);
    go(0, &mut vec![0; m], a, &permutations(m), c)
}

fn matrix_rearrangement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut small = 0;
    for case in 0..500 {
        let cap = if case % 2 == 0 { 4 } else { 12 };
        let (n, m) = (rng.gen_range(1..=cap), rng.gen_range(2..=cap));
        let a = random_matrix(&mut rng, n, m);
        let r = rearrange_matrix(&a).map_err(|e| format!("case {case}: {e}"))?;
        let c = a.iter().flatten().map(Rat::abs).max().unwrap();
        let two_c = &c + &c;
        let mut sums = vec![Rat::zero(); m];
        for (row, p) in a.iter().zip(&r.permutations) {
            ensure!(p.is_valid() && p.len() == m, "case {case}: not a permutation");
            for j in 0..m {
                sums[j] += &row[p.image()[j]];
                ensure!(sums[j].abs() <= two_c, "case {case}: column {j} reaches {}", sums[j]);
            }
        }
        if n <= 4 && m <= 4 {
            small += 1;
            let flat: Vec<Rat> = a.iter().flatten().cloned().collect();
            let ints = scale_to_ints(&flat);
            let rows: Vec<Vec<i128>> = ints.chunks(m).map(<[i128]>::to_vec).collect();
            let ci = ints.iter().map(|x| x.abs()).max().unwrap();
            ensure!(feasible_exhaustive(&rows, ci), "case {case}: exhaustive search finds no assignment");
        }
    }
    Ok(format!("500 matrices within 2C, {small} confirmed by exhaustive search"))
}

/// Random union of intervals in [0, 1) and a mean-zero step function on it.
fn random_carving_input(rng: &mut ChaCha8Rng) -> (IntervalSet, StepFunction) {
    let den = rng.gen_range(24..400);
    let count = 2 * rng.gen_range(1..=4);
    let cuts = random_cuts(rng, count, den);
    let cuts = if cuts.len() % 2 == 1 {
        cuts[..cuts.len() - 1].to_vec()
    } else {
        cuts
    };
    let k = IntervalSet::new(cuts.chunks(2).map(|w| Interval::new(w[0].clone(), w[1].clone())).collect());
    let k = if k.measure().is_zero() {
        IntervalSet::interval(rat(1, 8), rat(7, 8))
    } else {
        k
    };
    let mut pieces = Vec::new();
    for iv in k.pieces() {
        let mid = iv.midpoint();
        for (lo, hi) in [(iv.lo.clone(), mid.clone()), (mid, iv.hi.clone())] {
            pieces.push(StepPiece::new(lo, hi, common::random_rat(rng, 30, 7)));
        }
    }
    let raw = StepFunction::new(pieces).unwrap();
    let mean = raw.integral() / k.measure();
    (k, raw.add_constant(&-mean))
}

fn carving_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = CarveConfig {
        ratio_bits: Some(8),
        ..CarveConfig::default()
    };
    let mut splits = 0;
    for case in 0..100 {
        let (k, f) = random_carving_input(&mut rng);
        let total = k.measure();
        let c = &total * Rat::new(rng.gen_range(1..100), 100);
        let (e, _) = shrink_mean_zero(&k, &f.to_affine(), &c, &cfg).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(e.measure() == &total - &c, "case {case}: λ(E) = {}", e.measure());
        ensure!(integral_over(&f, &e).is_zero(), "case {case}: ∫_E f ≠ 0");
        ensure!(e.is_subset(&k), "case {case}: E ⊄ K");
        ensure!(e.inf() > k.inf() && e.sup() < k.sup(), "case {case}: E touches an endpoint of K");

        let hull = k.hull().unwrap();
        let mid = hull.midpoint();
        let cap = Rat::min_of(&k.clip(&hull.lo, &mid).measure(), &k.clip(&mid, &hull.hi).measure()).clone();
        if cap.is_positive() {
            splits += 1;
            let c = &cap * Rat::new(rng.gen_range(1..100), 100);
            let s = split_half(&k, &f.to_affine(), &c, &cfg).map_err(|e| format!("case {case}: split: {e}"))?;
            let left = s.set.clip(&hull.lo, &mid).measure();
            ensure!(
                s.ratio == &left / s.set.measure(),
                "case {case}: ratio {} is not the left share",
                s.ratio
            );
            ensure!(s.set.measure() == &total - &c, "case {case}: split measure");
            ensure!(integral_over(&f, &s.set).is_zero(), "case {case}: split keeps ∫ ≠ 0");
            ensure!(
                s.set.inf() > k.inf() && s.set.sup() < k.sup(),
                "case {case}: split touches an endpoint"
            );
        }
    }
    Ok(format!("100 shrinks exact, {splits} half splits with exact ratio"))
}

fn ramp(grid_log2: u32) -> HybridFunction {
    let s = SampledFunction::from_fn(&Rat::zero(), &Rat::one(), 1 << grid_log2, Rat::one(), |t| t - rat(1, 2)).unwrap();
    HybridFunction::from_sampled(s).unwrap()
}

fn tower_suite(cert: &CoboundaryCertificate) -> Outcome {
    let delta = rat(1, 1000);
    ensure!(cert.residual_bound <= delta, "residual {} > δ", cert.residual_bound);
    let tol = rat(1, 1_000_000_000);
    let r = verify_certificate(cert, VerifyMode::Numeric, &tol).map_err(|e| e.to_string())?;
    ensure!(r.pass, "verifier rejected: {:?}", r.identity_check.failures);
    ensure!(
        r.identity_check.worst_deviation <= &delta + &tol,
        "worst deviation {}",
        r.identity_check.worst_deviation
    );

    let ledger = cert.stage_ledger.as_ref().ok_or("no stage ledger")?;
    let last = ledger.last().ok_or("empty ledger")?;
    ensure!(
        last.level == 9 && last.cells == 512,
        "last stage at level {} with {} cells",
        last.level,
        last.cells
    );
    for s in ledger {
        ensure!(s.cyclic && s.identity_exact && s.refines_previous, "stage {} fails its checks", s.k);
        let limit = if s.k == 0 { s.norm_h.clone() } else { &s.norm_h * Rat::from_int(4) };
        ensure!(s.norm_g <= limit, "stage {}: ‖g_k‖ = {} > {limit}", s.k, s.norm_g);
    }
    for j in 0..512i64 {
        let x = Rat::new(2 * j + 1, 1024);
        let tx = cert.t.apply(&x).map_err(|e| e.to_string())?;
        let d = cert.g.value_at(&tx).unwrap() - cert.g.value_at(&x).unwrap();
        let average = Rat::new(2 * j + 1, 1024) - rat(1, 2);
        ensure!(d == average, "cell {j}: g∘T − g = {d}, cell average {average}");
        ensure!(
            cert.g.value_at(&Rat::new(j, 512)) == cert.g.value_at(&x),
            "g is not constant on cell {j}"
        );
    }
    let norm = sup_abs_affine(&cert.g);
    ensure!(norm <= rat(11, 20), "‖g‖ = {norm} > 11/20");
    Ok(format!(
        "residual {}, {} stages ending at level 9, ‖g‖ = {norm}",
        cert.residual_bound,
        ledger.len()
    ))
}

/// Balanced atoms on [0, 1/3), a positive atom on [1/3, 1/2), and
/// 1/8 − 5(t − 1/2)/6 sampled on [1/2, 1).
fn hybrid() -> HybridFunction {
    let atoms = StepFunction::new(vec![
        StepPiece::new(Rat::zero(), rat(1, 6), rat(1, 2)),
        StepPiece::new(rat(1, 6), rat(1, 3), rat(-1, 2)),
        StepPiece::new(rat(1, 3), rat(1, 2), rat(1, 4)),
    ])
    .unwrap();
    let s = SampledFunction::from_fn(&rat(1, 2), &Rat::one(), 1 << 12, rat(5, 6), |t| {
        rat(1, 8) - rat(5, 6) * (t - rat(1, 2))
    })
    .unwrap();
    HybridFunction::new(IntervalSet::unit(), atoms, Some(s)).unwrap()
}

fn pipeline_glue() -> Outcome {
    let (eps, delta) = (rat(1, 10), rat(1, 1000));
    let cfg = PipelineConfig::default();
    let f = hybrid();
    let dec = decompose_domain(&f, &cfg).map_err(|e| e.to_string())?;
    let parts = dec.parts();
    let measure: Rat = parts.iter().flat_map(|(_, s)| s.pieces().iter().map(Interval::length)).sum();
    ensure!(measure == Rat::one(), "block measures sum to {measure}");
    for (i, (a, sa)) in parts.iter().enumerate() {
        for (b, sb) in &parts[i + 1..] {
            ensure!(sa.is_disjoint(sb), "blocks {a} and {b} overlap");
        }
    }
    ensure!(
        parts.len() == 3,
        "expected C, B0 and one mixed block, got {:?}",
        parts.iter().map(|p| &p.0).collect::<Vec<_>>()
    );

    let tol = rat(1, 1_000_000_000);
    let a = solve_full(&f, &eps, &delta, &cfg).map_err(|e| e.to_string())?;
    let r = verify_certificate(&a, VerifyMode::Numeric, &tol).map_err(|e| e.to_string())?;
    ensure!(r.pass, "verifier rejected: {:?}", r.identity_check.failures);
    ensure!(a.residual_bound <= delta, "residual {}", a.residual_bound);
    ensure!(r.norm_check.ratio <= Rat::one() + &eps, "norm ratio {}", r.norm_check.ratio);
    let b = solve_full(&f.neg(), &eps, &delta, &cfg).map_err(|e| e.to_string())?;
    ensure!(
        verify_certificate(&b, VerifyMode::Numeric, &tol).map_err(|e| e.to_string())?.pass,
        "−f rejected"
    );
    ensure!(
        a.residual_bound == b.residual_bound,
        "residuals differ: {} vs {}",
        a.residual_bound,
        b.residual_bound
    );
    ensure!(
        a.norm_ratio == b.norm_ratio,
        "norm ratios differ: {} vs {}",
        a.norm_ratio,
        b.norm_ratio
    );
    Ok(format!(
        "3 blocks, residual {}, norm ratio {}",
        a.residual_bound,
        a.norm_ratio.to_decimal(6)
    ))
}

fn mutation_suite(tower: &CoboundaryCertificate) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let step = solve_step(&random_step(&mut rng, 12, 1000)).map_err(|e| e.to_string())?;
    let intro = solve_step(
        &StepFunction::new(vec![
            StepPiece::new(Rat::zero(), rat(2, 5), rat(3, 5)),
            StepPiece::new(rat(2, 5), Rat::one(), rat(-2, 5)),
        ])
        .unwrap(),
    )
    .map_err(|e| e.to_string())?;
    let hybrid = solve_full(&hybrid(), &rat(1, 10), &rat(1, 1000), &PipelineConfig::default()).map_err(|e| e.to_string())?;

    let mut tampered: Vec<(String, CoboundaryCertificate)> = Vec::new();
    for (name, cert, n) in [
        ("step", &step, 15),
        ("rotation", &intro, 10),
        ("tower", tower, 13),
        ("hybrid", &hybrid, 10),
    ] {
        for m in mutation_battery(cert, n, 100 + n as u64) {
            tampered.push((format!("{name} {m:?}"), apply_mutation(cert, &m)));
        }
    }
    let by = rat(1, 1000);
    tampered.push((
        "rotation g + 1/1000 on [0, 1/5)".into(),
        apply_mutation(
            &intro,
            &Mutation::PerturbG {
                lo: Rat::zero(),
                hi: rat(1, 5),
                by,
            },
        ),
    ));
    tampered.push(("step f × 2".into(), apply_mutation(&step, &Mutation::ScaleF(rat(2, 1)))));
    ensure!(tampered.len() >= 50, "only {} mutations generated", tampered.len());
    let mut kinds = [0usize; 3];
    for (name, cert) in &tampered {
        let mode = if cert.f.is_step() { VerifyMode::Exact } else { VerifyMode::Numeric };
        let r = verify_certificate(cert, mode, &rat(1, 1_000_000_000)).map_err(|e| e.to_string())?;
        ensure!(!r.pass, "accepted tampered certificate: {name}");
        kinds[if name.contains("PerturbG") || name.contains("g +") {
            0
        } else if name.contains("SwapTargets") {
            1
        } else {
            2
        }] += 1;
    }
    ensure!(kinds.iter().all(|&k| k > 0), "mutation kinds not all covered: {kinds:?}");
    Ok(format!(
        "{} tampered certificates rejected ({} g, {} T, {} f)",
        tampered.len(),
        kinds[0],
        kinds[1],
        kinds[2]
    ))
}

fn run(name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let took = start.elapsed();
    let (ok, detail) = match outcome {
        Ok(d) if took <= limit => (true, d),
        Ok(d) => (false, format!("{d}; took {took:.2?}, limit {limit:?}")),
        Err(e) => (false, e),
    };
    println!("{} {name}: {detail} [{took:.2?}]", if ok { "PASS" } else { "FAIL" });
    ok
}

fn main() {
    let secs = Duration::from_secs;
    let mut tower_cert = None;
    let results = [
        run("criterion 1, exact step suite", secs(10), exact_step_suite),
        run("criterion 2, introduction function", secs(1), introduction_function),
        run("criterion 3, zero-sum rearrangement", secs(5), zero_sum_rearrangement),
        run("criterion 4, matrix rearrangement", secs(30), matrix_rearrangement),
        run("criterion 5, carving", secs(5), carving_suite),
        run("criterion 6, tower on t − 1/2", secs(30), || {
            let cert = solve_full(&ramp(14), &rat(1, 10), &rat(1, 1000), &PipelineConfig::default()).map_err(|e| e.to_string())?;
            let out = tower_suite(&cert);
            tower_cert = Some(cert);
            out
        }),
        run("criterion 7, pipeline glue", secs(60), pipeline_glue),
        run("criterion 8, mutation battery", secs(60), || {
            let cert = match tower_cert.take() {
                Some(c) => c,
                None => solve_full(&ramp(10), &rat(1, 10), &rat(1, 1000), &PipelineConfig::default()).map_err(|e| e.to_string())?,
            };
            mutation_suite(&cert)
        }),
    ];
    let passed = results.iter().filter(|&&r| r).count();
    println!("{passed}/{} acceptance criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
