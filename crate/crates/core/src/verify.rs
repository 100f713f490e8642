//! Independent checking of certificates from `(f, T, g)` alone.
//!
//! The identity is checked on the atoms of the common refinement of the
//! breakpoints of `f`, `g`, the sources of `T`, and the preimages of `g`'s
//! breakpoints. On each atom `g∘T − g − f` is affine, so its sup is attained
//! at one of the two endpoints.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certificate::CoboundaryCertificate;
use crate::error::Result;
use crate::exchange::{ExchangePiece, IntervalExchange, MeasureReport};
use crate::function::{common_refinement, AffinePiece, PiecewiseAffine};
use crate::interval::Interval;
use crate::rational::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyMode {
    #[default]
    Exact,
    /// Exact checks plus pointwise checks on the sample grid, allowing `tol`
    /// on top of the claimed residual.
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub pass: bool,
    pub atoms_checked: usize,
    pub samples_checked: usize,
    pub worst_deviation: Rat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_atom: Option<Interval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_point: Option<Rat>,
    pub allowed: Rat,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormCheck {
    pub pass: bool,
    pub norm_f: Rat,
    pub norm_g: Rat,
    pub ratio: Rat,
    pub bound: Rat,
    pub claimed_ratio: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub pass: bool,
    pub identity_check: IdentityCheck,
    pub measure_check: MeasureReport,
    pub norm_check: NormCheck,
    /// Points where the identity is not checked: the atom endpoints.
    pub exceptional_points: Vec<Rat>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn source_piece<'a>(t: &'a IntervalExchange, x: &Rat) -> Option<&'a ExchangePiece> {
    let ps = t.pieces();
    let i = ps.partition_point(|p| &p.src.hi <= x);
    ps.get(i).filter(|p| p.src.contains(x))
}

/// `x ↦ (g∘T − g − f)(x)` as slope and intercept on the atom around `m`.
fn defect_at(f: &PiecewiseAffine, t: &IntervalExchange, g: &PiecewiseAffine, m: &Rat) -> std::result::Result<(Rat, Rat), String> {
    let tp = source_piece(t, m).ok_or_else(|| format!("T is undefined at {m}"))?;
    let s = tp.shift();
    let image = m + &s;
    let gt: &AffinePiece = g.piece_at(&image).ok_or_else(|| format!("g is undefined at T({m}) = {image}"))?;
    let gx = g.piece_at(m).ok_or_else(|| format!("g is undefined at {m}"))?;
    let fx = f.piece_at(m).ok_or_else(|| format!("f is undefined at {m}"))?;
    let slope = &gt.slope - &gx.slope - &fx.slope;
    let intercept = &gt.slope * &s + &gt.intercept - &gx.intercept - &fx.intercept;
    Ok((slope, intercept))
}

fn pointwise_defect(f_at: &Rat, t: &IntervalExchange, g: &PiecewiseAffine, x: &Rat) -> Option<Rat> {
    let tx = t.apply(x).ok()?;
    Some(g.value_at(&tx)? - g.value_at(x)? - f_at)
}

pub fn verify_certificate(cert: &CoboundaryCertificate, mode: VerifyMode, tol: &Rat) -> Result<VerificationReport> {
    let f = cert.f.surrogate();
    let t = &cert.t;
    let g = &cert.g;
    let domain = cert.f.domain.clone();
    let mut notes = Vec::new();

    let mut measure_check = t.verify_measure_preserving();
    if t.domain() != domain {
        measure_check.pass = false;
        measure_check
            .failures
            .push(format!("T is defined on {} but f on {domain}", t.domain()));
    }

    let allowed = if mode == VerifyMode::Numeric {
        &cert.residual_bound + tol
    } else {
        cert.residual_bound.clone()
    };
    let mut failures = Vec::new();
    if cert.exact && !cert.residual_bound.is_zero() {
        failures.push(format!("marked exact with residual bound {}", cert.residual_bound));
    }
    if g.domain() != domain {
        failures.push(format!("g is defined on {} but f on {domain}", g.domain()));
    }
    let g_breaks = g.breakpoints();
    let mut points = common_refinement([f.breakpoints(), g_breaks.clone(), t.breakpoints(), t.preimages(&g_breaks)]);
    points.retain(|x| domain.contains(x) || domain.pieces().iter().any(|iv| &iv.hi == x));

    let mut worst = Rat::zero();
    let mut worst_atom = None;
    let mut worst_point = None;
    let mut atoms = 0;
    for w in points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let m = Rat::midpoint(a, b);
        if !domain.contains(&m) {
            continue;
        }
        atoms += 1;
        match defect_at(&f, t, g, &m) {
            Ok((slope, intercept)) => {
                for x in [a, b] {
                    let d = (&slope * x + &intercept).abs();
                    if d > worst {
                        worst = d;
                        worst_atom = Some(Interval::new(a.clone(), b.clone()));
                        worst_point = Some(x.clone());
                    }
                }
            }
            Err(msg) => {
                if failures.len() < 16 {
                    failures.push(format!("atom [{a}, {b}): {msg}"));
                }
            }
        }
    }

    let mut samples = 0;
    if mode == VerifyMode::Numeric {
        if let Some(s) = &cert.f.sampled_part {
            for (x, v) in s.grid.iter().zip(&s.values) {
                let Some(step) = cert.f.step_part.value_at(x) else { continue };
                let fx = step + v;
                match pointwise_defect(&fx, t, g, x) {
                    Some(d) => {
                        samples += 1;
                        let d = d.abs();
                        if d > worst {
                            worst = d;
                            worst_atom = None;
                            worst_point = Some(x.clone());
                        }
                    }
                    None => notes.push(format!("sample point {x} is outside the domain of T or g")),
                }
            }
        }
        if !cert.representation_error.is_zero() {
            notes.push(format!(
                "off the sample grid the data may differ from its interpolant by {}",
                cert.representation_error
            ));
        }
    }
    if worst > allowed {
        failures.push(format!(
            "|g∘T − g − f| reaches {worst} at {}{}, allowed {allowed}",
            worst_point.as_ref().map(Rat::to_string).unwrap_or_default(),
            worst_atom.as_ref().map(|a| format!(" in atom {a}")).unwrap_or_default()
        ));
    }
    let identity_check = IdentityCheck {
        pass: failures.is_empty(),
        atoms_checked: atoms,
        samples_checked: samples,
        worst_deviation: worst,
        worst_atom,
        worst_point,
        allowed,
        failures,
    };

    let norm_f = f.sup_norm().unwrap_or_default();
    let norm_g = g.sup_norm().unwrap_or_default();
    let bound = (Rat::one() + &cert.eps) * &norm_f;
    let ratio = if norm_f.is_zero() { Rat::zero() } else { &norm_g / &norm_f };
    if ratio != cert.norm_ratio {
        notes.push(format!("claimed norm ratio {} differs from {ratio}", cert.norm_ratio));
    }
    let norm_check = NormCheck {
        pass: norm_g <= bound,
        norm_f,
        norm_g,
        ratio,
        bound,
        claimed_ratio: cert.norm_ratio.clone(),
    };

    Ok(VerificationReport {
        pass: identity_check.pass && measure_check.pass && norm_check.pass,
        identity_check,
        measure_check,
        norm_check,
        exceptional_points: points,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orbit {
    pub points: Vec<Rat>,
    /// Set when the orbit left the domain before `n` steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated: Option<String>,
    /// Steps that landed on an interior source breakpoint of `T`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub breakpoint_hits: Vec<usize>,
}

/// `(x, T x, …, Tⁿ x)`, cut short if a point leaves the domain.
pub fn orbit(t: &IntervalExchange, x: &Rat, n: usize) -> Orbit {
    let interior: Vec<Rat> = {
        let dom = t.domain();
        t.breakpoints().into_iter().filter(|p| !dom.boundary_points().contains(p)).collect()
    };
    let mut points = vec![x.clone()];
    let mut hits = Vec::new();
    let mut truncated = None;
    let mut cur = x.clone();
    for step in 0..n {
        if interior.binary_search(&cur).is_ok() {
            hits.push(step);
        }
        match t.apply(&cur) {
            Ok(y) => {
                points.push(y.clone());
                cur = y;
            }
            Err(e) => {
                truncated = Some(format!("stopped after {step} steps: {e}"));
                break;
            }
        }
    }
    Orbit {
        points,
        truncated,
        breakpoint_hits: hits,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    /// Adds `by` to `g` on `[lo, hi)`.
    PerturbG { lo: Rat, hi: Rat, by: Rat },
    /// Exchanges the targets of two pieces of `T` with equal length.
    SwapTargets { first: usize, second: usize },
    /// Multiplies `f` by a constant.
    ScaleF(Rat),
}

pub fn apply_mutation(cert: &CoboundaryCertificate, m: &Mutation) -> CoboundaryCertificate {
    let mut out = cert.clone();
    match m {
        Mutation::PerturbG { lo, hi, by } => {
            let window = Interval::new(lo.clone(), hi.clone());
            let mut pieces = Vec::new();
            for p in cert.g.pieces() {
                let cuts = common_refinement([vec![p.lo.clone(), p.hi.clone()], vec![lo.clone(), hi.clone()]]);
                for w in cuts.windows(2) {
                    if w[0] < p.lo || w[1] > p.hi {
                        continue;
                    }
                    let bump = if window.contains(&Rat::midpoint(&w[0], &w[1])) {
                        by.clone()
                    } else {
                        Rat::zero()
                    };
                    pieces.push(AffinePiece::new(w[0].clone(), w[1].clone(), p.slope.clone(), &p.intercept + bump));
                }
            }
            out.g = PiecewiseAffine::new(pieces).expect("a refinement of a valid function");
        }
        Mutation::SwapTargets { first, second } => {
            let mut pieces = cert.t.pieces().to_vec();
            let (a, b) = (pieces[*first].dst.clone(), pieces[*second].dst.clone());
            pieces[*first].dst = b;
            pieces[*second].dst = a;
            out.t = IntervalExchange::from_pieces_unchecked(pieces);
        }
        Mutation::ScaleF(k) => out.f = cert.f.scale(k),
    }
    out
}

/// `count` mutations of `cert`, each guaranteed to move `g∘T − g − f` by
/// more than twice the claimed residual somewhere.
pub fn mutation_battery(cert: &CoboundaryCertificate, count: usize, seed: u64) -> Vec<Mutation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let margin = Rat::from_int(3) * &cert.residual_bound + Rat::new(1, 1000);
    let surrogate = cert.f.surrogate();
    let norm_f = surrogate.sup_norm().unwrap_or_default();
    let moving: Vec<&ExchangePiece> = cert.t.pieces().iter().filter(|p| !p.shift().is_zero()).collect();
    let mut swaps = Vec::new();
    let ps = cert.t.pieces();
    for i in 0..ps.len() {
        for j in i + 1..ps.len() {
            if ps[i].src.length() != ps[j].src.length() {
                continue;
            }
            let gi = cert.g.value_at(&ps[i].dst.midpoint());
            let gj = cert.g.value_at(&ps[j].dst.midpoint());
            if let (Some(gi), Some(gj)) = (gi, gj) {
                if (gi - gj).abs() > margin {
                    swaps.push((i, j));
                }
            }
            if swaps.len() > 64 {
                break;
            }
        }
    }
    let scale_ok = |k: &Rat| (k - Rat::one()).abs() * &norm_f > margin;
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < count * 20 {
        attempts += 1;
        match rng.gen_range(0..3) {
            0 => {
                let Some(p) = moving.choose(&mut rng) else { continue };
                // a window shorter than the shift is moved off itself by T
                let len = Rat::min_of(&p.src.length(), &p.shift().abs()).clone() / Rat::from_int(rng.gen_range(2..5));
                let lo = p.src.lo.clone();
                let sign = if rng.gen_bool(0.5) { Rat::one() } else { -Rat::one() };
                out.push(Mutation::PerturbG {
                    hi: &lo + &len,
                    lo,
                    by: &margin * &Rat::from_int(rng.gen_range(1..4)) * sign,
                });
            }
            1 => {
                if swaps.is_empty() {
                    // unequal lengths break measure preservation instead
                    if ps.len() >= 2 {
                        let i = rng.gen_range(0..ps.len());
                        let j = (i + 1 + rng.gen_range(0..ps.len() - 1)) % ps.len();
                        if ps[i].src.length() != ps[j].src.length() {
                            out.push(Mutation::SwapTargets {
                                first: i.min(j),
                                second: i.max(j),
                            });
                        }
                    }
                    continue;
                }
                let (i, j) = *swaps.choose(&mut rng).expect("nonempty");
                out.push(Mutation::SwapTargets { first: i, second: j });
            }
            _ => {
                let k = [Rat::from_int(2), Rat::new(1, 2), Rat::from_int(-1), Rat::from_int(3)]
                    .choose(&mut rng)
                    .expect("nonempty")
                    .clone();
                if scale_ok(&k) {
                    out.push(Mutation::ScaleF(k));
                }
            }
        }
    }
    out
}
