//! Numerical audits of fixed-set lemmas for commuting and braid-related maps.
//!
//! These run on finite samples; they can expose inconsistent data but never
//! certify smoothness hypotheses.

use serde::{Deserialize, Serialize};

use super::{atom_images_f64, mean_translation_number, AtomicCircleMeasure, CircleError, MonotoneRealMap};
use crate::rational::Rational;

pub const AUDIT_CAVEAT: &str = "finite samples cannot verify C^2 smoothness; \
violations on genuinely smooth commuting data indicate sampling or tolerance artifacts";

/// An increasing map of an interval or of the line, evaluated in floats.
pub trait RealFn: Sync {
    fn eval(&self, x: f64) -> f64;
    fn inverse(&self, y: f64) -> f64;
}

impl RealFn for MonotoneRealMap {
    fn eval(&self, x: f64) -> f64 {
        MonotoneRealMap::eval(self, x)
    }
    fn inverse(&self, y: f64) -> f64 {
        MonotoneRealMap::inverse(self, y)
    }
}

impl RealFn for crate::piecewise::FloatMap {
    fn eval(&self, x: f64) -> f64 {
        self.approx(x)
    }
    fn inverse(&self, y: f64) -> f64 {
        self.inverse_approx(y)
    }
}

/// Closure-backed map on `[lo, hi]`; the inverse is found by bisection.
pub struct FnMap<F: Fn(f64) -> f64 + Sync> {
    pub lo: f64,
    pub hi: f64,
    pub f: F,
}

impl<F: Fn(f64) -> f64 + Sync> FnMap<F> {
    pub fn new(lo: f64, hi: f64, f: F) -> Self {
        FnMap { lo, hi, f }
    }
}

impl<F: Fn(f64) -> f64 + Sync> RealFn for FnMap<F> {
    fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
    fn inverse(&self, y: f64) -> f64 {
        let (mut a, mut b) = (self.lo, self.hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if (self.f)(m) < y {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }
}

/// Linear interpolation of increasing samples on `[xs[0], xs[last]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledIntervalMap {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl SampledIntervalMap {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, CircleError> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(CircleError::Representation("need at least two (x, y) samples".into()));
        }
        let incr = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !incr(&xs) || !incr(&ys) {
            return Err(CircleError::Representation("samples must be strictly increasing".into()));
        }
        Ok(SampledIntervalMap { xs, ys })
    }

    pub fn from_fn(lo: f64, hi: f64, samples: usize, f: impl Fn(f64) -> f64) -> Result<Self, CircleError> {
        let xs = grid(lo, hi, samples);
        let ys = xs.iter().map(|&x| f(x)).collect();
        SampledIntervalMap::new(xs, ys)
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, CircleError> {
        SampledIntervalMap::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let i = match xs.partition_point(|&v| v <= x) {
        0 => 0,
        p if p >= n => n - 2,
        p => p - 1,
    };
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + t * (ys[i + 1] - ys[i])
}

impl RealFn for SampledIntervalMap {
    fn eval(&self, x: f64) -> f64 {
        interp(&self.xs, &self.ys, x)
    }
    fn inverse(&self, y: f64) -> f64 {
        interp(&self.ys, &self.xs, y)
    }
}

fn grid(lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    let n = samples.max(2);
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    /// J ⊂ Fix(b)
    InsideFixB,
    /// J ∩ Fix(b) = ∅
    DisjointFromFixB,
    Violation,
}

impl Verdict {
    pub fn is_consistent(self) -> bool {
        self != Verdict::Violation
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub location: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub lemma: String,
    pub verdict: Verdict,
    pub tolerance: f64,
    pub samples: usize,
    pub findings: Vec<Finding>,
    pub violations: Vec<Finding>,
    pub warnings: Vec<String>,
    pub caveat: String,
}

impl AuditReport {
    fn new(lemma: &str, tolerance: f64, samples: usize) -> Self {
        AuditReport {
            lemma: lemma.into(),
            verdict: Verdict::Consistent,
            tolerance,
            samples,
            findings: Vec::new(),
            violations: Vec::new(),
            warnings: Vec::new(),
            caveat: AUDIT_CAVEAT.into(),
        }
    }

    fn violation(&mut self, location: f64, detail: String) {
        self.violations.push(Finding { location, detail });
        self.verdict = Verdict::Violation;
    }
}

/// Components of `{x : |f(x) − x| ≤ tol}` on the grid, plus isolated roots
/// located by linear interpolation between samples of opposite sign.
pub fn fixed_components(f: &dyn RealFn, xs: &[f64], tol: f64) -> Vec<(f64, f64)> {
    let d: Vec<f64> = xs.iter().map(|&x| f.eval(x) - x).collect();
    let mut out = Vec::new();
    let mut run: Option<(f64, f64)> = None;
    for i in 0..xs.len() {
        if d[i].abs() <= tol {
            run = Some(match run {
                Some((a, _)) => (a, xs[i]),
                None => (xs[i], xs[i]),
            });
            continue;
        }
        if let Some(r) = run.take() {
            out.push(r);
        }
        if i > 0 && d[i - 1].abs() > tol && d[i - 1].signum() != d[i].signum() {
            let t = d[i - 1] / (d[i - 1] - d[i]);
            let r = xs[i - 1] + t * (xs[i] - xs[i - 1]);
            out.push((r, r));
        }
    }
    if let Some(r) = run {
        out.push(r);
    }
    out
}

/// Checks that `f` preserves every component of `Fix(g)` and
/// `∂Fix(f) ⊂ Fix(g)`, in both directions, on the interval `[lo, hi]`.
pub fn audit_commuting_fixsets(
    f: &dyn RealFn,
    g: &dyn RealFn,
    lo: f64,
    hi: f64,
    samples: usize,
    tol: f64,
) -> Result<AuditReport, CircleError> {
    let xs = grid(lo, hi, samples);
    for (name, m) in [("f", f), ("g", g)] {
        for x in [lo, hi] {
            if (m.eval(x) - x).abs() > tol {
                return Err(CircleError::Precondition(format!("{name} does not fix the endpoint {x}")));
            }
        }
    }
    let mut rep = AuditReport::new("commuting maps preserve fixed-set components", tol, xs.len());
    let defect = xs
        .iter()
        .map(|&x| (f.eval(g.eval(x)) - g.eval(f.eval(x))).abs())
        .fold(0.0, f64::max);
    if defect > tol {
        rep.warnings.push(format!("maps do not commute within tolerance: sup |fg − gf| = {defect:e}"));
    }
    let fix_f = fixed_components(f, &xs, tol);
    let fix_g = fixed_components(g, &xs, tol);
    for (name, comps) in [("Fix(f)", &fix_f), ("Fix(g)", &fix_g)] {
        for &(a, b) in comps.iter() {
            rep.findings.push(Finding {
                location: a,
                detail: format!("{name} component [{a}, {b}]"),
            });
        }
    }
    for (mover, mname, comps, cname) in [(f, "f", &fix_g, "Fix(g)"), (g, "g", &fix_f, "Fix(f)")] {
        for &(a, b) in comps.iter() {
            for p in [a, b] {
                let y = mover.eval(p);
                if y < a - tol || y > b + tol {
                    rep.violation(p, format!("{mname} moves the {cname} component [{a}, {b}]: {mname}({p}) = {y}"));
                }
            }
        }
    }
    for (bname, comps, other, oname) in [("∂Fix(f)", &fix_f, g, "g"), ("∂Fix(g)", &fix_g, f, "f")] {
        for &(a, b) in comps.iter() {
            let pts: &[f64] = if a == b { &[a] } else { &[a, b] };
            for &p in pts {
                let d = other.eval(p) - p;
                if d.abs() > tol {
                    rep.violation(p, format!("{bname} point {p} is moved by {oname} (displacement {d:e})"));
                }
            }
        }
    }
    Ok(rep)
}

/// Exponents of the relation `a^{n1} b^{m3} a^{n2} = b^{m1} a^{n3} b^{m2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbaExponents {
    pub n1: i64,
    pub n2: i64,
    pub n3: i64,
    pub m1: i64,
    pub m2: i64,
    pub m3: i64,
}

impl AbaExponents {
    /// The braid relation `aba = bab`.
    pub const BRAID: AbaExponents = AbaExponents {
        n1: 1,
        n2: 1,
        n3: 1,
        m1: 1,
        m2: 1,
        m3: 1,
    };
}

fn power(f: &dyn RealFn, k: i64, mut x: f64) -> f64 {
    for _ in 0..k.unsigned_abs() {
        x = if k > 0 { f.eval(x) } else { f.inverse(x) };
    }
    x
}

/// For `J ⊂ Fix(a)` and a relation with `m1 + m2 ≠ m3`: either `J ⊂ Fix(b)` or
/// `J ∩ Fix(b) = ∅`. The relation and `J ⊂ Fix(a)` are checked on samples of
/// `domain` and `J` respectively; failures are precondition errors.
pub fn audit_aba(
    a: &dyn RealFn,
    b: &dyn RealFn,
    e: AbaExponents,
    j: (f64, f64),
    domain: (f64, f64),
    samples: usize,
    tol: f64,
) -> Result<AuditReport, CircleError> {
    if e.m1 + e.m2 == e.m3 {
        return Err(CircleError::Precondition("need m1 + m2 ≠ m3".into()));
    }
    if !(j.0 < j.1) {
        return Err(CircleError::Precondition("J must be a nontrivial interval".into()));
    }
    let js = grid(j.0, j.1, samples);
    for &x in &js {
        if (a.eval(x) - x).abs() > tol {
            return Err(CircleError::Precondition(format!("J is not inside Fix(a): a moves {x}")));
        }
    }
    let ds = grid(domain.0, domain.1, samples);
    for &x in &ds {
        let lhs = power(a, e.n1, power(b, e.m3, power(a, e.n2, x)));
        let rhs = power(b, e.m1, power(a, e.n3, power(b, e.m2, x)));
        if (lhs - rhs).abs() > tol {
            return Err(CircleError::Precondition(format!(
                "relation fails at x = {x}: residual {:e}",
                (lhs - rhs).abs()
            )));
        }
    }
    let mut rep = AuditReport::new("aba lemma", tol, js.len());
    let fixed: Vec<bool> = js.iter().map(|&x| (b.eval(x) - x).abs() <= tol).collect();
    let count = fixed.iter().filter(|&&f| f).count();
    rep.findings.push(Finding {
        location: j.0,
        detail: format!("{count} of {} samples of J are fixed by b", js.len()),
    });
    if count == js.len() {
        rep.verdict = Verdict::InsideFixB;
    } else if count == 0 {
        rep.verdict = Verdict::DisjointFromFixB;
    } else {
        for (x, f) in js.iter().zip(&fixed) {
            if *f {
                rep.violation(*x, "fixed by b although other points of J are moved".into());
            }
        }
    }
    Ok(rep)
}

/// Consequence check: two measure-preserving lifts with equal mean translation
/// number agree on the support of the measure.
pub fn audit_support_agreement(
    f: &MonotoneRealMap,
    g: &MonotoneRealMap,
    mu: &AtomicCircleMeasure,
    tol: f64,
) -> Result<AuditReport, CircleError> {
    let zero = Rational::from_integer(0.into());
    let tf = mean_translation_number(f, mu, &zero)?.value;
    let tg = mean_translation_number(g, mu, &zero)?.value;
    let mut rep = AuditReport::new("equal mean translation numbers force agreement on the support", tol, mu.atoms().len());
    if tf != tg {
        rep.warnings.push("mean translation numbers differ; nothing to check".into());
        return Ok(rep);
    }
    let fi = atom_images_f64(f, mu)?;
    let gi = atom_images_f64(g, mu)?;
    for (((p, _), a), b) in mu.atoms().iter().zip(fi).zip(gi) {
        let loc = crate::rational::to_f64(p);
        if (a - b).abs() > tol {
            rep.violation(loc, format!("F({loc}) = {a} but G({loc}) = {b}"));
        } else {
            rep.findings.push(Finding {
                location: loc,
                detail: format!("both maps send the atom to {a}"),
            });
        }
    }
    Ok(rep)
}
