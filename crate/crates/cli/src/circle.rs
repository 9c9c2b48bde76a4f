use std::path::Path;

use bsline::circle::{
    audit_aba, audit_commuting_fixsets, mean_translation_number, parse_grid_csv, translation_number_estimate,
    translation_number_exact, AbaExponents, AtomicCircleMeasure, AuditReport, MapSource, MeanTranslation,
    MonotoneRealMap, RealFn, SampledIntervalMap, TranslationEstimate, Verdict,
};
use bsline::piecewise::{MapSpec, PieceTree};
use bsline::rational::{self, Rational};
use serde::{Deserialize, Serialize};

use crate::run::{parse_pair, parse_rational_arg, pre, Ctx, Failure, Report, Status};

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// A lift from a JSON map spec or a CSV grid of `(x, F(x))` over one period.
pub fn load_lift(ctx: &Ctx, path: &Path, csv_degree: i64) -> Result<MonotoneRealMap, Failure> {
    if is_csv(path) {
        let points = parse_grid_csv(&ctx.read(path)?)?;
        return Ok(MonotoneRealMap::sampled(csv_degree, points, path.display().to_string())?);
    }
    let src: MapSource = ctx.read_json(path)?;
    Ok(MonotoneRealMap::from_source(&src)?)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum IntervalMapJson {
    Samples { points: Vec<(f64, f64)> },
    Closed(MapSpec),
}

/// An increasing map of an interval: samples (JSON `points` or CSV) or a closed form.
pub fn load_interval_map(ctx: &Ctx, path: &Path) -> Result<Box<dyn RealFn>, Failure> {
    if is_csv(path) {
        let pts = parse_grid_csv(&ctx.read(path)?)?;
        let pairs: Vec<(f64, f64)> = pts.iter().map(|(x, y)| (rational::to_f64(x), rational::to_f64(y))).collect();
        return Ok(Box::new(SampledIntervalMap::from_pairs(&pairs)?));
    }
    match ctx.read_json::<IntervalMapJson>(path)? {
        IntervalMapJson::Samples { points } => Ok(Box::new(SampledIntervalMap::from_pairs(&points)?)),
        IntervalMapJson::Closed(spec) => Ok(Box::new(PieceTree::from_spec(&spec)?.compile())),
    }
}

#[derive(Serialize)]
struct RotationReport {
    label: String,
    degree: i64,
    estimate: TranslationEstimate,
    /// estimate reduced mod 1
    rotation_number: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<ExactTranslation>,
}

#[derive(Serialize)]
struct ExactTranslation {
    iterations: u64,
    #[serde(with = "rational::serde_rational")]
    value: Rational,
}

pub struct RotnumArgs<'a> {
    pub map: &'a Path,
    pub degree: i64,
    pub x0: &'a str,
    pub iterations: u64,
    pub richardson: bool,
    pub exact_iterations: Option<u64>,
}

pub fn rotnum(ctx: &Ctx, a: RotnumArgs) -> Result<Report, Failure> {
    let f = load_lift(ctx, a.map, a.degree)?;
    let x0 = parse_rational_arg(a.x0)?;
    let estimate = translation_number_estimate(&f, rational::to_f64(&x0), a.iterations, a.richardson)?;
    let exact = match a.exact_iterations {
        Some(n) => Some(ExactTranslation {
            iterations: n,
            value: translation_number_exact(&f, &x0, n)?,
        }),
        None => None,
    };
    Report::ok(&RotationReport {
        label: f.label.clone(),
        degree: f.degree(),
        rotation_number: estimate.estimate.rem_euclid(1.0),
        estimate,
        exact,
    })
}

#[derive(Serialize)]
struct MeanTranslationReport {
    mean_translation: MeanTranslation,
    estimate: TranslationEstimate,
    /// |τ_μ − estimate| ≤ error bound
    agrees: bool,
}

pub fn meantrans(ctx: &Ctx, map: &Path, degree: i64, measure: &Path, x: &str, iterations: u64) -> Result<Report, Failure> {
    let f = load_lift(ctx, map, degree)?;
    let mu: AtomicCircleMeasure = ctx.read_json(measure)?;
    let x = parse_rational_arg(x)?;
    let mean_translation = mean_translation_number(&f, &mu, &x)?;
    let estimate = translation_number_estimate(&f, rational::to_f64(&x), iterations, false)?;
    let agrees = (rational::to_f64(&mean_translation.value) - estimate.estimate).abs() <= estimate.error_bound;
    Report::new(
        &MeanTranslationReport {
            mean_translation,
            estimate,
            agrees,
        },
        if agrees { Status::Ok } else { Status::Violation },
    )
}

fn audit_status(r: &AuditReport) -> Status {
    if r.verdict == Verdict::Violation {
        Status::Violation
    } else {
        Status::Ok
    }
}

pub fn audit_commute(ctx: &Ctx, f: &Path, g: &Path, interval: &str, samples: usize, tol: f64) -> Result<Report, Failure> {
    let (lo, hi) = parse_pair(interval)?;
    let (f, g) = (load_interval_map(ctx, f)?, load_interval_map(ctx, g)?);
    let rep = audit_commuting_fixsets(f.as_ref(), g.as_ref(), lo, hi, samples, tol)?;
    Report::new(&rep, audit_status(&rep))
}

pub fn parse_exponents(s: &str) -> Result<AbaExponents, Failure> {
    let v: Vec<i64> = s
        .split(',')
        .map(|t| t.trim().parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|_| pre(format!("exponents must be six integers n1,n2,n3,m1,m2,m3, got {s:?}")))?;
    match v.as_slice() {
        &[n1, n2, n3, m1, m2, m3] => Ok(AbaExponents { n1, n2, n3, m1, m2, m3 }),
        _ => Err(pre(format!("exponents must be six integers n1,n2,n3,m1,m2,m3, got {s:?}"))),
    }
}

pub struct AbaArgs<'a> {
    pub a: &'a Path,
    pub b: &'a Path,
    pub exponents: &'a str,
    pub j: &'a str,
    pub domain: &'a str,
    pub samples: usize,
    pub tol: f64,
}

pub fn audit_aba_cmd(ctx: &Ctx, args: AbaArgs) -> Result<Report, Failure> {
    let e = parse_exponents(args.exponents)?;
    let (j, domain) = (parse_pair(args.j)?, parse_pair(args.domain)?);
    let (a, b) = (load_interval_map(ctx, args.a)?, load_interval_map(ctx, args.b)?);
    let rep = audit_aba(a.as_ref(), b.as_ref(), e, j, domain, args.samples, args.tol)?;
    Report::new(&rep, audit_status(&rep))
}
