use std::path::Path;
use std::sync::Arc;

use bsline::piecewise::{compose, invert, FloatMap, MapSpec, PieceTree, TrigLift, TrigTerm};
use bsline::rational::int;
use bsline::rigidity::{detect_nonstandard, hirsch_profile, solve_conjugacy, Classification, ConjugacyResult, SolveOptions, Verdict};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::run::{pre, Ctx, Failure, Report, Status};

/// JSON action of BS(1, n): the images of the two generators.
#[derive(Debug, Serialize, Deserialize)]
pub struct ActionFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<i64>,
    pub g: MapSpec,
    pub h: MapSpec,
}

fn load(ctx: &Ctx, path: &Path, n: Option<i64>) -> Result<(i64, FloatMap, FloatMap), Failure> {
    let file: ActionFile = ctx.read_json(path)?;
    let n = match (n, file.n) {
        (Some(a), Some(b)) if a != b => return Err(pre(format!("--n {a} contradicts n = {b} in {}", path.display()))),
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(pre("n is neither given by --n nor stored in the action file")),
    };
    let g = PieceTree::from_spec(&file.g)?.compile();
    let h = PieceTree::from_spec(&file.h)?.compile();
    Ok((n, g, h))
}

#[derive(Serialize)]
struct SolveReport {
    #[serde(flatten)]
    result: ConjugacyResult,
    /// sampled φ as `x,phi` lines
    phi_csv: String,
}

pub fn solve(ctx: &Ctx, action: &Path, n: Option<i64>, opts: SolveOptions, phi_out: Option<&Path>) -> Result<Report, Failure> {
    let (n, g, h) = load(ctx, action, n)?;
    let result = solve_conjugacy(&g, &h, n, opts)?;
    let phi_csv = result.phi_csv();
    if let Some(p) = phi_out {
        ctx.write(p, &phi_csv)?;
    }
    let status = match result.verdict {
        Verdict::Converged => Status::Ok,
        _ => Status::Inconclusive,
    };
    Report::new(&SolveReport { result, phi_csv }, status)
}

pub fn detect(ctx: &Ctx, action: &Path, n: Option<i64>, window: f64) -> Result<Report, Failure> {
    let (n, g, h) = load(ctx, action, n)?;
    let c = detect_nonstandard(&g, &h, n, window)?;
    let status = match c {
        Classification::Inconclusive { .. } => Status::Inconclusive,
        _ => Status::Ok,
    };
    Report::new(&c, status)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExampleKind {
    /// g = nx, h = x + 1
    Standard,
    /// the standard action conjugated by x + eps·sin(2πx)
    Perturbed,
    /// g with an attracting fixed point at 0
    Hirsch,
}

pub fn example(ctx: &Ctx, kind: ExampleKind, n: i64, eps: f64, out: Option<&Path>) -> Result<Report, Failure> {
    if n < 2 {
        return Err(pre(format!("need n >= 2, got {n}")));
    }
    let g0 = PieceTree::affine(int(n), int(0))?;
    let h0 = PieceTree::translation(int(1));
    let (g, h) = match kind {
        ExampleKind::Standard => (g0, h0),
        ExampleKind::Perturbed => {
            let psi = PieceTree::Trig(Arc::new(TrigLift::new(1, int(0), vec![TrigTerm { k: 1, cos: 0.0, sin: eps }])?));
            let conj = |f: &PieceTree| compose(&compose(&invert(&psi), f), &psi);
            (conj(&g0), conj(&h0))
        }
        ExampleKind::Hirsch => (hirsch_profile(n)?, h0),
    };
    let file = ActionFile {
        n: Some(n),
        g: g.to_spec(),
        h: h.to_spec(),
    };
    if let Some(p) = out {
        ctx.write_json(p, &file)?;
    }
    Report::ok(&file)
}
