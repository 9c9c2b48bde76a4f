//! Conjugacy of perturbed BS(1,n) actions to the standard affine one.
//!
//! The standard action is `g₀(x) = nx`, `h₀(x) = x + 1`. For a perturbed pair
//! `(g, h)` with `g h g⁻¹ = h^n` and `g` expanding, the conjugacy `φ` with
//! `φ h = h₀ φ` and `φ g = g₀ φ` is the fixed point of the rigidity operator
//! `φ ↦ g₀⁻¹ ∘ φ ∘ g`, which contracts by about `1/n`.

use serde::{Deserialize, Serialize};

use crate::circle::RealFn;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RigidityError {
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("not in the perturbation regime: min slope of g is {0:.6} <= 1")]
    NotExpanding(f64),
}

type R<T> = Result<T, RigidityError>;

/// `g₀(x) = nx`, `h₀(x) = x + 1`; elements are `x ↦ n^k x + b`, `b ∈ Z[1/n]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineBSAction {
    pub n: i64,
}

impl AffineBSAction {
    pub fn new(n: i64) -> R<Self> {
        if n < 2 {
            return Err(RigidityError::Precondition(format!("need n >= 2, got {n}")));
        }
        Ok(AffineBSAction { n })
    }

    /// The element `x ↦ n^k x + b`.
    pub fn element(&self, k: i32, b: &Rational) -> impl Fn(&Rational) -> Rational {
        let s = crate::rational::int(self.n).pow(k);
        let b = b.clone();
        move |x| &s * x + &b
    }

    /// `g₀ h₀ g₀⁻¹ = h₀^n`, checked exactly at the given points.
    pub fn relation_holds(&self, points: &[Rational]) -> bool {
        let n = crate::rational::int(self.n);
        points.iter().all(|x| {
            let ginv = x / &n;
            &n * (ginv + Rational::from_integer(1.into())) == x + &n
        })
    }

    pub fn g0(&self) -> impl Fn(f64) -> f64 + Sync {
        let n = self.n as f64;
        move |x| n * x
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub delta: f64,
    pub window: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            delta: 1e-3,
            window: 10.0,
            tol: 1e-8,
            max_iters: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Converged,
    Diverged,
    NotConjugateDetected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyResult {
    pub n: i64,
    pub options: SolveOptions,
    /// fixed point of `g`, moved to 0 before solving
    pub fixed_point: f64,
    pub min_slope: f64,
    pub iterations: usize,
    /// sup |φ_{k+1} − φ_k| per iteration
    pub sup_change: Vec<f64>,
    /// ratios of successive sup-changes
    pub contraction_ratios: Vec<f64>,
    /// sup |h₀(φ(x)) − φ(h(x))| over grid points with h(x) in the window
    pub residual_h: f64,
    /// sup |g₀(φ(x)) − φ(g(x))| over the grid
    pub residual_g: f64,
    pub monotone: bool,
    pub verdict: Verdict,
    /// grid points in original coordinates
    #[serde(skip)]
    pub xs: Vec<f64>,
    #[serde(skip)]
    pub phi: Vec<f64>,
}

impl ConjugacyResult {
    pub fn phi_csv(&self) -> String {
        let mut s = String::from("x,phi\n");
        for (x, p) in self.xs.iter().zip(&self.phi) {
            s.push_str(&format!("{x:.17e},{p:.17e}\n"));
        }
        s
    }

    /// Linear interpolation of φ inside the window.
    pub fn eval_phi(&self, x: f64) -> Option<f64> {
        let (lo, hi) = (*self.xs.first()?, *self.xs.last()?);
        if x < lo || x > hi {
            return None;
        }
        Some(interp(&self.xs, &self.phi, lo, self.options.delta, x))
    }
}

fn interp(_xs: &[f64], ys: &[f64], lo: f64, delta: f64, x: f64) -> f64 {
    let t = (x - lo) / delta;
    let i = (t.floor().max(0.0) as usize).min(ys.len() - 2);
    let s = t - i as f64;
    ys[i] + s * (ys[i + 1] - ys[i])
}

/// Moves `x` into `[-w, w]` along the orbit of `h`; returns the point and the
/// number of `h`-steps taken (positive if `h⁻¹` was applied).
fn into_window(h: &dyn RealFn, mut x: f64, w: f64) -> R<(f64, i64)> {
    let mut j = 0i64;
    while x > w {
        let y = h.inverse(x);
        if !(y < x) {
            return Err(RigidityError::Precondition("h does not translate points to the right".into()));
        }
        x = y;
        j += 1;
        if j > 1_000_000 {
            return Err(RigidityError::Precondition("orbit of h does not reach the window".into()));
        }
    }
    while x < -w {
        let y = h.eval(x);
        if !(y > x) {
            return Err(RigidityError::Precondition("h does not translate points to the right".into()));
        }
        x = y;
        j -= 1;
        if j < -1_000_000 {
            return Err(RigidityError::Precondition("orbit of h does not reach the window".into()));
        }
    }
    Ok((x, j))
}

fn pow_h(h: &dyn RealFn, k: i64, mut x: f64) -> f64 {
    for _ in 0..k {
        x = h.eval(x);
    }
    x
}

/// Sup of `|g(h(x)) − h^n(g(x))|` on `samples` points of `[-w, w]`.
pub fn relation_residual(g: &dyn RealFn, h: &dyn RealFn, n: i64, w: f64, samples: usize) -> f64 {
    (0..samples)
        .map(|i| {
            let x = -w + 2.0 * w * i as f64 / (samples - 1).max(1) as f64;
            (g.eval(h.eval(x)) - pow_h(h, n, g.eval(x))).abs()
        })
        .fold(0.0, f64::max)
}

/// Tolerance for the sampled relation check in preconditions.
pub const RELATION_TOL: f64 = 1e-8;

fn check_relation(g: &dyn RealFn, h: &dyn RealFn, n: i64, w: f64) -> R<()> {
    let r = relation_residual(g, h, n, w, 401);
    if !(r <= RELATION_TOL) {
        return Err(RigidityError::Precondition(format!(
            "relation g h g^-1 = h^{n} fails on samples (residual {r:e})"
        )));
    }
    Ok(())
}

fn bisect_fixed(g: &dyn RealFn, mut a: f64, mut b: f64) -> f64 {
    let da = g.eval(a) - a;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let dm = g.eval(m) - m;
        if dm == 0.0 {
            return m;
        }
        if dm.signum() == da.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Fixed points of `g` on `[-w, w]` from sign changes of `g(x) − x`.
pub fn fixed_points(g: &dyn RealFn, w: f64, samples: usize) -> Vec<f64> {
    let xs: Vec<f64> = (0..samples)
        .map(|i| -w + 2.0 * w * i as f64 / (samples - 1) as f64)
        .collect();
    let d: Vec<f64> = xs.iter().map(|&x| g.eval(x) - x).collect();
    let mut out = Vec::new();
    for i in 0..xs.len() {
        if d[i] == 0.0 {
            out.push(xs[i]);
        } else if i > 0 && d[i - 1] != 0.0 && d[i - 1].signum() != d[i].signum() {
            out.push(bisect_fixed(g, xs[i - 1], xs[i]));
        }
    }
    out
}

/// Iterates the rigidity operator on a grid over `[-W, W]` (coordinates
/// centred at the fixed point of `g`), extending φ outside the window by
/// `φ(h(x)) = φ(x) + 1`.
pub fn solve_conjugacy(g: &dyn RealFn, h: &dyn RealFn, n: i64, opts: SolveOptions) -> R<ConjugacyResult> {
    AffineBSAction::new(n)?;
    let SolveOptions {
        delta,
        window: w,
        tol,
        max_iters,
    } = opts;
    if !(delta > 0.0 && w > 1.0 && tol > 0.0) {
        return Err(RigidityError::Precondition("need delta > 0, window > 1, tol > 0".into()));
    }
    let steps = (2.0 * w / delta).round() as usize;
    let xs0: Vec<f64> = (0..=steps).map(|i| -w + i as f64 * delta).collect();
    // monotonicity on samples
    let gv: Vec<f64> = xs0.iter().map(|&x| g.eval(x)).collect();
    let hv: Vec<f64> = xs0.iter().map(|&x| h.eval(x)).collect();
    if !gv.windows(2).all(|p| p[1] > p[0]) || !hv.windows(2).all(|p| p[1] > p[0]) {
        return Err(RigidityError::Precondition("g and h must be strictly increasing".into()));
    }
    check_relation(g, h, n, w)?;
    let min_slope = gv
        .windows(2)
        .map(|p| (p[1] - p[0]) / delta)
        .fold(f64::INFINITY, f64::min);
    if !(min_slope > 1.0) {
        return Err(RigidityError::NotExpanding(min_slope));
    }
    let fps = fixed_points(g, w, steps + 1);
    let p = match fps.as_slice() {
        [p] => *p,
        [] => return Err(RigidityError::Precondition("g has no fixed point in the window".into())),
        _ => return Err(RigidityError::Precondition("g has several fixed points in the window".into())),
    };
    // normalized maps: x ↦ g(x + p) − p, same for h
    let gn = |x: f64| g.eval(x + p) - p;
    let hn = Shifted { f: h, p };
    let nf = n as f64;
    // targets: g(x_i) brought into the window
    let mut targets = Vec::with_capacity(xs0.len());
    for &x in &xs0 {
        targets.push(into_window(&hn, gn(x), w)?);
    }
    let mut phi: Vec<f64> = xs0.clone();
    let mut sup_change = Vec::new();
    let mut ratios = Vec::new();
    let mut monotone = true;
    let mut iterations = 0;
    let mut converged = false;
    let lo = xs0[0];
    while iterations < max_iters {
        iterations += 1;
        let next: Vec<f64> = targets
            .iter()
            .map(|&(y, j)| (interp(&xs0, &phi, lo, delta, y) + j as f64) / nf)
            .collect();
        let change = next
            .iter()
            .zip(&phi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if let Some(&prev) = sup_change.last() {
            if prev > 0.0 {
                ratios.push(change / prev);
            }
        }
        sup_change.push(change);
        phi = next;
        monotone &= phi.windows(2).all(|q| q[1] > q[0]);
        if change <= tol / nf {
            converged = true;
            break;
        }
    }
    let residual_g = targets
        .iter()
        .zip(&phi)
        .map(|(&(y, j), &v)| (nf * v - (interp(&xs0, &phi, lo, delta, y) + j as f64)).abs())
        .fold(0.0, f64::max);
    let residual_h = xs0
        .iter()
        .zip(&phi)
        .filter_map(|(&x, &v)| {
            let y = hn.eval(x);
            (y <= w).then(|| (v + 1.0 - interp(&xs0, &phi, lo, delta, y)).abs())
        })
        .fold(0.0, f64::max);
    let verdict = if converged && residual_g <= tol && residual_h <= tol && monotone {
        Verdict::Converged
    } else {
        Verdict::Diverged
    };
    Ok(ConjugacyResult {
        n,
        options: opts,
        fixed_point: p,
        min_slope,
        iterations,
        sup_change,
        contraction_ratios: ratios,
        residual_h,
        residual_g,
        monotone,
        verdict,
        xs: xs0.iter().map(|x| x + p).collect(),
        phi,
    })
}

struct Shifted<'a> {
    f: &'a dyn RealFn,
    p: f64,
}

impl RealFn for Shifted<'_> {
    fn eval(&self, x: f64) -> f64 {
        self.f.eval(x + self.p) - self.p
    }
    fn inverse(&self, y: f64) -> f64 {
        self.f.inverse(y + self.p) - self.p
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointKind {
    Attracting,
    Repelling,
    Neutral,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointInfo {
    pub x: f64,
    pub kind: FixedPointKind,
    /// finite-difference estimate of g'(x)
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Classification {
    ConsistentWithStandard { fixed_points: Vec<FixedPointInfo> },
    NotConjugateToStandard { witness: f64, fixed_points: Vec<FixedPointInfo> },
    Inconclusive { reason: String },
}

/// Two-sided orbit test: both neighbours converge under forward (attracting)
/// or backward (repelling) iteration.
fn classify_point(g: &dyn RealFn, p: f64, eps: f64) -> FixedPointInfo {
    let iters = 60;
    let converges = |fwd: bool| {
        [p - eps, p + eps].iter().all(|&x0| {
            let mut x = x0;
            for _ in 0..iters {
                x = if fwd { g.eval(x) } else { g.inverse(x) };
            }
            (x - p).abs() < 1e-3 * eps
        })
    };
    let kind = if converges(true) {
        FixedPointKind::Attracting
    } else if converges(false) {
        FixedPointKind::Repelling
    } else {
        FixedPointKind::Neutral
    };
    let hd = 1e-6;
    let slope = (g.eval(p + hd) - g.eval(p - hd)) / (2.0 * hd);
    FixedPointInfo { x: p, kind, slope }
}

/// Attracting fixed points of `g` are a conjugacy invariant that `g₀ = nx`
/// lacks, so finding one shows the action is not conjugate to the standard one.
pub fn detect_nonstandard(g: &dyn RealFn, h: &dyn RealFn, n: i64, window: f64) -> R<Classification> {
    AffineBSAction::new(n)?;
    check_relation(g, h, n, window)?;
    let samples = (window * 2000.0) as usize + 1;
    let fps = fixed_points(g, window, samples);
    if fps.is_empty() {
        return Ok(Classification::Inconclusive {
            reason: format!("no fixed point of g in [-{window}, {window}]"),
        });
    }
    let infos: Vec<FixedPointInfo> = fps
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            // stay below half the distance to the nearest other fixed point
            let mut gap: f64 = 1e-2;
            if i > 0 {
                gap = gap.min(0.5 * (p - fps[i - 1]));
            }
            if i + 1 < fps.len() {
                gap = gap.min(0.5 * (fps[i + 1] - p));
            }
            classify_point(g, p, gap)
        })
        .collect();
    if let Some(a) = infos.iter().find(|f| f.kind == FixedPointKind::Attracting) {
        return Ok(Classification::NotConjugateToStandard {
            witness: a.x,
            fixed_points: infos,
        });
    }
    Ok(Classification::ConsistentWithStandard { fixed_points: infos })
}

/// A degree-n lift with `g(x) = x/2` near 0, giving an action of BS(1,n) with
/// `h(x) = x + 1` whose `g` has an attracting fixed point at 0.
pub fn hirsch_profile(n: i64) -> R<crate::piecewise::PieceTree> {
    use crate::piecewise::{Leaf, PeriodicLift, PieceTree};
    use crate::rational::{int, rat};
    AffineBSAction::new(n)?;
    let half = rat(1, 2);
    let leaves = vec![
        Leaf::Affine {
            lo: rat(-1, 4),
            hi: rat(1, 4),
            slope: half.clone(),
            offset: int(0),
        },
        Leaf::Hermite {
            lo: rat(1, 4),
            hi: rat(3, 4),
            y0: rat(1, 8),
            y1: rat(-1, 8) + int(n),
            d0: half.clone(),
            d1: half,
        },
    ];
    let lift = PeriodicLift::new(n, leaves).map_err(|e| RigidityError::Precondition(e.to_string()))?;
    Ok(PieceTree::periodic(lift))
}

/// `sup |φ − ψ|` over the solver grid.
pub fn sup_distance(res: &ConjugacyResult, psi: impl Fn(f64) -> f64) -> f64 {
    res.xs
        .iter()
        .zip(&res.phi)
        .map(|(&x, &v)| (v - psi(x)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
fn rational_points(k: i64) -> Vec<Rational> {
    (-k..=k).map(|i| crate::rational::rat(i, 7)).collect()
}
