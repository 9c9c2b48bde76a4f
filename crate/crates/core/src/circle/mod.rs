//! Lifts of circle maps, translation numbers, and invariant-measure
//! displacement.

mod audit;

use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::interval::{FInterval, RInterval};
use crate::piecewise::{FloatMap, MapSpec, PeriodicLift, PieceTree, PiecewiseError};
use crate::rational::{self, int, serde_rational, Rational};

pub use audit::{
    audit_aba, audit_commuting_fixsets, audit_support_agreement, fixed_components, AbaExponents, AuditReport,
    FnMap, Finding, RealFn, SampledIntervalMap, Verdict, AUDIT_CAVEAT,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CircleError {
    #[error("representation: {0}")]
    Representation(String),
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("measure is not invariant: atom {atom} maps to {image}")]
    Invariance { atom: String, image: String },
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error(transparent)]
    Piecewise(#[from] PiecewiseError),
}

type R<T> = Result<T, CircleError>;

/// Strictly increasing map of the line with `F(x + 1) = F(x) + degree`.
#[derive(Clone, Debug)]
pub struct MonotoneRealMap {
    tree: PieceTree,
    degree: i64,
    pub label: String,
    grid: Option<Vec<(Rational, Rational)>>,
    compiled: Arc<FloatMap>,
}

/// JSON form: a closed-form map spec or a grid of samples over one period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapSource {
    Grid {
        degree: i64,
        #[serde(default)]
        label: String,
        points: Vec<GridPoint>,
    },
    Closed(MapSpec),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint(
    #[serde(with = "serde_rational")] pub Rational,
    #[serde(with = "serde_rational")] pub Rational,
);

impl MonotoneRealMap {
    pub fn closed(tree: PieceTree, label: impl Into<String>) -> R<Self> {
        let degree = tree
            .degree()
            .ok_or_else(|| CircleError::Representation("map has no integer equivariance degree".into()))?;
        if degree < 1 {
            return Err(CircleError::Representation(format!("degree {degree} < 1")));
        }
        Ok(MonotoneRealMap {
            compiled: Arc::new(tree.compile()),
            tree,
            degree,
            label: label.into(),
            grid: None,
        })
    }

    /// Piecewise-linear interpolation of samples `(x, F(x))` covering one period.
    pub fn sampled(degree: i64, points: Vec<(Rational, Rational)>, label: impl Into<String>) -> R<Self> {
        if points.is_empty() {
            return Err(CircleError::Representation("empty grid".into()));
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[1].0 <= w[0].0 || w[1].1 <= w[0].1 {
                return Err(CircleError::Representation(format!(
                    "samples {i} and {} are not strictly increasing",
                    i + 1
                )));
            }
        }
        let (x0, y0) = &points[0];
        let (xl, yl) = points.last().unwrap();
        if xl - x0 >= Rational::one() || yl - y0 >= int(degree) {
            return Err(CircleError::Representation(
                "grid must cover one period [x0, x0 + 1) with F(x_last) < F(x0) + degree".into(),
            ));
        }
        let lift = PeriodicLift::piecewise_linear(degree, &points)?;
        let mut m = MonotoneRealMap::closed(PieceTree::periodic(lift), label)?;
        m.grid = Some(points);
        Ok(m)
    }

    pub fn from_source(src: &MapSource) -> R<Self> {
        match src {
            MapSource::Grid { degree, label, points } => MonotoneRealMap::sampled(
                *degree,
                points.iter().map(|p| (p.0.clone(), p.1.clone())).collect(),
                label.clone(),
            ),
            MapSource::Closed(spec) => MonotoneRealMap::closed(PieceTree::from_spec(spec)?, ""),
        }
    }

    pub fn to_source(&self) -> MapSource {
        match &self.grid {
            Some(pts) => MapSource::Grid {
                degree: self.degree,
                label: self.label.clone(),
                points: pts.iter().map(|(x, y)| GridPoint(x.clone(), y.clone())).collect(),
            },
            None => MapSource::Closed(self.tree.to_spec()),
        }
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn tree(&self) -> &PieceTree {
        &self.tree
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.compiled.approx(x)
    }

    pub fn inverse(&self, y: f64) -> f64 {
        self.compiled.inverse_approx(y)
    }

    pub fn enclose(&self, x: f64) -> R<FInterval> {
        Ok(self.compiled.enclose(x)?)
    }

    pub fn eval_exact(&self, x: &Rational) -> R<RInterval> {
        Ok(self.tree.eval_exact(x)?)
    }

    pub fn compose(&self, inner: &MonotoneRealMap) -> R<MonotoneRealMap> {
        MonotoneRealMap::closed(
            crate::piecewise::compose(&self.tree, &inner.tree),
            format!("{} ∘ {}", self.label, inner.label),
        )
    }

    /// Largest `|F(x + 1) − F(x) − degree|` over `samples` points of `[0, 1)`,
    /// computed exactly where evaluation is exact and by enclosures otherwise.
    pub fn equivariance_residual(&self, samples: usize) -> R<f64> {
        let mut worst = 0.0f64;
        let j = int(self.degree);
        for i in 0..samples {
            let x = rational::rat(i as i64, samples as i64);
            let a = self.eval_exact(&x)?;
            let b = self.eval_exact(&(&x + int(1)))?;
            if a.is_point() && b.is_point() {
                let r = rational::to_f64(&rational::abs(&(&b.lo - &a.lo - &j)));
                worst = worst.max(r);
            } else {
                let lo = &b.lo - &a.hi - &j;
                let hi = &b.hi - &a.lo - &j;
                let r = rational::to_f64(&rational::abs(&lo)).max(rational::to_f64(&rational::abs(&hi)));
                worst = worst.max(r);
            }
        }
        Ok(worst)
    }
}

/// Parses `x,F(x)` rows (decimal or `p/q`); a non-numeric first row is a header.
pub fn parse_grid_csv(text: &str) -> R<Vec<(Rational, Rational)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 2 {
            return Err(CircleError::Representation(format!("line {}: expected two columns", i + 1)));
        }
        match (rational::parse_rational(cols[0]), rational::parse_rational(cols[1])) {
            (Ok(x), Ok(y)) => out.push((x, y)),
            _ if out.is_empty() && i == 0 => continue,
            _ => {
                return Err(CircleError::Representation(format!("line {}: not a number pair", i + 1)));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslationEstimate {
    pub x0: f64,
    pub iterations: u64,
    /// (F^N(x0) − x0) / N
    pub estimate: f64,
    /// bound on |estimate − τ(F)|: the 2/N orbit bound widened by the
    /// spread of the rounded-down and rounded-up orbits
    pub error_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub richardson: Option<f64>,
}

fn require_degree_one(f: &MonotoneRealMap) -> R<()> {
    if f.degree != 1 {
        return Err(CircleError::Representation(format!(
            "translation numbers need a degree-1 lift, got degree {}",
            f.degree
        )));
    }
    Ok(())
}

/// `F^N(x0) − x0`, iterating on the fractional part to keep float error small.
fn displacement(f: &MonotoneRealMap, x0: f64, n: u64) -> f64 {
    let base = x0.floor();
    let start = x0 - base;
    let mut y = start;
    let mut whole = 0.0f64;
    for _ in 0..n {
        let z = f.eval(y);
        let c = z.floor();
        whole += c;
        y = z - c;
    }
    whole + (y - start)
}

/// Enclosure of `F^N(x0) − x0`. Since F is monotone, iterating the lower
/// (upper) endpoint of each enclosure stays below (above) the true orbit,
/// so rounding can never push the bracket across a semi-stable point.
fn displacement_bracket(f: &MonotoneRealMap, x0: f64, n: u64) -> R<(f64, f64)> {
    let base = x0.floor();
    let start = x0 - base;
    let (mut lo, mut hi) = (start, start);
    let (mut wlo, mut whi) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let a = f.enclose(lo)?.lo;
        let c = a.floor();
        wlo += c;
        lo = a - c;
        let b = f.enclose(hi)?.hi;
        let c = b.floor();
        whi += c;
        hi = b - c;
    }
    let slack = 4.0 * f64::EPSILON * (wlo.abs().max(whi.abs()) + 2.0);
    Ok((wlo + (lo - start) - slack, whi + (hi - start) + slack))
}

pub fn translation_number_estimate(f: &MonotoneRealMap, x0: f64, n: u64, richardson: bool) -> R<TranslationEstimate> {
    require_degree_one(f)?;
    if n < 1 {
        return Err(CircleError::Precondition("iteration count must be at least 1".into()));
    }
    let nf = n as f64;
    let est = displacement(f, x0, n) / nf;
    let (lo, hi) = displacement_bracket(f, x0, n)?;
    let spread = (est - lo / nf).max(hi / nf - est).max(0.0);
    let rich = richardson.then(|| 2.0 * displacement(f, x0, 2 * n) / (2 * n) as f64 - est);
    Ok(TranslationEstimate {
        x0,
        iterations: n,
        estimate: est,
        error_bound: 2.0 / nf + spread,
        richardson: rich,
    })
}

/// Exact `(F^N(x0) − x0)/N` for maps whose orbit stays rational with small
/// denominators (e.g. rational rotations).
pub fn translation_number_exact(f: &MonotoneRealMap, x0: &Rational, n: u64) -> R<Rational> {
    require_degree_one(f)?;
    if n < 1 {
        return Err(CircleError::Precondition("iteration count must be at least 1".into()));
    }
    let base = Rational::from_integer(rational::floor_int(x0));
    let start = x0 - &base;
    let mut y = start.clone();
    let mut whole = Rational::zero();
    for _ in 0..n {
        let z = f.eval_exact(&y)?;
        if !z.is_point() {
            return Err(CircleError::Inconclusive("orbit leaves exact arithmetic".into()));
        }
        let z = z.lo;
        if z.denom().bits() > 256 {
            return Err(CircleError::Inconclusive("orbit denominators exceed 256 bits".into()));
        }
        let c = Rational::from_integer(rational::floor_int(&z));
        y = &z - &c;
        whole += c;
    }
    Ok((whole + y - start) / Rational::from_integer((n as i64).into()))
}

/// Finitely supported probability measure on the circle `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MeasureJson", into = "MeasureJson")]
pub struct AtomicCircleMeasure {
    atoms: Vec<(Rational, Rational)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct MeasureJson {
    atoms: Vec<AtomJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct AtomJson {
    #[serde(with = "serde_rational")]
    position: Rational,
    #[serde(with = "serde_rational")]
    weight: Rational,
}

impl TryFrom<MeasureJson> for AtomicCircleMeasure {
    type Error = CircleError;
    fn try_from(j: MeasureJson) -> R<Self> {
        AtomicCircleMeasure::new(j.atoms.into_iter().map(|a| (a.position, a.weight)).collect())
    }
}

impl From<AtomicCircleMeasure> for MeasureJson {
    fn from(m: AtomicCircleMeasure) -> Self {
        MeasureJson {
            atoms: m
                .atoms
                .into_iter()
                .map(|(position, weight)| AtomJson { position, weight })
                .collect(),
        }
    }
}

impl AtomicCircleMeasure {
    pub fn new(atoms: Vec<(Rational, Rational)>) -> R<Self> {
        if atoms.is_empty() {
            return Err(CircleError::Representation("measure has no atoms".into()));
        }
        for (p, w) in &atoms {
            if p.is_negative() || *p >= Rational::one() {
                return Err(CircleError::Representation(format!(
                    "atom position {} outside [0, 1)",
                    rational::format_rational(p)
                )));
            }
            if !w.is_positive() {
                return Err(CircleError::Representation("atom weights must be positive".into()));
            }
        }
        if atoms.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(CircleError::Representation("atom positions must be strictly increasing".into()));
        }
        let total: Rational = atoms.iter().map(|a| a.1.clone()).sum();
        if total != Rational::one() {
            return Err(CircleError::Representation(format!(
                "total mass is {}, not 1",
                rational::format_rational(&total)
            )));
        }
        Ok(AtomicCircleMeasure { atoms })
    }

    /// Uniform measure on the given positions (reduced mod 1 and sorted).
    pub fn uniform(positions: &[Rational]) -> R<Self> {
        let mut ps: Vec<Rational> = positions
            .iter()
            .map(|p| p - Rational::from_integer(rational::floor_int(p)))
            .collect();
        ps.sort();
        let w = rational::rat(1, ps.len() as i64);
        AtomicCircleMeasure::new(ps.into_iter().map(|p| (p, w.clone())).collect())
    }

    pub fn atoms(&self) -> &[(Rational, Rational)] {
        &self.atoms
    }

    /// Lifted-measure mass of `[x, y)` for `x ≤ y`.
    fn mass(&self, x: &Rational, y: &Rational) -> Rational {
        self.atoms
            .iter()
            .map(|(p, w)| {
                let count = ceil(&(y - p)) - ceil(&(x - p));
                w * Rational::from_integer(count)
            })
            .sum()
    }

    /// Index of the atom congruent to `x` mod 1, with the integer shift.
    fn atom_at(&self, x: &Rational) -> Option<(usize, Rational)> {
        let k = Rational::from_integer(rational::floor_int(x));
        let r = x - &k;
        self.atoms.iter().position(|(p, _)| *p == r).map(|i| (i, k))
    }
}

fn ceil(r: &Rational) -> num_bigint::BigInt {
    r.ceil().to_integer()
}

/// Signed lifted measure: `μ([x, y))` if `x < y`, `0` if equal, `−μ([y, x))` otherwise.
pub fn nu(mu: &AtomicCircleMeasure, x: &Rational, y: &Rational) -> Rational {
    match x.cmp(y) {
        std::cmp::Ordering::Less => mu.mass(x, y),
        std::cmp::Ordering::Equal => Rational::zero(),
        std::cmp::Ordering::Greater => -mu.mass(y, x),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanTranslation {
    #[serde(with = "serde_rational")]
    pub value: Rational,
    /// base points at which ν(x, F(x)) was evaluated, all giving `value`
    #[serde(with = "crate::rational::serde_rational_vec")]
    pub checked_at: Vec<Rational>,
}

/// Tolerance for matching an enclosure of `F(atom)` with an atom.
pub const ATOM_MATCH_TOL: f64 = 1e-12;

/// Images of the atoms under `F`, snapped to exact atom positions.
fn atom_images(f: &MonotoneRealMap, mu: &AtomicCircleMeasure) -> R<Vec<Rational>> {
    let mut images = Vec::with_capacity(mu.atoms.len());
    let mut hit = vec![false; mu.atoms.len()];
    for (p, w) in &mu.atoms {
        let e = f.eval_exact(p)?;
        let moved = || CircleError::Invariance {
            atom: rational::format_rational(p),
            image: format!("[{:e}, {:e}]", rational::to_f64(&e.lo), rational::to_f64(&e.hi)),
        };
        let snapped = if e.is_point() {
            mu.atom_at(&e.lo).map(|(j, k)| (j, &mu.atoms[j].0 + k))
        } else {
            let tol = rational::from_f64(ATOM_MATCH_TOL);
            let lo = &e.lo - &tol;
            let hi = &e.hi + &tol;
            let mut found = None;
            for (j, (q, _)) in mu.atoms.iter().enumerate() {
                // q + k ∈ [lo, hi] for some integer k
                let k = Rational::from_integer(ceil(&(&lo - q)));
                let cand = q + &k;
                if cand <= hi {
                    if found.is_some() {
                        return Err(CircleError::Inconclusive(format!(
                            "image of atom {} is near two atoms",
                            rational::format_rational(p)
                        )));
                    }
                    found = Some((j, cand));
                }
            }
            found
        };
        let (j, img) = snapped.ok_or_else(moved)?;
        if mu.atoms[j].1 != *w || hit[j] {
            return Err(moved());
        }
        hit[j] = true;
        images.push(img);
    }
    Ok(images)
}

/// `ν(x, F(x))` at one base point, given snapped atom images.
fn nu_at(f: &MonotoneRealMap, mu: &AtomicCircleMeasure, images: &[Rational], x: &Rational) -> R<Rational> {
    if let Some((i, k)) = mu.atom_at(x) {
        return Ok(nu(mu, x, &(&images[i] + k)));
    }
    let e = f.eval_exact(x)?;
    let a = nu(mu, x, &e.lo);
    let b = nu(mu, x, &e.hi);
    let on_hi = mu.atom_at(&e.hi).is_some();
    if a != b || on_hi {
        return Err(CircleError::Inconclusive(format!(
            "enclosure of F({}) contains an atom",
            rational::format_rational(x)
        )));
    }
    Ok(a)
}

/// `τ_μ(F) = ν(x, F(x))`, checked at `x`, at every atom and at a non-atom.
pub fn mean_translation_number(f: &MonotoneRealMap, mu: &AtomicCircleMeasure, x: &Rational) -> R<MeanTranslation> {
    require_degree_one(f)?;
    let images = atom_images(f, mu)?;
    let mut points: Vec<Rational> = vec![x.clone()];
    points.extend(mu.atoms.iter().map(|a| a.0.clone()));
    points.push(non_atom(mu));
    let value = nu_at(f, mu, &images, &points[0])?;
    for p in &points[1..] {
        let v = nu_at(f, mu, &images, p)?;
        if v != value {
            return Err(CircleError::Inconclusive(format!(
                "ν(x, F(x)) differs between base points {} and {}",
                rational::format_rational(x),
                rational::format_rational(p)
            )));
        }
    }
    Ok(MeanTranslation {
        value,
        checked_at: points,
    })
}

/// Midpoint of the largest gap between consecutive atoms (circularly).
fn non_atom(mu: &AtomicCircleMeasure) -> Rational {
    let n = mu.atoms.len();
    let mut best = (Rational::zero(), Rational::zero());
    for i in 0..n {
        let a = &mu.atoms[i].0;
        let b = if i + 1 < n {
            mu.atoms[i + 1].0.clone()
        } else {
            &mu.atoms[0].0 + int(1)
        };
        let gap = &b - a;
        if gap > best.0 {
            best = (gap, rational::midpoint(a, &b));
        }
    }
    best.1
}

/// Measure-preserving check used by the support-agreement audit.
pub fn preserves(f: &MonotoneRealMap, mu: &AtomicCircleMeasure) -> bool {
    atom_images(f, mu).is_ok()
}

pub(crate) fn atom_images_f64(f: &MonotoneRealMap, mu: &AtomicCircleMeasure) -> R<Vec<f64>> {
    Ok(atom_images(f, mu)?.iter().map(rational::to_f64).collect())
}

#[cfg(test)]
mod tests;
