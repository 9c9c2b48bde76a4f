//! Strictly increasing piecewise maps of the line.
//!
//! A [`PieceTree`] is built from equivariant leaves (rational affine and cubic
//! Hermite pieces tiling one period, or trigonometric lifts) combined by
//! composition, inversion and conjugation by a translation. Every tree can be
//! evaluated exactly over the rationals or with outward-rounded floats.

mod exact;
mod float;
pub mod trig;

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::interval::{FInterval, RInterval, RigorousInterval};
use crate::rational::{self, int, rat, serde_rational, Rational};

pub use exact::ExactEval;
pub use float::FloatMap;
pub use trig::{fourier_smooth, TrigLift, TrigTerm};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PiecewiseError {
    #[error("parameter a = {0} must satisfy 0 < a < 1/2")]
    BadThetaParameter(String),
    #[error("degree must be at least 1, got {0}")]
    BadDegree(i64),
    #[error("piece {index} is not strictly increasing: {reason}")]
    NotMonotone { index: usize, reason: String },
    #[error("pieces do not tile one period: {0}")]
    BadTiling(String),
    #[error("value discontinuity at x = {at}: {left} vs {right}")]
    Discontinuous {
        at: String,
        left: String,
        right: String,
    },
    #[error("affine map must have positive slope, got {0}")]
    NonPositiveSlope(String),
    #[error("operation needs a degree-one lift")]
    NotDegreeOne,
    #[error("trigonometric lift is not certified monotone (derivative bound {0})")]
    TrigNotMonotone(f64),
    #[error("evaluation failed to bracket an inverse value near {0}")]
    Bracketing(f64),
    #[error("value out of float range")]
    Overflow,
}

/// One piece of a periodic lift, defined on `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Leaf {
    Affine {
        #[serde(with = "serde_rational")]
        lo: Rational,
        #[serde(with = "serde_rational")]
        hi: Rational,
        #[serde(with = "serde_rational")]
        slope: Rational,
        #[serde(with = "serde_rational")]
        offset: Rational,
    },
    /// Cubic Hermite interpolant of `(lo, y0, d0)` and `(hi, y1, d1)`.
    Hermite {
        #[serde(with = "serde_rational")]
        lo: Rational,
        #[serde(with = "serde_rational")]
        hi: Rational,
        #[serde(with = "serde_rational")]
        y0: Rational,
        #[serde(with = "serde_rational")]
        y1: Rational,
        #[serde(with = "serde_rational")]
        d0: Rational,
        #[serde(with = "serde_rational")]
        d1: Rational,
    },
}

impl Leaf {
    pub fn lo(&self) -> &Rational {
        match self {
            Leaf::Affine { lo, .. } | Leaf::Hermite { lo, .. } => lo,
        }
    }

    pub fn hi(&self) -> &Rational {
        match self {
            Leaf::Affine { hi, .. } | Leaf::Hermite { hi, .. } => hi,
        }
    }

    /// Polynomial coefficients in `s = x - lo`: value = c0 + c1 s + c2 s^2 + c3 s^3.
    pub fn coefficients(&self) -> [Rational; 4] {
        match self {
            Leaf::Affine {
                lo, slope, offset, ..
            } => [
                slope * lo + offset,
                slope.clone(),
                Rational::zero(),
                Rational::zero(),
            ],
            Leaf::Hermite {
                lo,
                hi,
                y0,
                y1,
                d0,
                d1,
            } => {
                let h = hi - lo;
                let secant = (y1 - y0) / &h;
                let c2 = (int(3) * &secant - int(2) * d0 - d1) / &h;
                let c3 = (d0 + d1 - int(2) * &secant) / (&h * &h);
                [y0.clone(), d0.clone(), c2, c3]
            }
        }
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let c = self.coefficients();
        let s = x - self.lo();
        &c[0] + &s * (&c[1] + &s * (&c[2] + &s * &c[3]))
    }

    pub fn is_hermite(&self) -> bool {
        matches!(self, Leaf::Hermite { .. })
    }

    fn check_monotone(&self, index: usize) -> Result<(), PiecewiseError> {
        if self.lo() >= self.hi() {
            return Err(PiecewiseError::BadTiling(format!(
                "piece {index} has empty domain"
            )));
        }
        match self {
            Leaf::Affine { slope, .. } => {
                if !slope.is_positive() {
                    return Err(PiecewiseError::NotMonotone {
                        index,
                        reason: format!("slope {slope}"),
                    });
                }
            }
            Leaf::Hermite {
                lo,
                hi,
                y0,
                y1,
                d0,
                d1,
            } => {
                let secant = (y1 - y0) / (hi - lo);
                if !secant.is_positive() || !d0.is_positive() || !d1.is_positive() {
                    return Err(PiecewiseError::NotMonotone {
                        index,
                        reason: "secant and endpoint slopes must be positive".into(),
                    });
                }
                // Fritsch-Carlson: endpoint slopes at most three times the secant.
                let limit = int(3) * &secant;
                if *d0 > limit || *d1 > limit {
                    return Err(PiecewiseError::NotMonotone {
                        index,
                        reason: format!(
                            "Fritsch-Carlson bound violated (d0/secant = {}, d1/secant = {})",
                            d0 / &secant,
                            d1 / &secant
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaParams {
    pub j: i64,
    #[serde(with = "serde_rational")]
    pub a: Rational,
}

/// A degree-`j` lift given by pieces tiling one period `[start, start + 1)`,
/// extended by `F(x + k) = F(x) + j k`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicLift {
    degree: i64,
    leaves: Vec<Leaf>,
    theta: Option<ThetaParams>,
}

impl PeriodicLift {
    pub fn new(degree: i64, leaves: Vec<Leaf>) -> Result<Self, PiecewiseError> {
        if degree < 1 {
            return Err(PiecewiseError::BadDegree(degree));
        }
        if leaves.is_empty() {
            return Err(PiecewiseError::BadTiling("no pieces".into()));
        }
        for (i, leaf) in leaves.iter().enumerate() {
            leaf.check_monotone(i)?;
        }
        for (i, w) in leaves.windows(2).enumerate() {
            if w[0].hi() != w[1].lo() {
                return Err(PiecewiseError::BadTiling(format!(
                    "gap or overlap between pieces {i} and {}",
                    i + 1
                )));
            }
            let (l, r) = (w[0].eval(w[0].hi()), w[1].eval(w[1].lo()));
            if l != r {
                return Err(PiecewiseError::Discontinuous {
                    at: rational::format_rational(w[0].hi()),
                    left: rational::format_rational(&l),
                    right: rational::format_rational(&r),
                });
            }
        }
        let first = &leaves[0];
        let last = leaves.last().unwrap();
        if last.hi() - first.lo() != Rational::one() {
            return Err(PiecewiseError::BadTiling(format!(
                "pieces cover [{}, {}], which is not one period",
                first.lo(),
                last.hi()
            )));
        }
        let wrap_left = last.eval(last.hi());
        let wrap_right = first.eval(first.lo()) + int(degree);
        if wrap_left != wrap_right {
            return Err(PiecewiseError::Discontinuous {
                at: rational::format_rational(last.hi()),
                left: rational::format_rational(&wrap_left),
                right: rational::format_rational(&wrap_right),
            });
        }
        Ok(PeriodicLift {
            degree,
            leaves,
            theta: None,
        })
    }

    /// Piecewise-linear lift through `knots` `(x_i, y_i)`, `x_0 < ⋯ < x_0 + 1`,
    /// closed up by `(x_0 + 1, y_0 + degree)`.
    pub fn piecewise_linear(degree: i64, knots: &[(Rational, Rational)]) -> Result<Self, PiecewiseError> {
        let Some((x0, y0)) = knots.first() else {
            return Err(PiecewiseError::BadTiling("no knots".into()));
        };
        let mut pts = knots.to_vec();
        pts.push((x0 + Rational::one(), y0 + int(degree)));
        let mut leaves = Vec::with_capacity(knots.len());
        for (i, w) in pts.windows(2).enumerate() {
            let (ref xa, ref ya) = w[0];
            let (ref xb, ref yb) = w[1];
            if xb <= xa {
                return Err(PiecewiseError::BadTiling(format!("knot {} is not increasing", i + 1)));
            }
            let slope = (yb - ya) / (xb - xa);
            if slope <= Rational::zero() {
                return Err(PiecewiseError::NotMonotone {
                    index: i,
                    reason: "nonpositive slope".into(),
                });
            }
            leaves.push(Leaf::Affine {
                lo: xa.clone(),
                hi: xb.clone(),
                offset: ya - &slope * xa,
                slope,
            });
        }
        PeriodicLift::new(degree, leaves)
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    pub fn start(&self) -> &Rational {
        self.leaves[0].lo()
    }

    pub fn theta_params(&self) -> Option<&ThetaParams> {
        self.theta.as_ref()
    }

    /// Index of the piece used for `x` in the fundamental domain.
    fn leaf_for(&self, xr: &Rational) -> usize {
        self.leaves
            .iter()
            .position(|l| xr < l.hi())
            .unwrap_or(self.leaves.len() - 1)
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let k = rational::floor_int(&(x - self.start()));
        let kr = Rational::from_integer(k);
        let xr = x - &kr;
        let leaf = &self.leaves[self.leaf_for(&xr)];
        leaf.eval(&xr) + kr * int(self.degree)
    }
}

/// Closed-form strictly increasing map of the line.
#[derive(Clone, Debug, PartialEq)]
pub enum PieceTree {
    Affine { slope: Rational, offset: Rational },
    Periodic(Arc<PeriodicLift>),
    Trig(Arc<TrigLift>),
    /// `Compose([f, g, h])` is `f ∘ g ∘ h`.
    Compose(Vec<PieceTree>),
    Inverse(Box<PieceTree>),
    /// `x ↦ f(x - shift) + shift`.
    TranslateConjugate { shift: Rational, of: Box<PieceTree> },
}

impl PieceTree {
    pub fn identity() -> Self {
        PieceTree::Affine {
            slope: Rational::one(),
            offset: Rational::zero(),
        }
    }

    pub fn affine(slope: Rational, offset: Rational) -> Result<Self, PiecewiseError> {
        if !slope.is_positive() {
            return Err(PiecewiseError::NonPositiveSlope(
                rational::format_rational(&slope),
            ));
        }
        Ok(PieceTree::Affine { slope, offset })
    }

    pub fn translation(t: Rational) -> Self {
        PieceTree::Affine {
            slope: Rational::one(),
            offset: t,
        }
    }

    pub fn periodic(lift: PeriodicLift) -> Self {
        PieceTree::Periodic(Arc::new(lift))
    }

    pub fn translate_conjugate(shift: Rational, of: PieceTree) -> Self {
        PieceTree::TranslateConjugate {
            shift,
            of: Box::new(of),
        }
    }

    /// Equivariance degree `j` with `F(x + 1) = F(x) + j`, when defined.
    pub fn degree(&self) -> Option<i64> {
        match self {
            PieceTree::Affine { slope, .. } => {
                if slope.is_integer() {
                    slope.to_integer().to_i64()
                } else {
                    None
                }
            }
            PieceTree::Periodic(p) => Some(p.degree),
            PieceTree::Trig(t) => Some(t.degree()),
            PieceTree::Compose(parts) => parts
                .iter()
                .try_fold(1i64, |acc, p| p.degree().and_then(|d| acc.checked_mul(d))),
            PieceTree::Inverse(inner) => match inner.degree() {
                Some(1) => Some(1),
                _ => None,
            },
            // conjugating by a translation keeps the degree
            PieceTree::TranslateConjugate { of, .. } => of.degree(),
        }
    }

    /// True when some leaf can only be evaluated through float enclosures.
    pub fn has_trig(&self) -> bool {
        match self {
            PieceTree::Trig(_) => true,
            PieceTree::Affine { .. } | PieceTree::Periodic(_) => false,
            PieceTree::Compose(parts) => parts.iter().any(|p| p.has_trig()),
            PieceTree::Inverse(inner) => inner.has_trig(),
            PieceTree::TranslateConjugate { of, .. } => of.has_trig(),
        }
    }

    pub fn compile(&self) -> FloatMap {
        FloatMap::compile(self)
    }

    pub fn exact(&self) -> ExactEval<'_> {
        ExactEval::new(self)
    }

    /// Float evaluation (midpoint of the rigorous enclosure).
    pub fn eval_f64(&self, x: f64) -> f64 {
        self.compile().eval(x)
    }

    /// Exact enclosure of `f(x)`; a single point unless an inverse of a
    /// Hermite or trigonometric piece is involved.
    pub fn eval_exact(&self, x: &Rational) -> Result<RInterval, PiecewiseError> {
        self.exact().eval_point(x)
    }

    pub fn from_spec(spec: &MapSpec) -> Result<Self, PiecewiseError> {
        Ok(match spec {
            MapSpec::Theta { j, a } => build_theta(*j, a.clone())?,
            MapSpec::Affine { slope, offset } => PieceTree::affine(slope.clone(), offset.clone())?,
            MapSpec::Compose { of } => {
                let parts = of
                    .iter()
                    .map(PieceTree::from_spec)
                    .collect::<Result<Vec<_>, _>>()?;
                PieceTree::Compose(parts)
            }
            MapSpec::Inverse { of } => invert(&PieceTree::from_spec(of)?),
            MapSpec::TranslateConjugate { shift, of } => {
                PieceTree::translate_conjugate(shift.clone(), PieceTree::from_spec(of)?)
            }
            MapSpec::Periodic { degree, pieces } => {
                PieceTree::periodic(PeriodicLift::new(*degree, pieces.clone())?)
            }
            MapSpec::Trig {
                degree,
                offset,
                terms,
            } => PieceTree::Trig(Arc::new(TrigLift::new(
                *degree,
                offset.clone(),
                terms.clone(),
            )?)),
            MapSpec::FourierSmooth { cutoff, of } => {
                let inner = PieceTree::from_spec(of)?;
                match inner {
                    PieceTree::Periodic(p) => PieceTree::Trig(Arc::new(fourier_smooth(&p, *cutoff)?)),
                    _ => {
                        return Err(PiecewiseError::BadTiling(
                            "fourier_smooth applies to a periodic lift".into(),
                        ))
                    }
                }
            }
        })
    }

    pub fn to_spec(&self) -> MapSpec {
        match self {
            PieceTree::Affine { slope, offset } => MapSpec::Affine {
                slope: slope.clone(),
                offset: offset.clone(),
            },
            PieceTree::Periodic(p) => match &p.theta {
                Some(t) => MapSpec::Theta {
                    j: t.j,
                    a: t.a.clone(),
                },
                None => MapSpec::Periodic {
                    degree: p.degree,
                    pieces: p.leaves.clone(),
                },
            },
            PieceTree::Trig(t) => t.to_spec(),
            PieceTree::Compose(parts) => MapSpec::Compose {
                of: parts.iter().map(|p| p.to_spec()).collect(),
            },
            PieceTree::Inverse(inner) => MapSpec::Inverse {
                of: Box::new(inner.to_spec()),
            },
            PieceTree::TranslateConjugate { shift, of } => MapSpec::TranslateConjugate {
                shift: shift.clone(),
                of: Box::new(of.to_spec()),
            },
        }
    }
}

impl fmt::Display for PieceTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PieceTree::Affine { slope, offset } => write!(f, "({slope})x+({offset})"),
            PieceTree::Periodic(p) => match &p.theta {
                Some(t) => write!(f, "theta[j={}, a={}]", t.j, t.a),
                None => write!(f, "periodic[deg={}, {} pieces]", p.degree, p.leaves.len()),
            },
            PieceTree::Trig(t) => write!(f, "trig[deg={}, {} terms]", t.degree(), t.terms().len()),
            PieceTree::Compose(parts) => {
                write!(f, "(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ∘ ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ")")
            }
            PieceTree::Inverse(inner) => write!(f, "{inner}^-1"),
            PieceTree::TranslateConjugate { shift, of } => write!(f, "shift[{shift}]{of}"),
        }
    }
}

/// JSON description of a map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    Theta {
        j: i64,
        #[serde(with = "serde_rational", default = "default_a")]
        a: Rational,
    },
    Affine {
        #[serde(with = "serde_rational")]
        slope: Rational,
        #[serde(with = "serde_rational")]
        offset: Rational,
    },
    Compose {
        of: Vec<MapSpec>,
    },
    Inverse {
        of: Box<MapSpec>,
    },
    TranslateConjugate {
        #[serde(with = "serde_rational")]
        shift: Rational,
        of: Box<MapSpec>,
    },
    Periodic {
        degree: i64,
        pieces: Vec<Leaf>,
    },
    Trig {
        degree: i64,
        #[serde(with = "serde_rational")]
        offset: Rational,
        terms: Vec<TrigTerm>,
    },
    FourierSmooth {
        cutoff: usize,
        of: Box<MapSpec>,
    },
}

fn default_a() -> Rational {
    rat(1, 10)
}

/// The degree-`j` lift equal to `(a/2)x` near 0 and to `j + (a/2)(x-1)` on
/// `(a, 1 + a/2)`, joined on `[a/2, a]` by a monotone cubic Hermite piece.
pub fn build_theta(j: i64, a: Rational) -> Result<PieceTree, PiecewiseError> {
    if j < 1 {
        return Err(PiecewiseError::BadDegree(j));
    }
    if !a.is_positive() || a >= rat(1, 2) {
        return Err(PiecewiseError::BadThetaParameter(
            rational::format_rational(&a),
        ));
    }
    let half = &a / int(2);
    let jr = int(j);
    let leaves = vec![
        Leaf::Affine {
            lo: -half.clone(),
            hi: half.clone(),
            slope: half.clone(),
            offset: Rational::zero(),
        },
        Leaf::Hermite {
            lo: half.clone(),
            hi: a.clone(),
            y0: &half * &half,
            y1: &jr + &half * (&a - int(1)),
            d0: half.clone(),
            d1: half.clone(),
        },
        Leaf::Affine {
            lo: a.clone(),
            hi: int(1) - &half,
            slope: half.clone(),
            offset: &jr - &half,
        },
    ];
    let mut lift = PeriodicLift::new(j, leaves)?;
    lift.theta = Some(ThetaParams { j, a });
    Ok(PieceTree::periodic(lift))
}

/// `f ∘ g`.
pub fn compose(f: &PieceTree, g: &PieceTree) -> PieceTree {
    let mut parts = Vec::new();
    for t in [f, g] {
        match t {
            PieceTree::Compose(inner) => parts.extend(inner.iter().cloned()),
            other => parts.push(other.clone()),
        }
    }
    PieceTree::Compose(parts)
}

pub fn invert(f: &PieceTree) -> PieceTree {
    match f {
        PieceTree::Inverse(inner) => (**inner).clone(),
        PieceTree::Affine { slope, offset } => PieceTree::Affine {
            slope: slope.recip(),
            offset: -offset / slope,
        },
        other => PieceTree::Inverse(Box::new(other.clone())),
    }
}

/// Rigorous enclosure of `f(X)`, in the arithmetic of `X`.
pub fn eval_interval(f: &PieceTree, x: &RigorousInterval) -> Result<RigorousInterval, PiecewiseError> {
    match x {
        RigorousInterval::Float(i) => Ok(RigorousInterval::Float(f.compile().eval_interval(i)?)),
        RigorousInterval::Exact(r) => Ok(RigorousInterval::Exact(f.exact().eval_interval(r)?)),
    }
}

/// Convenience for callers working in floats only.
pub fn eval_finterval(f: &PieceTree, x: &FInterval) -> Result<FInterval, PiecewiseError> {
    f.compile().eval_interval(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{from_f64, parse_rational};
    use proptest::prelude::*;

    fn r(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn point(t: &PieceTree, x: &str) -> Rational {
        let e = t.eval_exact(&r(x)).unwrap();
        assert!(e.is_point());
        e.lo
    }

    #[test]
    fn theta_values_at_integers() {
        let t3 = build_theta(3, rat(1, 10)).unwrap();
        assert_eq!(point(&t3, "0"), int(0));
        assert_eq!(point(&t3, "1"), int(3));
        assert_eq!(point(&t3, "-2"), int(-6));
    }

    #[test]
    fn theta_equivariance_instance() {
        let t2 = build_theta(2, rat(1, 10)).unwrap();
        assert_eq!(point(&t2, "0.2") + int(2), point(&t2, "1.2"));
    }

    #[test]
    fn theta_maps_contracting_half_into_itself() {
        let t2 = build_theta(2, rat(1, 10)).unwrap();
        let img = t2
            .exact()
            .eval_interval(&RInterval::new(r("-1/10"), int(0)))
            .unwrap();
        assert_eq!(img, RInterval::new(r("-1/200"), int(0)));
    }

    #[test]
    fn theta_rejects_bad_parameter() {
        assert!(matches!(
            build_theta(2, rat(1, 2)),
            Err(PiecewiseError::BadThetaParameter(_))
        ));
        assert!(matches!(
            build_theta(2, int(0)),
            Err(PiecewiseError::BadThetaParameter(_))
        ));
        assert!(matches!(build_theta(0, rat(1, 10)), Err(PiecewiseError::BadDegree(0))));
        // a = 0.4 still gives a monotone join
        assert!(build_theta(3, rat(2, 5)).is_ok());
    }

    #[test]
    fn fritsch_carlson_violation_is_reported() {
        let leaves = vec![
            Leaf::Hermite {
                lo: int(0),
                hi: rat(1, 2),
                y0: int(0),
                y1: rat(1, 2),
                d0: int(4),
                d1: int(1),
            },
            Leaf::Affine {
                lo: rat(1, 2),
                hi: int(1),
                slope: int(1),
                offset: int(0),
            },
        ];
        assert!(matches!(
            PeriodicLift::new(1, leaves),
            Err(PiecewiseError::NotMonotone { index: 0, .. })
        ));
    }

    #[test]
    fn discontinuity_is_reported() {
        let leaves = vec![
            Leaf::Affine {
                lo: int(0),
                hi: rat(1, 2),
                slope: int(1),
                offset: int(0),
            },
            Leaf::Affine {
                lo: rat(1, 2),
                hi: int(1),
                slope: int(1),
                offset: rat(1, 10),
            },
        ];
        assert!(matches!(
            PeriodicLift::new(1, leaves),
            Err(PiecewiseError::Discontinuous { .. })
        ));
    }

    #[test]
    fn invert_identity_and_affine() {
        assert_eq!(invert(&PieceTree::identity()), PieceTree::identity());
        let f = PieceTree::affine(int(2), int(1)).unwrap();
        let inv = PieceTree::Inverse(Box::new(f.clone()));
        assert_eq!(point(&inv, "3"), int(1));
        assert_eq!(point(&invert(&f), "3"), int(1));
    }

    #[test]
    fn theta_round_trip_through_inverse() {
        let t3 = build_theta(3, rat(1, 10)).unwrap();
        let id = compose(&t3, &PieceTree::Inverse(Box::new(t3.clone())));
        assert!((id.eval_f64(0.37) - 0.37).abs() <= 1e-12);
        // these preimages lie on linear pieces, so the exact round trip is a point
        assert_eq!(point(&id, "0.001"), r("0.001"));
        assert_eq!(point(&id, "2.96"), r("2.96"));
        let e = id.eval_exact(&r("0.37")).unwrap();
        assert!(e.lo <= r("0.37") && r("0.37") <= e.hi);
        // the 1e-30 preimage bracket is stretched by the join slope
        assert!(e.width() <= r("1e-27"));
    }

    #[test]
    fn degrees_compose_multiplicatively() {
        let t2 = build_theta(2, rat(1, 10)).unwrap();
        let t3 = build_theta(3, rat(1, 10)).unwrap();
        assert_eq!(compose(&t2, &t3).degree(), Some(6));
        assert_eq!(PieceTree::translation(int(1)).degree(), Some(1));
        assert_eq!(invert(&t2).degree(), None);
    }

    #[test]
    fn interval_examples() {
        let id = PieceTree::identity();
        let x = FInterval::new(0.1, 0.2);
        assert_eq!(eval_finterval(&id, &x).unwrap(), x);
        let three = PieceTree::affine(int(3), int(0)).unwrap();
        assert_eq!(
            eval_finterval(&three, &FInterval::new(-1.0, 1.0)).unwrap(),
            FInterval::new(-3.0, 3.0)
        );
        let t2 = build_theta(2, rat(1, 10)).unwrap();
        let img = eval_finterval(&t2, &FInterval::from_rationals(&int(0), &rat(1, 10))).unwrap();
        assert_eq!(img.lo, 0.0);
        assert!(img.hi <= 2.0 - 0.045 + 1e-15);
        assert!(img.hi >= 2.0 - 0.045 - 1e-15);
    }

    #[test]
    fn spec_round_trip() {
        let spec: MapSpec = serde_json::from_str(
            r#"{"kind":"compose","of":[{"kind":"theta","j":3,"a":"1/10"},{"kind":"inverse","of":{"kind":"translate_conjugate","shift":"1/2","of":{"kind":"theta","j":2}}}]}"#,
        )
        .unwrap();
        let tree = PieceTree::from_spec(&spec).unwrap();
        assert_eq!(tree.to_spec(), spec);
        let json = serde_json::to_string(&spec).unwrap();
        let back: MapSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }

    fn small_rational() -> impl Strategy<Value = Rational> {
        (-2000i64..=2000, 1i64..=997).prop_map(|(p, q)| rat(p, q) / int(1).max(int(1)))
            .prop_filter("in [-2,2]", |x| x.abs() <= int(2))
    }

    fn sample_trees() -> Vec<PieceTree> {
        let t2 = build_theta(2, rat(1, 10)).unwrap();
        let t3 = build_theta(3, rat(1, 10)).unwrap();
        vec![
            t2.clone(),
            t3.clone(),
            compose(&t3, &invert(&PieceTree::translate_conjugate(rat(1, 2), t2.clone()))),
            PieceTree::affine(rat(3, 2), rat(-1, 7)).unwrap(),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn round_trip_exact_through_inverse(x in small_rational()) {
            for f in sample_trees() {
                let y = f.eval_exact(&x).unwrap();
                let inv = invert(&f);
                let back = inv.exact().eval_interval(&y).unwrap();
                prop_assert!(back.lo <= x && x <= back.hi);
                if y.is_point() && back.is_point() {
                    prop_assert_eq!(&back.lo, &x);
                }
                prop_assert!(back.width() <= r("1e-25"));
                let xf = rational::to_f64(&x);
                prop_assert!((inv.eval_f64(f.eval_f64(xf)) - xf).abs() <= 1e-12);
            }
        }

        #[test]
        fn theta_equivariance_exact(x in small_rational(), j in 1i64..6) {
            let t = build_theta(j, rat(1, 10)).unwrap();
            let d = point(&t, &rational::format_rational(&(&x + int(1)))) - point(&t, &rational::format_rational(&x));
            prop_assert_eq!(d, int(j));
        }

        #[test]
        fn monotone_on_rationals(x in small_rational(), y in small_rational()) {
            prop_assume!(x < y);
            for f in sample_trees() {
                let fx = f.eval_exact(&x).unwrap();
                let fy = f.eval_exact(&y).unwrap();
                prop_assert!(fx.hi < fy.lo);
            }
        }

        #[test]
        fn interval_soundness(lo in -2.0f64..2.0, w in 0.0f64..0.5, seeds in proptest::collection::vec(0.0f64..1.0, 10)) {
            let x = FInterval::new(lo, lo + w);
            for f in sample_trees() {
                let fm = f.compile();
                let img = fm.eval_interval(&x).unwrap();
                for s in &seeds {
                    let p = lo + s * w;
                    let e = f.eval_exact(&from_f64(p)).unwrap();
                    prop_assert!(from_f64(img.lo) <= e.lo && e.hi <= from_f64(img.hi));
                }
            }
        }
    }
}
