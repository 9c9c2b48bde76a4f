//! Exact rational evaluation of piece trees.
//!
//! Forward evaluation of affine and Hermite pieces is exact. Preimages under a
//! cubic piece are irrational in general and come back as rational brackets
//! of width at most 1e-30; trigonometric leaves go through float enclosures.

use super::{Leaf, PeriodicLift, PieceTree, PiecewiseError};
use crate::interval::{FInterval, RInterval};
use crate::rational::{self, int, Rational};
use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

type R<T> = Result<T, PiecewiseError>;

fn bracket_width() -> Rational {
    Rational::new(1.into(), num_traits::pow(num_bigint::BigInt::from(10), 30))
}

pub struct ExactEval<'a> {
    tree: &'a PieceTree,
}

impl<'a> ExactEval<'a> {
    pub fn new(tree: &'a PieceTree) -> Self {
        ExactEval { tree }
    }

    pub fn eval_point(&self, x: &Rational) -> R<RInterval> {
        enclose(self.tree, &RInterval::point(x.clone()))
    }

    pub fn eval_interval(&self, x: &RInterval) -> R<RInterval> {
        enclose(self.tree, x)
    }

    pub fn inverse_interval(&self, y: &RInterval) -> R<RInterval> {
        inv_enclose(self.tree, y)
    }

    /// The exact value when every step stays rational (no cubic preimage,
    /// no trigonometric leaf); `None` otherwise.
    pub fn eval_rational(&self, x: &Rational) -> R<Option<Rational>> {
        rational_value(self.tree, x, false)
    }
}

fn rational_value(t: &PieceTree, x: &Rational, inverse: bool) -> R<Option<Rational>> {
    Ok(match (t, inverse) {
        (PieceTree::Affine { slope, offset }, false) => Some(slope * x + offset),
        (PieceTree::Affine { slope, offset }, true) => Some((x - offset) / slope),
        (PieceTree::Periodic(p), false) => Some(p.eval(x)),
        (PieceTree::Periodic(p), true) => periodic_preimage_if_rational(p, x)?,
        (PieceTree::Trig(_), _) => None,
        (PieceTree::Compose(parts), false) => {
            let mut acc = x.clone();
            for p in parts.iter().rev() {
                match rational_value(p, &acc, false)? {
                    Some(v) => acc = v,
                    None => return Ok(None),
                }
            }
            Some(acc)
        }
        (PieceTree::Compose(parts), true) => {
            let mut acc = x.clone();
            for p in parts {
                match rational_value(p, &acc, true)? {
                    Some(v) => acc = v,
                    None => return Ok(None),
                }
            }
            Some(acc)
        }
        (PieceTree::Inverse(inner), inv) => rational_value(inner, x, !inv)?,
        (PieceTree::TranslateConjugate { shift, of }, inv) => {
            rational_value(of, &(x - shift), inv)?.map(|v| v + shift)
        }
    })
}

fn periodic_preimage_if_rational(p: &PeriodicLift, y: &Rational) -> R<Option<Rational>> {
    let (leaf, yr, k) = locate_preimage(p, y);
    Ok(match leaf {
        Leaf::Affine { slope, offset, .. } => Some((&yr - offset) / slope + k),
        Leaf::Hermite { .. } => {
            if leaf.eval(leaf.lo()) == yr {
                Some(leaf.lo() + k)
            } else {
                None
            }
        }
    })
}

fn from_float(i: FInterval) -> R<RInterval> {
    if !(i.lo.is_finite() && i.hi.is_finite()) {
        return Err(PiecewiseError::Overflow);
    }
    Ok(RInterval::new(rational::from_f64(i.lo), rational::from_f64(i.hi)))
}

fn enclose(t: &PieceTree, x: &RInterval) -> R<RInterval> {
    match t {
        PieceTree::Affine { slope, offset } => Ok(RInterval::new(
            slope * &x.lo + offset,
            slope * &x.hi + offset,
        )),
        PieceTree::Periodic(p) => {
            if x.is_point() {
                Ok(RInterval::point(p.eval(&x.lo)))
            } else {
                Ok(RInterval::new(p.eval(&x.lo), p.eval(&x.hi)))
            }
        }
        PieceTree::Trig(tl) => {
            let xf = x.to_float();
            let lo = tl.enclose(xf.lo).lo;
            let hi = tl.enclose(xf.hi).hi;
            from_float(FInterval::new(lo, hi))
        }
        PieceTree::Compose(parts) => parts
            .iter()
            .rev()
            .try_fold(x.clone(), |acc, p| enclose(p, &acc)),
        PieceTree::Inverse(inner) => inv_enclose(inner, x),
        PieceTree::TranslateConjugate { shift, of } => {
            Ok(enclose(of, &x.add_scalar(&-shift))?.add_scalar(shift))
        }
    }
}

fn inv_enclose(t: &PieceTree, y: &RInterval) -> R<RInterval> {
    match t {
        PieceTree::Affine { slope, offset } => Ok(RInterval::new(
            (&y.lo - offset) / slope,
            (&y.hi - offset) / slope,
        )),
        PieceTree::Periodic(p) => {
            if y.is_point() {
                periodic_preimage(p, &y.lo)
            } else {
                Ok(RInterval::new(
                    periodic_preimage(p, &y.lo)?.lo,
                    periodic_preimage(p, &y.hi)?.hi,
                ))
            }
        }
        PieceTree::Trig(tl) => {
            let c = PieceTree::Trig(tl.clone()).compile();
            let yf = y.to_float();
            let lo = c.inverse_lower(yf.lo)?;
            let hi = c.inverse_upper(yf.hi)?;
            from_float(FInterval::new(lo, hi))
        }
        PieceTree::Compose(parts) => parts
            .iter()
            .try_fold(y.clone(), |acc, p| inv_enclose(p, &acc)),
        PieceTree::Inverse(inner) => enclose(inner, y),
        PieceTree::TranslateConjugate { shift, of } => {
            Ok(inv_enclose(of, &y.add_scalar(&-shift))?.add_scalar(shift))
        }
    }
}

/// Bracket of `F^{-1}(y)` for a periodic lift; a point when the preimage lies
/// on an affine piece or is hit exactly.
fn periodic_preimage(p: &PeriodicLift, y: &Rational) -> R<RInterval> {
    let (leaf, yr, k) = locate_preimage(p, y);
    Ok(leaf_preimage(leaf, &yr)?.add_scalar(&k))
}

/// The piece whose image contains `y` after reducing by the period:
/// `y = yr + j k` with `yr ∈ [F(b_0), F(b_0) + j)`.
fn locate_preimage<'p>(p: &'p PeriodicLift, y: &Rational) -> (&'p Leaf, Rational, Rational) {
    let leaves = p.leaves();
    let v0 = leaves[0].eval(leaves[0].lo());
    let j = int(p.degree());
    let k = Rational::from_integer(rational::floor_int(&((y - &v0) / &j)));
    let yr = y - &j * &k;
    let idx = leaves
        .iter()
        .position(|l| yr < l.eval(l.hi()))
        .unwrap_or(leaves.len() - 1);
    (&leaves[idx], yr, k)
}

fn leaf_preimage(leaf: &Leaf, y: &Rational) -> R<RInterval> {
    match leaf {
        Leaf::Affine { slope, offset, .. } => Ok(RInterval::point((y - offset) / slope)),
        Leaf::Hermite { .. } => {
            let (lo, hi) = (leaf.lo().clone(), leaf.hi().clone());
            if leaf.eval(&lo) == *y {
                return Ok(RInterval::point(lo));
            }
            if leaf.eval(&hi) == *y {
                return Ok(RInterval::point(hi));
            }
            let tol = bracket_width();
            let guess = float_guess(leaf, y);
            if let Some(r) = guess.as_ref().and_then(|g| newton_bracket(leaf, y, g)) {
                return Ok(r);
            }
            // widen the float guess until it brackets, then bisect
            let mut step = Rational::new(1.into(), num_traits::pow(num_bigint::BigInt::from(10), 14));
            let (mut a, mut b) = (lo.clone(), hi.clone());
            if let Some(g) = guess {
                for _ in 0..8 {
                    let ca = (&g - &step).max(lo.clone());
                    let cb = (&g + &step).min(hi.clone());
                    if leaf.eval(&ca) <= *y && leaf.eval(&cb) >= *y {
                        a = ca;
                        b = cb;
                        break;
                    }
                    step *= int(1000);
                }
            }
            let two = int(2);
            while &b - &a > tol {
                let mid = (&a + &b) / &two;
                let v = leaf.eval(&mid);
                if v == *y {
                    return Ok(RInterval::point(mid));
                }
                if v < *y {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            if a > b {
                return Err(PiecewiseError::Bracketing(rational::to_f64(y)));
            }
            Ok(RInterval::new(a, b))
        }
    }
}

/// `Σ c_i s^i − y` with denominators cleared: integer coefficients `k_i`
/// with `k_i / scale = c_i` (and `c_0 − y` in place of `c_0`).
struct ScaledCubic {
    k: [BigInt; 4],
    scale: BigInt,
}

impl ScaledCubic {
    fn new(c: &[Rational; 4], y: &Rational) -> Self {
        let cs = [&c[0] - y, c[1].clone(), c[2].clone(), c[3].clone()];
        let scale = cs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let k = cs.map(|c| c.numer() * (&scale / c.denom()));
        ScaledCubic { k, scale }
    }

    /// Numerator and (positive) denominator of the value at `s`.
    fn value(&self, s: &Rational) -> (BigInt, BigInt) {
        let (p, q) = (s.numer(), s.denom());
        let q2 = q * q;
        let q3 = &q2 * q;
        let [k0, k1, k2, k3] = &self.k;
        let v = ((k3 * p + k2 * q) * p + k1 * &q2) * p + k0 * &q3;
        (v, &self.scale * q3)
    }

    fn sign(&self, s: &Rational) -> Sign {
        self.value(s).0.sign()
    }
}

/// One Newton step from the float guess (exact residual, float derivative),
/// rounded to a dyadic grid, then a sign check on a bracket narrower than
/// [`bracket_width`].
fn newton_bracket(leaf: &Leaf, y: &Rational, guess: &Rational) -> Option<RInterval> {
    let (lo, hi) = (leaf.lo(), leaf.hi());
    let c = leaf.coefficients();
    let cf: Vec<f64> = c.iter().map(rational::to_f64).collect();
    let cubic = ScaledCubic::new(&c, y);
    let s = guess - lo;
    let sf = rational::to_f64(&s);
    let d = cf[1] + sf * (2.0 * cf[2] + sf * 3.0 * cf[3]);
    if !(d > 0.0) {
        return None;
    }
    let (num, den) = cubic.value(&s);
    let residual = num.to_f64()? / den.to_f64()?;
    let grid = BigInt::one() << 112usize;
    let x = guess - rational::from_f64(residual / d);
    let x = Rational::new(rational::floor_int(&(&x * Rational::from_integer(grid.clone()))), grid);
    let half = Rational::new(BigInt::one(), BigInt::one() << 102usize);
    let a = (&x - &half).max(lo.clone());
    let b = (&x + &half).min(hi.clone());
    let ok = cubic.sign(&(&a - lo)) != Sign::Plus && cubic.sign(&(&b - lo)) != Sign::Minus;
    ok.then(|| RInterval::new(a, b))
}

fn float_guess(leaf: &Leaf, y: &Rational) -> Option<Rational> {
    let c: Vec<f64> = leaf.coefficients().iter().map(rational::to_f64).collect();
    let h = rational::to_f64(&(leaf.hi() - leaf.lo()));
    let yf = rational::to_f64(y);
    let f = |s: f64| c[0] + s * (c[1] + s * (c[2] + s * c[3])) - yf;
    let df = |s: f64| c[1] + s * (2.0 * c[2] + s * 3.0 * c[3]);
    let (mut lo, mut hi) = (0.0f64, h);
    let mut s = 0.5 * h;
    for _ in 0..100 {
        let v = f(s);
        if v < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let mut next = s - v / df(s);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == s {
            break;
        }
        s = next;
    }
    if s.is_finite() {
        Some(leaf.lo() + rational::from_f64(s))
    } else {
        None
    }
}
