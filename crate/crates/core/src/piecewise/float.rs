//! Outward-rounded float evaluation of piece trees.
//!
//! Every node provides lower and upper bounds of its value at a float point
//! and of its inverse. Monotonicity lets bounds compose: a lower bound of
//! `f ∘ g` at `x` is a lower bound of `f` at a lower bound of `g(x)`.

use std::sync::Arc;

use super::trig::TrigLift;
use super::{Leaf, PeriodicLift, PieceTree, PiecewiseError};
use crate::interval::{add_down, add_up, div_down, div_up, mul_down, mul_up, sub_down, sub_up, FInterval};
use crate::rational::{self, Rational};
use num_traits::Zero;

type R<T> = Result<T, PiecewiseError>;

#[derive(Clone, Debug)]
struct FLeaf {
    lo: FInterval,
    /// value = c0 + c1 s + c2 s^2 + c3 s^3 with s = x − lo
    c: [FInterval; 4],
    cf: [f64; 4],
    lo_f: f64,
    width: f64,
    cubic: bool,
}

impl FLeaf {
    fn new(leaf: &Leaf) -> Self {
        let cubic = leaf.is_hermite();
        // affine pieces are evaluated in the global coordinate, so that
        // exactly representable inputs and coefficients give tight bounds
        let (c, lo) = match leaf {
            Leaf::Affine { slope, offset, .. } => (
                [offset.clone(), slope.clone(), Rational::zero(), Rational::zero()],
                Rational::zero(),
            ),
            Leaf::Hermite { .. } => (leaf.coefficients(), leaf.lo().clone()),
        };
        FLeaf {
            lo: FInterval::from_rational(&lo),
            c: [
                FInterval::from_rational(&c[0]),
                FInterval::from_rational(&c[1]),
                FInterval::from_rational(&c[2]),
                FInterval::from_rational(&c[3]),
            ],
            cf: [
                rational::to_f64(&c[0]),
                rational::to_f64(&c[1]),
                rational::to_f64(&c[2]),
                rational::to_f64(&c[3]),
            ],
            lo_f: rational::to_f64(&lo),
            width: rational::to_f64(&(leaf.hi() - leaf.lo())),
            cubic,
        }
    }

    fn enclose(&self, p: f64) -> FInterval {
        let s = FInterval::new(sub_down(p, self.lo.hi), sub_up(p, self.lo.lo));
        if self.cubic {
            self.c[0].add(&s.mul(&self.c[1].add(&s.mul(&self.c[2].add(&s.mul(&self.c[3]))))))
        } else {
            self.c[0].add(&s.mul(&self.c[1]))
        }
    }

    fn approx(&self, p: f64) -> f64 {
        let s = p - self.lo_f;
        self.cf[0] + s * (self.cf[1] + s * (self.cf[2] + s * self.cf[3]))
    }

    fn inverse_approx(&self, y: f64) -> f64 {
        if !self.cubic {
            return self.lo_f + (y - self.cf[0]) / self.cf[1];
        }
        let (mut lo, mut hi) = (0.0, self.width);
        let f = |s: f64| self.cf[0] + s * (self.cf[1] + s * (self.cf[2] + s * self.cf[3])) - y;
        let df = |s: f64| self.cf[1] + s * (2.0 * self.cf[2] + s * 3.0 * self.cf[3]);
        let (flo, fhi) = (f(lo), f(hi));
        let mut s = if fhi > flo { -flo / (fhi - flo) * hi } else { 0.5 * hi };
        for _ in 0..100 {
            let v = f(s);
            if v == 0.0 {
                break;
            }
            if v < 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let mut next = s - v / df(s);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if next == s || hi - lo <= 4.0 * f64::EPSILON * self.width {
                s = next;
                break;
            }
            s = next;
        }
        self.lo_f + s
    }
}

#[derive(Clone, Debug)]
struct FPeriodic {
    degree: f64,
    /// leaf boundaries b_0 < ... < b_L with b_L = b_0 + 1
    b: Vec<FInterval>,
    b0: f64,
    leaves: Vec<FLeaf>,
    /// approximate values at the boundaries
    vals: Vec<f64>,
}

impl FPeriodic {
    fn new(p: &PeriodicLift) -> Self {
        let mut b: Vec<FInterval> = p.leaves().iter().map(|l| FInterval::from_rational(l.lo())).collect();
        b.push(FInterval::from_rational(p.leaves().last().unwrap().hi()));
        let mut vals: Vec<f64> = p.leaves().iter().map(|l| rational::to_f64(&l.eval(l.lo()))).collect();
        vals.push(vals[0] + p.degree() as f64);
        FPeriodic {
            degree: p.degree() as f64,
            b0: rational::to_f64(p.start()),
            b,
            leaves: p.leaves().iter().map(FLeaf::new).collect(),
            vals,
        }
    }

    fn lower(&self, x: f64) -> R<f64> {
        let l = self.leaves.len();
        let mut k = (x - self.b0).floor();
        let mut xr = sub_down(x, k);
        if xr < self.b[0].hi {
            k -= 1.0;
            xr = sub_down(x, k);
        } else if xr >= self.b[l].hi {
            let x2 = sub_down(x, k + 1.0);
            if x2 >= self.b[0].hi {
                k += 1.0;
                xr = x2;
            }
        }
        if !(xr >= self.b[0].hi) {
            return Err(PiecewiseError::Bracketing(x));
        }
        let i = (0..l).rev().find(|&i| self.b[i].hi <= xr).unwrap();
        let p = xr.min(self.b[i + 1].lo);
        let v = self.leaves[i].enclose(p).lo;
        finite(add_down(v, mul_down(self.degree, k)))
    }

    fn upper(&self, x: f64) -> R<f64> {
        let l = self.leaves.len();
        let mut k = (x - self.b0).floor();
        let mut xr = sub_up(x, k);
        if xr > self.b[l].lo {
            k += 1.0;
            xr = sub_up(x, k);
        } else if xr <= self.b[0].lo {
            let x2 = sub_up(x, k - 1.0);
            if x2 <= self.b[l].lo {
                k -= 1.0;
                xr = x2;
            }
        }
        let i = (0..l)
            .find(|&i| xr <= self.b[i + 1].lo)
            .ok_or(PiecewiseError::Bracketing(x))?;
        let p = xr.max(self.b[i].hi);
        let v = self.leaves[i].enclose(p).hi;
        finite(add_up(v, mul_up(self.degree, k)))
    }

    fn approx(&self, x: f64) -> f64 {
        let k = (x - self.b0).floor();
        let xr = x - k;
        let l = self.leaves.len();
        let i = (0..l).find(|&i| xr < self.b[i + 1].mid()).unwrap_or(l - 1);
        self.leaves[i].approx(xr) + self.degree * k
    }

    fn inverse_approx(&self, y: f64) -> f64 {
        let k = ((y - self.vals[0]) / self.degree).floor();
        let yr = y - self.degree * k;
        let l = self.leaves.len();
        let i = (0..l).find(|&i| yr < self.vals[i + 1]).unwrap_or(l - 1);
        self.leaves[i].inverse_approx(yr) + k
    }
}

fn finite(v: f64) -> R<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(PiecewiseError::Overflow)
    }
}

#[derive(Clone, Debug)]
enum Node {
    Affine { slope: FInterval, offset: FInterval, sf: f64, of: f64 },
    Periodic(Arc<FPeriodic>),
    Trig(Arc<TrigLift>),
    Compose(Vec<Node>),
    Inverse(Box<Node>),
    Shift { s: FInterval, of: Box<Node> },
}

/// Compiled float evaluator for a [`PieceTree`].
#[derive(Clone, Debug)]
pub struct FloatMap {
    node: Node,
}

const MAX_BRACKET_STEPS: usize = 2000;

/// Lower bound of `f^{-1}(y)` from an approximate preimage: step down until
/// an upper bound of `f` is at most `y`.
fn bracket_inverse_lower(y: f64, guess: f64, upper: impl Fn(f64) -> R<f64>) -> R<f64> {
    let mut x = if guess.is_finite() { guess } else { return Err(PiecewiseError::Bracketing(y)) };
    let mut step = ulp(x);
    for _ in 0..MAX_BRACKET_STEPS {
        if upper(x)? <= y {
            // tighten by one ulp if possible
            let up = x.next_up();
            if upper(up)? <= y {
                x = up;
            }
            return Ok(x);
        }
        x -= step;
        step *= 2.0;
    }
    Err(PiecewiseError::Bracketing(y))
}

fn bracket_inverse_upper(y: f64, guess: f64, lower: impl Fn(f64) -> R<f64>) -> R<f64> {
    let mut x = if guess.is_finite() { guess } else { return Err(PiecewiseError::Bracketing(y)) };
    let mut step = ulp(x);
    for _ in 0..MAX_BRACKET_STEPS {
        if lower(x)? >= y {
            let down = x.next_down();
            if lower(down)? >= y {
                x = down;
            }
            return Ok(x);
        }
        x += step;
        step *= 2.0;
    }
    Err(PiecewiseError::Bracketing(y))
}

fn ulp(x: f64) -> f64 {
    let a = x.abs();
    if a < f64::MIN_POSITIVE {
        f64::MIN_POSITIVE
    } else {
        a.next_up() - a
    }
}

impl Node {
    fn compile(t: &PieceTree) -> Node {
        match t {
            PieceTree::Affine { slope, offset } => Node::Affine {
                slope: FInterval::from_rational(slope),
                offset: FInterval::from_rational(offset),
                sf: rational::to_f64(slope),
                of: rational::to_f64(offset),
            },
            PieceTree::Periodic(p) => Node::Periodic(Arc::new(FPeriodic::new(p))),
            PieceTree::Trig(t) => Node::Trig(t.clone()),
            PieceTree::Compose(parts) => Node::Compose(parts.iter().map(Node::compile).collect()),
            PieceTree::Inverse(inner) => Node::Inverse(Box::new(Node::compile(inner))),
            PieceTree::TranslateConjugate { shift, of } => Node::Shift {
                s: FInterval::from_rational(shift),
                of: Box::new(Node::compile(of)),
            },
        }
    }

    fn lower(&self, x: f64) -> R<f64> {
        match self {
            Node::Affine { slope, offset, .. } => {
                let v = if x >= 0.0 { mul_down(x, slope.lo) } else { mul_down(x, slope.hi) };
                finite(add_down(v, offset.lo))
            }
            Node::Periodic(p) => p.lower(x),
            Node::Trig(t) => finite(t.enclose(x).lo),
            Node::Compose(parts) => parts.iter().rev().try_fold(x, |acc, p| p.lower(acc)),
            Node::Inverse(inner) => inner.inv_lower(x),
            Node::Shift { s, of } => finite(add_down(of.lower(sub_down(x, s.hi))?, s.lo)),
        }
    }

    fn upper(&self, x: f64) -> R<f64> {
        match self {
            Node::Affine { slope, offset, .. } => {
                let v = if x >= 0.0 { mul_up(x, slope.hi) } else { mul_up(x, slope.lo) };
                finite(add_up(v, offset.hi))
            }
            Node::Periodic(p) => p.upper(x),
            Node::Trig(t) => finite(t.enclose(x).hi),
            Node::Compose(parts) => parts.iter().rev().try_fold(x, |acc, p| p.upper(acc)),
            Node::Inverse(inner) => inner.inv_upper(x),
            Node::Shift { s, of } => finite(add_up(of.upper(sub_up(x, s.lo))?, s.hi)),
        }
    }

    fn inv_lower(&self, y: f64) -> R<f64> {
        match self {
            Node::Affine { slope, offset, .. } => {
                let num = sub_down(y, offset.hi);
                let v = if num >= 0.0 { div_down(num, slope.hi) } else { div_down(num, slope.lo) };
                finite(v)
            }
            Node::Periodic(p) => bracket_inverse_lower(y, p.inverse_approx(y), |x| p.upper(x)),
            Node::Trig(t) => bracket_inverse_lower(y, t.inverse_approx(y), |x| finite(t.enclose(x).hi)),
            Node::Compose(parts) => parts.iter().try_fold(y, |acc, p| p.inv_lower(acc)),
            Node::Inverse(inner) => inner.lower(y),
            Node::Shift { s, of } => finite(add_down(of.inv_lower(sub_down(y, s.hi))?, s.lo)),
        }
    }

    fn inv_upper(&self, y: f64) -> R<f64> {
        match self {
            Node::Affine { slope, offset, .. } => {
                let num = sub_up(y, offset.lo);
                let v = if num >= 0.0 { div_up(num, slope.lo) } else { div_up(num, slope.hi) };
                finite(v)
            }
            Node::Periodic(p) => bracket_inverse_upper(y, p.inverse_approx(y), |x| p.lower(x)),
            Node::Trig(t) => bracket_inverse_upper(y, t.inverse_approx(y), |x| finite(t.enclose(x).lo)),
            Node::Compose(parts) => parts.iter().try_fold(y, |acc, p| p.inv_upper(acc)),
            Node::Inverse(inner) => inner.upper(y),
            Node::Shift { s, of } => finite(add_up(of.inv_upper(sub_up(y, s.lo))?, s.hi)),
        }
    }

    fn approx(&self, x: f64) -> f64 {
        match self {
            Node::Affine { sf, of, .. } => sf * x + of,
            Node::Periodic(p) => p.approx(x),
            Node::Trig(t) => t.approx(x),
            Node::Compose(parts) => parts.iter().rev().fold(x, |acc, p| p.approx(acc)),
            Node::Inverse(inner) => inner.inv_approx(x),
            Node::Shift { s, of } => of.approx(x - s.mid()) + s.mid(),
        }
    }

    fn inv_approx(&self, y: f64) -> f64 {
        match self {
            Node::Affine { sf, of, .. } => (y - of) / sf,
            Node::Periodic(p) => p.inverse_approx(y),
            Node::Trig(t) => t.inverse_approx(y),
            Node::Compose(parts) => parts.iter().fold(y, |acc, p| p.inv_approx(acc)),
            Node::Inverse(inner) => inner.approx(y),
            Node::Shift { s, of } => of.inv_approx(y - s.mid()) + s.mid(),
        }
    }
}

impl FloatMap {
    pub fn compile(t: &PieceTree) -> Self {
        FloatMap { node: Node::compile(t) }
    }

    /// Lower bound of `f(x)`.
    pub fn lower(&self, x: f64) -> R<f64> {
        self.node.lower(x)
    }

    /// Upper bound of `f(x)`.
    pub fn upper(&self, x: f64) -> R<f64> {
        self.node.upper(x)
    }

    pub fn inverse_lower(&self, y: f64) -> R<f64> {
        self.node.inv_lower(y)
    }

    pub fn inverse_upper(&self, y: f64) -> R<f64> {
        self.node.inv_upper(y)
    }

    /// Enclosure of `f(X)` for an interval `X`, by monotonicity.
    pub fn eval_interval(&self, x: &FInterval) -> R<FInterval> {
        let lo = self.lower(x.lo)?;
        let hi = self.upper(x.hi)?;
        Ok(FInterval::new(lo, hi))
    }

    /// Enclosure of `f^{-1}(Y)`.
    pub fn inverse_interval(&self, y: &FInterval) -> R<FInterval> {
        let lo = self.inverse_lower(y.lo)?;
        let hi = self.inverse_upper(y.hi)?;
        Ok(FInterval::new(lo, hi))
    }

    pub fn enclose(&self, x: f64) -> R<FInterval> {
        self.eval_interval(&FInterval::point(x))
    }

    /// Nearest-rounded evaluation, without enclosure bookkeeping.
    pub fn approx(&self, x: f64) -> f64 {
        self.node.approx(x)
    }

    pub fn inverse_approx(&self, y: f64) -> f64 {
        self.node.inv_approx(y)
    }

    /// Midpoint of the rigorous enclosure, falling back to plain evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        match self.enclose(x) {
            Ok(i) => i.mid(),
            Err(_) => self.approx(x),
        }
    }
}
