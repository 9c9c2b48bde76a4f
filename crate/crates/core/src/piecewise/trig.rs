//! Trigonometric lifts `F(x) = j x + c0 + Σ (a_k cos 2πkx + b_k sin 2πkx)`.
//!
//! Coefficients are held as float intervals so that a lift obtained by
//! smoothing a piecewise map still has rigorous enclosures.

use std::sync::{Arc, OnceLock};

use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{MapSpec, PeriodicLift, PiecewiseError};
use crate::interval::{add_up, div_down, div_up, mul_up, sub_down, sub_up, FInterval};
use crate::rational::{self, int, Rational};

pub const PI_LO: f64 = std::f64::consts::PI;

pub fn pi() -> FInterval {
    // f64 PI lies below π.
    FInterval::new(PI_LO, PI_LO.next_up())
}

fn two_pi() -> FInterval {
    FInterval::new(2.0 * PI_LO, (2.0 * PI_LO).next_up())
}

const TAYLOR_TERMS: usize = 12;
const TAYLOR_REMAINDER: f64 = 1e-25;

fn inverse_factorials() -> &'static [FInterval] {
    static TABLE: OnceLock<Vec<FInterval>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = vec![FInterval::point(1.0)];
        let mut cur = FInterval::point(1.0);
        for n in 1..=(2 * TAYLOR_TERMS + 2) {
            let d = n as f64;
            cur = FInterval::new(div_down(cur.lo, d), div_up(cur.hi, d));
            out.push(cur);
        }
        out
    })
}

fn series(z: &FInterval, offset: usize) -> FInterval {
    // Σ (-1)^i z^i / (2i + offset)!
    let inv = inverse_factorials();
    let mut acc = FInterval::point(0.0);
    for i in (0..TAYLOR_TERMS).rev() {
        let c = inv[2 * i + offset];
        let c = if i % 2 == 1 { c.neg() } else { c };
        acc = c.add(&z.mul(&acc));
    }
    acc
}

/// Enclosures of `(sin 2πt, cos 2πt)`.
pub fn sincos_turns(t: FInterval) -> (FInterval, FInterval) {
    let unit = FInterval::new(-1.0, 1.0);
    if !(t.lo.is_finite() && t.hi.is_finite()) || t.width() > 0.25 {
        return (unit, unit);
    }
    let q = (t.mid() * 4.0).round();
    let qf = q / 4.0;
    let r = FInterval::new(sub_down(t.lo, qf), sub_up(t.hi, qf));
    let theta = r.mul(&two_pi());
    let z = theta.mul(&theta);
    let rem = FInterval::new(-TAYLOR_REMAINDER, TAYLOR_REMAINDER);
    let s = theta.mul(&series(&z, 1)).add(&rem);
    let c = series(&z, 0).add(&rem);
    let clamp = |i: FInterval| FInterval::new(i.lo.max(-1.0), i.hi.min(1.0));
    let (s, c) = match (q as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, s.neg()),
        2 => (s.neg(), c.neg()),
        _ => (c.neg(), s),
    };
    (clamp(s), clamp(c))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub k: u32,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Clone, Debug, PartialEq)]
struct Coeff {
    k: u32,
    cos: FInterval,
    sin: FInterval,
}

#[derive(Clone, Debug, PartialEq)]
struct Smoothing {
    cutoff: usize,
    source: Arc<PeriodicLift>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrigLift {
    degree: i64,
    offset: Rational,
    offset_f: FInterval,
    coeffs: Vec<Coeff>,
    /// Certified lower bound for `F'`.
    slope_lower: f64,
    amplitude: f64,
    smoothing: Option<Smoothing>,
}

impl TrigLift {
    pub fn new(degree: i64, offset: Rational, terms: Vec<TrigTerm>) -> Result<Self, PiecewiseError> {
        if degree < 1 {
            return Err(PiecewiseError::BadDegree(degree));
        }
        let coeffs: Vec<Coeff> = terms
            .iter()
            .map(|t| Coeff {
                k: t.k,
                cos: FInterval::point(t.cos),
                sin: FInterval::point(t.sin),
            })
            .collect();
        // F' ≥ j − Σ 2πk (|a_k| + |b_k|)
        let mut bound = 0.0f64;
        for c in &coeffs {
            let mag = add_up(c.cos.abs_max(), c.sin.abs_max());
            bound = add_up(bound, mul_up(mul_up(two_pi().hi, c.k as f64), mag));
        }
        let slope_lower = sub_down(degree as f64, bound);
        if slope_lower.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(PiecewiseError::TrigNotMonotone(slope_lower));
        }
        Ok(Self::assemble(degree, offset, coeffs, slope_lower, None))
    }

    fn assemble(
        degree: i64,
        offset: Rational,
        coeffs: Vec<Coeff>,
        slope_lower: f64,
        smoothing: Option<Smoothing>,
    ) -> Self {
        let amplitude = coeffs
            .iter()
            .fold(0.0, |acc, c| add_up(acc, add_up(c.cos.abs_max(), c.sin.abs_max())));
        TrigLift {
            degree,
            offset_f: FInterval::from_rational(&offset),
            offset,
            coeffs,
            slope_lower,
            amplitude,
            smoothing,
        }
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn slope_lower_bound(&self) -> f64 {
        self.slope_lower
    }

    /// Coefficients rounded to nearest (exact for user-supplied lifts).
    pub fn terms(&self) -> Vec<TrigTerm> {
        self.coeffs
            .iter()
            .map(|c| TrigTerm {
                k: c.k,
                cos: c.cos.mid(),
                sin: c.sin.mid(),
            })
            .collect()
    }

    pub fn to_spec(&self) -> MapSpec {
        match &self.smoothing {
            Some(s) => MapSpec::FourierSmooth {
                cutoff: s.cutoff,
                of: Box::new(MapSpec::from_periodic(&s.source)),
            },
            None => MapSpec::Trig {
                degree: self.degree,
                offset: self.offset.clone(),
                terms: self.terms(),
            },
        }
    }

    /// Rigorous enclosure of `F(x)`.
    pub fn enclose(&self, x: f64) -> FInterval {
        let k = x.floor();
        let u = FInterval::new(sub_down(x, k), sub_up(x, k));
        let mut acc = self.offset_f.add(&u.mul(&FInterval::point(self.degree as f64)));
        for c in &self.coeffs {
            let t = u.mul(&FInterval::point(c.k as f64));
            let (s, co) = sincos_turns(t);
            acc = acc.add(&c.cos.mul(&co)).add(&c.sin.mul(&s));
        }
        let shift = FInterval::point(self.degree as f64).mul(&FInterval::point(k));
        acc.add(&shift)
    }

    pub fn approx(&self, x: f64) -> f64 {
        let u = x - x.floor();
        let mut acc = self.offset_f.mid() + self.degree as f64 * u;
        for c in &self.coeffs {
            let (s, co) = (std::f64::consts::TAU * c.k as f64 * u).sin_cos();
            acc += c.cos.mid() * co + c.sin.mid() * s;
        }
        acc + self.degree as f64 * x.floor()
    }

    fn approx_with_derivative(&self, x: f64) -> (f64, f64) {
        let u = x - x.floor();
        let mut v = self.offset_f.mid() + self.degree as f64 * u;
        let mut d = self.degree as f64;
        for c in &self.coeffs {
            let w = std::f64::consts::TAU * c.k as f64;
            let (s, co) = (w * u).sin_cos();
            v += c.cos.mid() * co + c.sin.mid() * s;
            d += w * (c.sin.mid() * co - c.cos.mid() * s);
        }
        (v + self.degree as f64 * x.floor(), d)
    }

    /// Approximate preimage by safeguarded Newton iteration.
    pub fn inverse_approx(&self, y: f64) -> f64 {
        let j = self.degree as f64;
        let c0 = self.offset_f.mid();
        let slack = self.amplitude + 1e-9 * (1.0 + y.abs());
        let (mut lo, mut hi) = ((y - c0 - slack) / j, (y - c0 + slack) / j);
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (v, d) = self.approx_with_derivative(x);
            let f = v - y;
            if f == 0.0 {
                return x;
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let mut next = x - f / d.max(self.slope_lower);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if next == x || hi - lo <= f64::EPSILON * x.abs().max(1e-300) {
                return next;
            }
            x = next;
        }
        x
    }
}

/// Complex interval `re + i·im`.
#[derive(Clone, Copy, Debug)]
struct CInterval {
    re: FInterval,
    im: FInterval,
}

impl CInterval {
    fn zero() -> Self {
        CInterval {
            re: FInterval::point(0.0),
            im: FInterval::point(0.0),
        }
    }

    fn add(&self, o: &CInterval) -> CInterval {
        CInterval {
            re: self.re.add(&o.re),
            im: self.im.add(&o.im),
        }
    }

    fn sub(&self, o: &CInterval) -> CInterval {
        CInterval {
            re: self.re.sub(&o.re),
            im: self.im.sub(&o.im),
        }
    }

    fn mul(&self, o: &CInterval) -> CInterval {
        CInterval {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }

    fn scale(&self, s: &FInterval) -> CInterval {
        CInterval {
            re: self.re.mul(s),
            im: self.im.mul(s),
        }
    }
}

/// `e^{-2πi k x}` for rational `x`, reduced exactly modulo one first.
fn exp_neg(k: u32, x: &Rational) -> CInterval {
    let t = x * int(k as i64);
    let frac = &t - Rational::from_integer(rational::floor_int(&t));
    let (s, c) = sincos_turns(FInterval::from_rational(&frac));
    CInterval { re: c, im: s.neg() }
}

/// Fourier coefficient `∫_period φ(x) e^{-2πikx} dx` of the periodic part
/// `φ(x) = F(x) − j x` of a piecewise-polynomial lift, `k ≥ 1`.
fn fourier_coefficient(lift: &PeriodicLift, k: u32) -> CInterval {
    let omega = two_pi().mul(&FInterval::point(k as f64));
    // (iω)^{-(r+1)} for r = 0..3
    let mut inv_pow = Vec::with_capacity(4);
    let mut mag = FInterval::point(1.0);
    for r in 0..4u32 {
        mag = mag.div(&omega);
        // (1/i)^{r+1} = (-i)^{r+1}
        let unit = match (r + 1) % 4 {
            0 => (1.0, 0.0),
            1 => (0.0, -1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, 1.0),
        };
        inv_pow.push(CInterval {
            re: mag.mul(&FInterval::point(unit.0)),
            im: mag.mul(&FInterval::point(unit.1)),
        });
    }
    let j = int(lift.degree());
    let mut total = CInterval::zero();
    for leaf in lift.leaves() {
        // φ on this leaf as a cubic in s = x − lo.
        let mut c = leaf.coefficients();
        c[0] -= &j * leaf.lo();
        c[1] -= &j;
        let eval_poly = |s: &Rational, r: usize| -> Rational {
            // r-th derivative at s
            let d: [Rational; 4] = match r {
                0 => c.clone(),
                1 => [c[1].clone(), int(2) * &c[2], int(3) * &c[3], Rational::zero()],
                2 => [int(2) * &c[2], int(6) * &c[3], Rational::zero(), Rational::zero()],
                _ => [int(6) * &c[3], Rational::zero(), Rational::zero(), Rational::zero()],
            };
            &d[0] + s * (&d[1] + s * (&d[2] + s * &d[3]))
        };
        let h = leaf.hi() - leaf.lo();
        let boundary = |x: &Rational, s: &Rational| -> CInterval {
            // Q(x) e^{-iωx} with Q = -Σ P^{(r)} / (iω)^{r+1}
            let mut q = CInterval::zero();
            for (r, ip) in inv_pow.iter().enumerate() {
                let p = eval_poly(s, r);
                if p.is_zero() {
                    continue;
                }
                q = q.sub(&ip.scale(&FInterval::from_rational(&p)));
            }
            q.mul(&exp_neg(k, x))
        };
        let upper = boundary(leaf.hi(), &h);
        let lower = boundary(leaf.lo(), &Rational::zero());
        total = total.add(&upper.sub(&lower));
    }
    total
}

fn min_slope(lift: &PeriodicLift) -> Rational {
    let mut best: Option<Rational> = None;
    for leaf in lift.leaves() {
        let c = leaf.coefficients();
        let h = leaf.hi() - leaf.lo();
        // derivative c1 + 2 c2 s + 3 c3 s^2 on [0, h]
        let d = |s: &Rational| &c[1] + s * (int(2) * &c[2] + s * (int(3) * &c[3]));
        let mut cands = vec![d(&Rational::zero()), d(&h)];
        // a convex derivative can dip below both endpoint values
        if c[3].is_positive() {
            let vertex = -&c[2] / (int(3) * &c[3]);
            if vertex.is_positive() && vertex < h {
                cands.push(d(&vertex));
            }
        }
        for v in cands {
            best = Some(match best {
                Some(b) if b <= v => b,
                _ => v,
            });
        }
    }
    best.expect("lift has pieces")
}

/// Fejér mean of order `cutoff` of a piecewise-polynomial lift.
///
/// The Fejér kernel is positive with unit mass, so the smoothed derivative is
/// bounded below by the minimum slope of the source and the result stays
/// strictly increasing.
pub fn fourier_smooth(lift: &PeriodicLift, cutoff: usize) -> Result<TrigLift, PiecewiseError> {
    if cutoff == 0 {
        return Err(PiecewiseError::BadTiling("cutoff must be positive".into()));
    }
    let j = int(lift.degree());
    let mut c0 = Rational::zero();
    for leaf in lift.leaves() {
        let mut c = leaf.coefficients();
        c[0] -= &j * leaf.lo();
        c[1] -= &j;
        let h = leaf.hi() - leaf.lo();
        c0 += &h * (&c[0] + &h * (&c[1] / int(2) + &h * (&c[2] / int(3) + &h * &c[3] / int(4))));
    }
    let kk = (cutoff + 1) as f64;
    let mut coeffs = Vec::with_capacity(cutoff);
    for k in 1..=cutoff as u32 {
        let ck = fourier_coefficient(lift, k);
        let w = FInterval::new(
            sub_down(1.0, div_up(k as f64, kk)),
            sub_up(1.0, div_down(k as f64, kk)),
        );
        let two_w = w.mul(&FInterval::point(2.0));
        coeffs.push(Coeff {
            k,
            cos: ck.re.mul(&two_w),
            sin: ck.im.neg().mul(&two_w),
        });
    }
    let slope = rational::to_f64_down(&min_slope(lift));
    if !(slope > 0.0) {
        return Err(PiecewiseError::TrigNotMonotone(slope));
    }
    Ok(TrigLift::assemble(
        lift.degree(),
        c0,
        coeffs,
        slope,
        Some(Smoothing {
            cutoff,
            source: Arc::new(lift.clone()),
        }),
    ))
}

impl MapSpec {
    pub(crate) fn from_periodic(p: &PeriodicLift) -> MapSpec {
        match p.theta_params() {
            Some(t) => MapSpec::Theta {
                j: t.j,
                a: t.a.clone(),
            },
            None => MapSpec::Periodic {
                degree: p.degree(),
                pieces: p.leaves().to_vec(),
            },
        }
    }
}

/// Sup-distance estimate between a lift and its smoothing on a uniform grid.
pub fn smoothing_distance(lift: &PeriodicLift, smooth: &TrigLift, samples: usize) -> f64 {
    let start = lift.start().to_f64().unwrap_or(0.0);
    (0..samples)
        .map(|i| {
            let x = start + i as f64 / samples as f64;
            let exact = lift.eval(&rational::from_f64(x));
            (rational::to_f64(&exact) - smooth.approx(x)).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::{build_theta, PieceTree};
    use crate::rational::{from_f64, rat};
    use proptest::prelude::*;

    #[test]
    fn sincos_known_values() {
        let (s, c) = sincos_turns(FInterval::point(0.0));
        assert!(s.contains(0.0) && c.contains(1.0));
        let (s, c) = sincos_turns(FInterval::point(0.25));
        assert!(s.contains(1.0) && c.lo <= 0.0 && c.hi >= 0.0);
        let (s, _) = sincos_turns(FInterval::from_rational(&rat(1, 12)));
        assert!(s.contains(0.5));
        assert!(s.width() < 1e-15);
    }

    proptest! {
        #[test]
        fn sincos_encloses_libm(t in -50.0f64..50.0) {
            let (s, c) = sincos_turns(FInterval::point(t));
            let (ls, lc) = (std::f64::consts::TAU * t).sin_cos();
            // libm differs from the true value by a few ulps of the argument reduction
            let slack = 1e-13 * (1.0 + t.abs());
            prop_assert!(s.lo - slack <= ls && ls <= s.hi + slack);
            prop_assert!(c.lo - slack <= lc && lc <= c.hi + slack);
            prop_assert!(s.width() < 1e-13 && c.width() < 1e-13);
        }
    }

    #[test]
    fn user_trig_lift_checks_monotonicity() {
        assert!(TrigLift::new(1, int(0), vec![TrigTerm { k: 1, cos: 0.0, sin: 0.01 }]).is_ok());
        assert!(matches!(
            TrigLift::new(1, int(0), vec![TrigTerm { k: 1, cos: 0.0, sin: 0.2 }]),
            Err(PiecewiseError::TrigNotMonotone(_))
        ));
    }

    #[test]
    fn trig_inverse_round_trip() {
        let t = TrigLift::new(1, rat(1, 3), vec![TrigTerm { k: 3, cos: 0.0, sin: -0.05 }]).unwrap();
        for x in [-1.3, 0.0, 0.2, 0.77, 5.5] {
            let y = t.approx(x);
            assert!((t.inverse_approx(y) - x).abs() < 1e-13);
            assert!(t.enclose(x).contains(y) || (t.enclose(x).mid() - y).abs() < 1e-14);
        }
    }

    #[test]
    fn smoothing_constant_term_and_convergence() {
        let PieceTree::Periodic(t2) = build_theta(2, rat(1, 10)).unwrap() else {
            unreachable!()
        };
        let coarse = fourier_smooth(&t2, 50).unwrap();
        let fine = fourier_smooth(&t2, 800).unwrap();
        let d_coarse = smoothing_distance(&t2, &coarse, 400);
        let d_fine = smoothing_distance(&t2, &fine, 400);
        assert!(d_fine < d_coarse);
        assert!(d_fine < 0.05, "distance {d_fine}");
        assert!(fine.slope_lower_bound() > 0.0);
        // equivariance
        for x in [0.1, 0.33, 0.9] {
            let d = fine.approx(x + 1.0) - fine.approx(x);
            assert!((d - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coefficient_matches_quadrature() {
        // oracle: composite Simpson quadrature of φ(x) cos(2πkx)
        let PieceTree::Periodic(t3) = build_theta(3, rat(1, 10)).unwrap() else {
            unreachable!()
        };
        let n = 20000;
        let start = -0.05;
        for k in [1u32, 2, 7] {
            let phi = |x: f64| rational::to_f64(&t3.eval(&from_f64(x))) - 3.0 * x;
            let mut re = 0.0;
            let mut im = 0.0;
            let h = 1.0 / n as f64;
            for i in 0..=n {
                let x = start + i as f64 * h;
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                let (s, c) = (std::f64::consts::TAU * k as f64 * x).sin_cos();
                re += w * phi(x) * c;
                im -= w * phi(x) * s;
            }
            re *= h / 3.0;
            im *= h / 3.0;
            let got = fourier_coefficient(&t3, k);
            assert!((got.re.mid() - re).abs() < 1e-8, "k={k}: {} vs {re}", got.re.mid());
            assert!((got.im.mid() - im).abs() < 1e-8, "k={k}: {} vs {im}", got.im.mid());
            assert!(got.re.width() < 1e-12);
        }
    }
}
