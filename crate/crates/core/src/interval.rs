//! Outward-rounded float intervals and exact rational intervals.
//!
//! Float operations are evaluated in round-to-nearest and the exact error term
//! (TwoSum / FMA residual) decides whether the bound must move one ulp
//! outward, so exact operations stay tight.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rational::{self, Rational};

#[inline]
fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

/// Below the normal range the FMA residual is no longer exact, so results
/// there are widened by one step unconditionally.
#[inline]
fn tiny(x: f64) -> bool {
    x.abs() < f64::MIN_POSITIVE
}

#[inline]
pub fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s.is_finite() && two_sum_err(a, b, s) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

#[inline]
pub fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s.is_finite() && two_sum_err(a, b, s) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

#[inline]
pub fn sub_down(a: f64, b: f64) -> f64 {
    add_down(a, -b)
}

#[inline]
pub fn sub_up(a: f64, b: f64) -> f64 {
    add_up(a, -b)
}

#[inline]
pub fn mul_down(a: f64, b: f64) -> f64 {
    let p = a * b;
    if tiny(p) && a != 0.0 && b != 0.0 {
        return p.next_down();
    }
    if p.is_finite() && a.mul_add(b, -p) < 0.0 {
        p.next_down()
    } else {
        p
    }
}

#[inline]
pub fn mul_up(a: f64, b: f64) -> f64 {
    let p = a * b;
    if tiny(p) && a != 0.0 && b != 0.0 {
        return p.next_up();
    }
    if p.is_finite() && a.mul_add(b, -p) > 0.0 {
        p.next_up()
    } else {
        p
    }
}

#[inline]
pub fn div_down(a: f64, b: f64) -> f64 {
    let q = a / b;
    if !q.is_finite() {
        return q;
    }
    if tiny(q) && a != 0.0 {
        return q.next_down();
    }
    // a - q*b is exact; its sign times sign(b) is the sign of a/b - q.
    let r = (-q).mul_add(b, a);
    if r * b.signum() < 0.0 {
        q.next_down()
    } else {
        q
    }
}

#[inline]
pub fn div_up(a: f64, b: f64) -> f64 {
    let q = a / b;
    if !q.is_finite() {
        return q;
    }
    if tiny(q) && a != 0.0 {
        return q.next_up();
    }
    let r = (-q).mul_add(b, a);
    if r * b.signum() > 0.0 {
        q.next_up()
    } else {
        q
    }
}

/// Closed float interval `[lo, hi]` with rigorous outward rounding.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FInterval {
    pub lo: f64,
    pub hi: f64,
}

impl FInterval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        FInterval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        FInterval { lo: x, hi: x }
    }

    /// Tightest float enclosure of a rational.
    pub fn from_rational(r: &Rational) -> Self {
        FInterval {
            lo: rational::to_f64_down(r),
            hi: rational::to_f64_up(r),
        }
    }

    pub fn from_rationals(lo: &Rational, hi: &Rational) -> Self {
        FInterval {
            lo: rational::to_f64_down(lo),
            hi: rational::to_f64_up(hi),
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, o: &FInterval) -> bool {
        self.lo <= o.lo && o.hi <= self.hi
    }

    pub fn hull(&self, o: &FInterval) -> FInterval {
        FInterval::new(self.lo.min(o.lo), self.hi.max(o.hi))
    }

    pub fn add(&self, o: &FInterval) -> FInterval {
        FInterval::new(add_down(self.lo, o.lo), add_up(self.hi, o.hi))
    }

    pub fn sub(&self, o: &FInterval) -> FInterval {
        FInterval::new(sub_down(self.lo, o.hi), sub_up(self.hi, o.lo))
    }

    pub fn neg(&self) -> FInterval {
        FInterval::new(-self.hi, -self.lo)
    }

    pub fn add_f(&self, c: f64) -> FInterval {
        FInterval::new(add_down(self.lo, c), add_up(self.hi, c))
    }

    pub fn mul(&self, o: &FInterval) -> FInterval {
        let (a, b, c, d) = (self.lo, self.hi, o.lo, o.hi);
        if a >= 0.0 && c >= 0.0 {
            return FInterval::new(mul_down(a, c), mul_up(b, d));
        }
        let lo = mul_down(a, c)
            .min(mul_down(a, d))
            .min(mul_down(b, c))
            .min(mul_down(b, d));
        let hi = mul_up(a, c).max(mul_up(a, d)).max(mul_up(b, c)).max(mul_up(b, d));
        FInterval::new(lo, hi)
    }

    /// Division by an interval that does not contain zero.
    pub fn div(&self, o: &FInterval) -> FInterval {
        assert!(o.lo > 0.0 || o.hi < 0.0, "division by interval containing zero");
        let (a, b, c, d) = (self.lo, self.hi, o.lo, o.hi);
        let lo = div_down(a, c)
            .min(div_down(a, d))
            .min(div_down(b, c))
            .min(div_down(b, d));
        let hi = div_up(a, c).max(div_up(a, d)).max(div_up(b, c)).max(div_up(b, d));
        FInterval::new(lo, hi)
    }

    pub fn abs_max(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }
}

impl fmt::Display for FInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.17e}, {:.17e}]", self.lo, self.hi)
    }
}

/// Closed interval with exact rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RInterval {
    pub lo: Rational,
    pub hi: Rational,
}

impl RInterval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        debug_assert!(lo <= hi);
        RInterval { lo, hi }
    }

    pub fn point(x: Rational) -> Self {
        RInterval { lo: x.clone(), hi: x }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn add_scalar(&self, c: &Rational) -> RInterval {
        RInterval::new(&self.lo + c, &self.hi + c)
    }

    pub fn to_float(&self) -> FInterval {
        FInterval::from_rationals(&self.lo, &self.hi)
    }
}

/// Either a float enclosure or an exact rational enclosure.
#[derive(Clone, Debug, PartialEq)]
pub enum RigorousInterval {
    Float(FInterval),
    Exact(RInterval),
}

impl RigorousInterval {
    pub fn lower_f64(&self) -> f64 {
        match self {
            RigorousInterval::Float(i) => i.lo,
            RigorousInterval::Exact(r) => rational::to_f64_down(&r.lo),
        }
    }

    pub fn upper_f64(&self) -> f64 {
        match self {
            RigorousInterval::Float(i) => i.hi,
            RigorousInterval::Exact(r) => rational::to_f64_up(&r.hi),
        }
    }

    pub fn to_float(&self) -> FInterval {
        match self {
            RigorousInterval::Float(i) => *i,
            RigorousInterval::Exact(r) => r.to_float(),
        }
    }

    /// Exact rational bounds (float endpoints are converted exactly).
    pub fn to_exact(&self) -> RInterval {
        match self {
            RigorousInterval::Float(i) => {
                RInterval::new(rational::from_f64(i.lo), rational::from_f64(i.hi))
            }
            RigorousInterval::Exact(r) => r.clone(),
        }
    }
}

/// JSON form of one enclosure endpoint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endpoint {
    pub value: String,
    pub rounding: String,
}

/// JSON form of an enclosure: decimal strings tagged with their rounding direction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnclosureJson {
    pub lower: Endpoint,
    pub upper: Endpoint,
}

/// Seventeen significant digits always identify a binary64 value.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl From<&RigorousInterval> for EnclosureJson {
    fn from(r: &RigorousInterval) -> Self {
        match r {
            RigorousInterval::Float(i) => EnclosureJson {
                lower: Endpoint {
                    value: format_f64(i.lo),
                    rounding: "down".into(),
                },
                upper: Endpoint {
                    value: format_f64(i.hi),
                    rounding: "up".into(),
                },
            },
            RigorousInterval::Exact(r) => EnclosureJson {
                lower: Endpoint {
                    value: rational::format_rational(&r.lo),
                    rounding: "exact".into(),
                },
                upper: Endpoint {
                    value: rational::format_rational(&r.hi),
                    rounding: "exact".into(),
                },
            },
        }
    }
}

impl TryFrom<&EnclosureJson> for RigorousInterval {
    type Error = rational::ParseRationalError;

    fn try_from(e: &EnclosureJson) -> Result<Self, Self::Error> {
        if e.lower.rounding == "exact" && e.upper.rounding == "exact" {
            Ok(RigorousInterval::Exact(RInterval::new(
                rational::parse_rational(&e.lower.value)?,
                rational::parse_rational(&e.upper.value)?,
            )))
        } else {
            let p = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| rational::ParseRationalError(s.to_string()))
            };
            Ok(RigorousInterval::Float(FInterval::new(
                p(&e.lower.value)?,
                p(&e.upper.value)?,
            )))
        }
    }
}

impl Serialize for RigorousInterval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        EnclosureJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for RigorousInterval {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let e = EnclosureJson::deserialize(d)?;
        RigorousInterval::try_from(&e).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{from_f64, rat};
    use proptest::prelude::*;

    #[test]
    fn exact_operations_stay_tight() {
        let x = FInterval::new(-1.0, 1.0);
        let three = FInterval::point(3.0);
        assert_eq!(x.mul(&three), FInterval::new(-3.0, 3.0));
        assert_eq!(FInterval::point(0.5).add(&FInterval::point(0.25)), FInterval::point(0.75));
    }

    #[test]
    fn tenth_is_bracketed() {
        let t = FInterval::from_rational(&rat(1, 10));
        assert!(t.lo < t.hi);
        assert!(from_f64(t.lo) < rat(1, 10) && rat(1, 10) < from_f64(t.hi));
    }

    proptest! {
        #[test]
        fn directed_ops_enclose_exact_result(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let (ra, rb) = (from_f64(a), from_f64(b));
            prop_assert!(from_f64(add_down(a, b)) <= &ra + &rb);
            prop_assert!(from_f64(add_up(a, b)) >= &ra + &rb);
            prop_assert!(from_f64(mul_down(a, b)) <= &ra * &rb);
            prop_assert!(from_f64(mul_up(a, b)) >= &ra * &rb);
            if b != 0.0 {
                prop_assert!(from_f64(div_down(a, b)) <= &ra / &rb);
                prop_assert!(from_f64(div_up(a, b)) >= &ra / &rb);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let f = RigorousInterval::Float(FInterval::new(0.1f64.next_down(), 0.1));
        let back: RigorousInterval =
            serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
        let e = RigorousInterval::Exact(RInterval::new(rat(1, 3), rat(1, 2)));
        let back: RigorousInterval =
            serde_json::from_str(&serde_json::to_string(&e).unwrap()).unwrap();
        assert_eq!(back, e);
    }
}
