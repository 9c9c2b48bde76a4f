//! The faithful BS(m,n) action on the line and its ping-pong certificates.
//!
//! `g_n = Θ_n`, `g_m(x) = Θ_m(x − 1/2) + 1/2`, `g = g_n ∘ g_m⁻¹` and
//! `h(x) = x + 1` satisfy `g h^m g⁻¹ = h^n`. Seven inclusions between integer
//! translates of the intervals `A, B, C, C₂` drive an induction showing that
//! every pinch-free word moves a point of `C ∩ C₂`.

mod sweep;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::interval::{add_down, add_up, FInterval, RInterval, RigorousInterval};
use crate::piecewise::{self, build_theta, compose, invert, FloatMap, MapSpec, PieceTree, PiecewiseError};
use crate::rational::{self, int, rat, serde_rational, Rational};
use crate::words::{BSWord, Syllable};

pub use sweep::{faithfulness_sweep, SweepReport, SweepWitness};

/// Enclosures closer than this to a set boundary are never called Inside.
pub const MEMBERSHIP_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ActionError {
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("relation g h^m g^-1 = h^n fails: residual {residual:e} at x = {at}")]
    Relation { residual: f64, at: f64 },
    #[error("evaluation: {0}")]
    Eval(#[from] PiecewiseError),
    #[error("no sign change of g(mk) - mk for |k| <= {0}")]
    SearchBound(i64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rational,
    #[default]
    Float,
}

/// Closed interval with rational endpoints, serialized as `["p/q", "p/q"]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatInterval(
    #[serde(with = "serde_rational")] pub Rational,
    #[serde(with = "serde_rational")] pub Rational,
);

impl RatInterval {
    fn shift(&self, s: &Rational) -> RatInterval {
        RatInterval(&self.0 + s, &self.1 + s)
    }

    pub fn to_r(&self) -> RInterval {
        RInterval::new(self.0.clone(), self.1.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intervals {
    #[serde(rename = "A")]
    pub a_full: RatInterval,
    #[serde(rename = "A^s")]
    pub a_s: RatInterval,
    #[serde(rename = "A^u")]
    pub a_u: RatInterval,
    #[serde(rename = "B")]
    pub b_full: RatInterval,
    #[serde(rename = "B^s")]
    pub b_s: RatInterval,
    #[serde(rename = "B^u")]
    pub b_u: RatInterval,
    #[serde(rename = "C")]
    pub c: RatInterval,
    #[serde(rename = "C2")]
    pub c2: RatInterval,
}

impl Intervals {
    pub fn new(a: &Rational) -> Self {
        let half = rat(1, 2);
        let zero = int(0);
        let a_full = RatInterval(-a.clone(), a.clone());
        let a_s = RatInterval(-a.clone(), zero.clone());
        let a_u = RatInterval(zero, a.clone());
        let c = RatInterval(a.clone(), int(1) - a);
        Intervals {
            b_full: a_full.shift(&half),
            b_s: a_s.shift(&half),
            b_u: a_u.shift(&half),
            c2: c.shift(&half),
            a_full,
            a_s,
            a_u,
            c,
        }
    }

    /// Interior of `C ∩ C₂`, if nonempty.
    pub fn start_region(&self) -> Option<(Rational, Rational)> {
        let lo = (&self.c.0).max(&self.c2.0).clone();
        let hi = (&self.c.1).min(&self.c2.1).clone();
        (lo < hi).then_some((lo, hi))
    }
}

/// A set `S + dZ` used in membership tags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    #[serde(rename = "A^s+nZ")]
    AsNZ,
    #[serde(rename = "B^s+mZ")]
    BsMZ,
    #[serde(rename = "A^u+Z")]
    AuZ,
    #[serde(rename = "B^u+Z")]
    BuZ,
    #[serde(rename = "A+Z")]
    AZ,
    #[serde(rename = "B+Z")]
    BZ,
}

impl std::fmt::Display for Tag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Tag::AsNZ => "A^s+nZ",
            Tag::BsMZ => "B^s+mZ",
            Tag::AuZ => "A^u+Z",
            Tag::BuZ => "B^u+Z",
            Tag::AZ => "A+Z",
            Tag::BZ => "B+Z",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    Inside,
    Outside,
    Inconclusive,
}

/// A periodic set `[lo, hi] + period·Z` with precomputed float bounds.
#[derive(Clone, Debug)]
pub struct LatticeSet {
    pub base: RatInterval,
    pub period: i64,
    lo: FInterval,
    hi: FInterval,
}

impl LatticeSet {
    pub fn new(base: RatInterval, period: i64) -> Self {
        LatticeSet {
            lo: FInterval::from_rational(&base.0),
            hi: FInterval::from_rational(&base.1),
            base,
            period,
        }
    }

    pub fn classify_float(&self, x: &FInterval) -> Membership {
        let d = self.period as f64;
        let k = ((x.lo - self.lo.mid()) / d).floor();
        let shift = d * k;
        let left = add_up(add_up(self.lo.hi, shift), MEMBERSHIP_MARGIN);
        let right = add_down(add_down(self.hi.lo, shift), -MEMBERSHIP_MARGIN);
        if x.lo >= left && x.hi <= right {
            return Membership::Inside;
        }
        // x strictly inside the gap (hi + dk, lo + d(k+1))?
        let gap_lo = add_up(add_up(self.hi.hi, shift), MEMBERSHIP_MARGIN);
        let gap_hi = add_down(add_down(self.lo.lo, shift + d), -MEMBERSHIP_MARGIN);
        if x.lo >= gap_lo && x.hi <= gap_hi {
            return Membership::Outside;
        }
        Membership::Inconclusive
    }

    pub fn classify_exact(&self, x: &RInterval) -> Membership {
        let margin = margin_rational();
        let d = int(self.period);
        let k = Rational::from_integer(rational::floor_int(&((&x.lo - &self.base.0) / &d)));
        let shift = &d * &k;
        if x.lo >= &self.base.0 + &shift + &margin && x.hi <= &self.base.1 + &shift - &margin {
            return Membership::Inside;
        }
        if x.lo >= &self.base.1 + &shift + &margin && x.hi <= &self.base.0 + &shift + &d - &margin {
            return Membership::Outside;
        }
        Membership::Inconclusive
    }

    pub fn classify(&self, x: &RigorousInterval) -> Membership {
        match x {
            RigorousInterval::Float(f) => self.classify_float(f),
            RigorousInterval::Exact(r) => self.classify_exact(r),
        }
    }

    /// Lower bound on the distance from `x` to the set.
    pub fn distance_from(&self, x: f64) -> f64 {
        let d = self.period as f64;
        let (lo, hi) = (self.lo.lo, self.hi.hi);
        let k = ((x - lo) / d).floor();
        let below = x - (hi + d * k);
        let above = (lo + d * (k + 1.0)) - x;
        if x >= lo + d * k && x <= hi + d * k {
            0.0
        } else {
            below.min(above).max(0.0)
        }
    }
}

fn margin_rational() -> Rational {
    rational::parse_rational("1e-12").unwrap()
}

/// The action's maps, as trees and compiled float evaluators.
#[derive(Clone, Debug)]
pub struct BSAction {
    pub m: i64,
    pub n: i64,
    pub a: Rational,
    pub fourier_cutoff: Option<usize>,
    pub g_n: PieceTree,
    pub g_m: PieceTree,
    pub g: PieceTree,
    pub h: PieceTree,
    pub intervals: Intervals,
    pub(crate) f_gn: FloatMap,
    pub(crate) f_gm: FloatMap,
    pub(crate) f_gn_inv: FloatMap,
    pub(crate) f_gm_inv: FloatMap,
    pub(crate) f_g: FloatMap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub m: i64,
    pub n: i64,
    #[serde(with = "serde_rational")]
    pub a: Rational,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourier_cutoff: Option<usize>,
    pub g_n: MapSpec,
    pub g_m: MapSpec,
    pub g: MapSpec,
    pub h: MapSpec,
    pub intervals: Intervals,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub samples: usize,
    /// sup of |g(h^m x) − h^n(g x)| over float enclosure midpoints
    pub sup_residual_float: f64,
    /// rigorous upper bound of the same sup
    pub sup_residual_bound: f64,
    pub exact_points: usize,
    pub exact_nonzero: usize,
}

fn check_mn(m: i64, n: i64) -> Result<(), ActionError> {
    if !(1 <= m && m < n) {
        return Err(ActionError::Precondition(format!(
            "need 1 <= m < n, got m = {m}, n = {n}"
        )));
    }
    Ok(())
}

/// The action with `a = 1/10`; relation and degrees are checked before returning.
pub fn build_action(m: i64, n: i64) -> Result<BSAction, ActionError> {
    build_action_with(m, n, rat(1, 10), None)
}

pub fn build_action_with(
    m: i64,
    n: i64,
    a: Rational,
    fourier_cutoff: Option<usize>,
) -> Result<BSAction, ActionError> {
    check_mn(m, n)?;
    let mut theta_n = build_theta(n, a.clone())?;
    let mut theta_m = build_theta(m, a.clone())?;
    if let Some(k) = fourier_cutoff {
        theta_n = smooth(&theta_n, k)?;
        theta_m = smooth(&theta_m, k)?;
    }
    let g_m = PieceTree::translate_conjugate(rat(1, 2), theta_m);
    let act = BSAction::from_maps(m, n, a, fourier_cutoff, theta_n, g_m)?;
    act.check_degrees()?;
    act.relation_check(1000)?;
    Ok(act)
}

fn smooth(t: &PieceTree, cutoff: usize) -> Result<PieceTree, ActionError> {
    match t {
        PieceTree::Periodic(p) => Ok(PieceTree::Trig(std::sync::Arc::new(
            piecewise::fourier_smooth(p, cutoff)?,
        ))),
        _ => Err(ActionError::Precondition("smoothing needs a periodic lift".into())),
    }
}

impl BSAction {
    pub fn from_maps(
        m: i64,
        n: i64,
        a: Rational,
        fourier_cutoff: Option<usize>,
        g_n: PieceTree,
        g_m: PieceTree,
    ) -> Result<Self, ActionError> {
        check_mn(m, n)?;
        let g = compose(&g_n, &invert(&g_m));
        let h = PieceTree::translation(int(1));
        Ok(BSAction {
            m,
            n,
            intervals: Intervals::new(&a),
            a,
            fourier_cutoff,
            f_gn: g_n.compile(),
            f_gm: g_m.compile(),
            f_gn_inv: invert(&g_n).compile(),
            f_gm_inv: invert(&g_m).compile(),
            f_g: g.compile(),
            g_n,
            g_m,
            g,
            h,
        })
    }

    pub fn to_spec(&self) -> ActionSpec {
        ActionSpec {
            m: self.m,
            n: self.n,
            a: self.a.clone(),
            fourier_cutoff: self.fourier_cutoff,
            g_n: self.g_n.to_spec(),
            g_m: self.g_m.to_spec(),
            g: self.g.to_spec(),
            h: self.h.to_spec(),
            intervals: self.intervals.clone(),
        }
    }

    /// Rebuilds from stored `g_n` and `g_m`; `g` and `h` are re-derived.
    pub fn from_spec(spec: &ActionSpec) -> Result<Self, ActionError> {
        let g_n = PieceTree::from_spec(&spec.g_n)?;
        let g_m = PieceTree::from_spec(&spec.g_m)?;
        let act = BSAction::from_maps(spec.m, spec.n, spec.a.clone(), spec.fourier_cutoff, g_n, g_m)?;
        if act.intervals != spec.intervals {
            return Err(ActionError::Precondition(
                "stored intervals do not match the parameter a".into(),
            ));
        }
        Ok(act)
    }

    fn check_degrees(&self) -> Result<(), ActionError> {
        if self.g_n.degree() != Some(self.n) || self.g_m.degree() != Some(self.m) {
            return Err(ActionError::Precondition(format!(
                "degrees {:?}, {:?} do not match (n, m) = ({}, {})",
                self.g_n.degree(),
                self.g_m.degree(),
                self.n,
                self.m
            )));
        }
        Ok(())
    }

    /// Float tolerance for the relation residual: 1e-12 for piecewise maps,
    /// looser for trigonometric sums whose rounding grows with the cutoff.
    pub fn relation_tolerance(&self) -> f64 {
        if self.g.has_trig() {
            1e-9
        } else {
            1e-12
        }
    }

    /// Residual of `g h^m g⁻¹ = h^n`, tested as `g(x + m) = g(x) + n` on
    /// `samples` evenly spaced rationals in `[0, 3]`. Fails if the two
    /// enclosures are disjoint or their midpoints differ beyond tolerance.
    pub fn relation_check(&self, samples: usize) -> Result<RelationReport, ActionError> {
        let mut report = RelationReport {
            samples,
            sup_residual_float: 0.0,
            sup_residual_bound: 0.0,
            exact_points: 0,
            exact_nonzero: 0,
        };
        let (mf, nf) = (self.m as f64, self.n as f64);
        for i in 0..samples {
            let x = rat(3 * i as i64, samples.max(1) as i64);
            let xf = FInterval::from_rational(&x);
            let left = self.f_g.eval_interval(&xf.add_f(mf))?;
            let right = self.f_g.eval_interval(&xf)?.add_f(nf);
            let diff = (left.mid() - right.mid()).abs();
            let bound = (left.hi - right.lo).abs().max((right.hi - left.lo).abs());
            report.sup_residual_float = report.sup_residual_float.max(diff);
            report.sup_residual_bound = report.sup_residual_bound.max(bound);
            if diff > self.relation_tolerance() || left.hi < right.lo || right.hi < left.lo {
                return Err(ActionError::Relation {
                    residual: diff,
                    at: xf.mid(),
                });
            }
        }
        Ok(report)
    }

    /// Exact-mode relation check. Points whose evaluation stays rational on
    /// both sides are compared exactly; the rest (cubic preimages on the path)
    /// fall back to outward-rounded float enclosures, which must overlap.
    pub fn relation_check_exact(&self, samples: usize) -> Result<RelationReport, ActionError> {
        let mut report = RelationReport {
            samples,
            sup_residual_float: 0.0,
            sup_residual_bound: 0.0,
            exact_points: 0,
            exact_nonzero: 0,
        };
        let ev = self.g.exact();
        for i in 0..samples {
            let x = rat(3 * i as i64, samples.max(1) as i64);
            let left = ev.eval_rational(&(&x + int(self.m)))?;
            let right = ev.eval_rational(&x)?;
            if let (Some(l), Some(r)) = (left, right) {
                report.exact_points += 1;
                if l != r + int(self.n) {
                    report.exact_nonzero += 1;
                }
                continue;
            }
            let xf = FInterval::from_rational(&x);
            let l = self.f_g.eval_interval(&xf.add_f(self.m as f64))?;
            let r = self.f_g.eval_interval(&xf)?.add_f(self.n as f64);
            if l.hi < r.lo || r.hi < l.lo {
                report.exact_nonzero += 1;
            }
            report.sup_residual_bound = report.sup_residual_bound.max(l.hi.max(r.hi) - l.lo.min(r.lo));
        }
        Ok(report)
    }

    pub fn lattice(&self, tag: Tag) -> LatticeSet {
        let iv = &self.intervals;
        match tag {
            Tag::AsNZ => LatticeSet::new(iv.a_s.clone(), self.n),
            Tag::BsMZ => LatticeSet::new(iv.b_s.clone(), self.m),
            Tag::AuZ => LatticeSet::new(iv.a_u.clone(), 1),
            Tag::BuZ => LatticeSet::new(iv.b_u.clone(), 1),
            Tag::AZ => LatticeSet::new(iv.a_full.clone(), 1),
            Tag::BZ => LatticeSet::new(iv.b_full.clone(), 1),
        }
    }

    fn apply(&self, which: MapId, x: &RigorousInterval) -> Result<RigorousInterval, ActionError> {
        Ok(match x {
            RigorousInterval::Float(f) => RigorousInterval::Float(match which {
                MapId::Gn => self.f_gn.eval_interval(f)?,
                MapId::Gm => self.f_gm.eval_interval(f)?,
                MapId::GnInv => self.f_gn_inv.eval_interval(f)?,
                MapId::GmInv => self.f_gm_inv.eval_interval(f)?,
            }),
            RigorousInterval::Exact(r) => RigorousInterval::Exact(match which {
                MapId::Gn => self.g_n.exact().eval_interval(r)?,
                MapId::Gm => self.g_m.exact().eval_interval(r)?,
                MapId::GnInv => self.g_n.exact().inverse_interval(r)?,
                MapId::GmInv => self.g_m.exact().inverse_interval(r)?,
            }),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapId {
    #[serde(rename = "g_n")]
    Gn,
    #[serde(rename = "g_m")]
    Gm,
    #[serde(rename = "g_n^-1")]
    GnInv,
    #[serde(rename = "g_m^-1")]
    GmInv,
}

fn lift_interval(r: &RatInterval, mode: Mode) -> RigorousInterval {
    match mode {
        Mode::Float => RigorousInterval::Float(FInterval::from_rationals(&r.0, &r.1)),
        Mode::Rational => RigorousInterval::Exact(r.to_r()),
    }
}

fn translate(x: &RigorousInterval, r: &BigInt) -> RigorousInterval {
    match x {
        RigorousInterval::Float(f) => {
            let rr = FInterval::from_rational(&Rational::from_integer(r.clone()));
            RigorousInterval::Float(f.add(&rr))
        }
        RigorousInterval::Exact(e) => {
            RigorousInterval::Exact(e.add_scalar(&Rational::from_integer(r.clone())))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionCheck {
    /// integer translate `k` of the source interval
    pub shift: i64,
    pub source: RatInterval,
    pub image: RigorousInterval,
    pub target: Tag,
    pub verdict: Membership,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionFact {
    pub id: u8,
    pub statement: String,
    pub map: MapId,
    pub checks: Vec<InclusionCheck>,
    pub verdict: Membership,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PingPongTable {
    pub m: i64,
    pub n: i64,
    #[serde(with = "serde_rational")]
    pub a: Rational,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourier_cutoff: Option<usize>,
    pub mode: Mode,
    pub intervals: Intervals,
    pub inclusions: Vec<InclusionFact>,
    pub verified: bool,
}

impl PingPongTable {
    pub fn first_failure(&self) -> Option<(&InclusionFact, &InclusionCheck)> {
        self.inclusions.iter().find_map(|f| {
            f.checks
                .iter()
                .find(|c| c.verdict != Membership::Inside)
                .map(|c| (f, c))
        })
    }
}

/// Checks the seven inclusions. By equivariance (`g_j(x + 1) = g_j(x) + j`)
/// a forward image needs only the translate `k = 0`, and a preimage needs
/// `k = 0, …, deg − 1`, skipping multiples of the degree where excluded.
pub fn verify_inclusions(act: &BSAction, mode: Mode) -> Result<PingPongTable, ActionError> {
    let iv = &act.intervals;
    let (m, n) = (act.m, act.n);
    struct Spec {
        id: u8,
        statement: &'static str,
        map: MapId,
        source: RatInterval,
        shifts: Vec<i64>,
        target: Tag,
    }
    let specs = vec![
        Spec {
            id: 1,
            statement: "g_n^-1(A + k) ⊂ A^u + Z for k ∉ nZ",
            map: MapId::GnInv,
            source: iv.a_full.clone(),
            shifts: (1..n).collect(),
            target: Tag::AuZ,
        },
        Spec {
            id: 2,
            statement: "g_m^-1(C2 + Z) ⊂ B^u + Z",
            map: MapId::GmInv,
            source: iv.c2.clone(),
            shifts: (0..m).collect(),
            target: Tag::BuZ,
        },
        Spec {
            id: 3,
            statement: "g_m^-1(B + k) ⊂ B^u + Z for k ∉ mZ",
            map: MapId::GmInv,
            source: iv.b_full.clone(),
            shifts: (1..m).collect(),
            target: Tag::BuZ,
        },
        Spec {
            id: 4,
            statement: "g_n(B + Z) ⊂ A^s + nZ",
            map: MapId::Gn,
            source: iv.b_full.clone(),
            shifts: vec![0],
            target: Tag::AsNZ,
        },
        Spec {
            id: 5,
            statement: "g_n^-1(B + Z) ⊂ A^u + Z",
            map: MapId::GnInv,
            source: iv.b_full.clone(),
            shifts: (0..n).collect(),
            target: Tag::AuZ,
        },
        Spec {
            id: 6,
            statement: "g_m(A + Z) ⊂ B^s + mZ",
            map: MapId::Gm,
            source: iv.a_full.clone(),
            shifts: vec![0],
            target: Tag::BsMZ,
        },
        Spec {
            id: 7,
            statement: "g_m^-1(A + Z) ⊂ B^u + Z",
            map: MapId::GmInv,
            source: iv.a_full.clone(),
            shifts: (0..m).collect(),
            target: Tag::BuZ,
        },
    ];
    let mut inclusions = Vec::with_capacity(7);
    for s in specs {
        let set = act.lattice(s.target);
        let mut checks = Vec::new();
        for k in s.shifts {
            let src = s.source.shift(&int(k));
            let image = act.apply(s.map, &lift_interval(&src, mode))?;
            let verdict = set.classify(&image);
            checks.push(InclusionCheck {
                shift: k,
                source: src,
                image,
                target: s.target,
                verdict,
            });
        }
        let verdict = if checks.iter().all(|c| c.verdict == Membership::Inside) {
            Membership::Inside
        } else if checks.iter().any(|c| c.verdict == Membership::Inconclusive) {
            Membership::Inconclusive
        } else {
            Membership::Outside
        };
        inclusions.push(InclusionFact {
            id: s.id,
            statement: s.statement.into(),
            map: s.map,
            checks,
            verdict,
        });
    }
    let verified = inclusions.iter().all(|f| f.verdict == Membership::Inside);
    Ok(PingPongTable {
        m,
        n,
        a: act.a.clone(),
        fourier_cutoff: act.fourier_cutoff,
        mode,
        intervals: iv.clone(),
        inclusions,
        verified,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertStep {
    /// syllable of the conjugated word being applied
    pub syllable: String,
    /// `h^r`, `g_m^-1`, `g_n`, `g_n^-1` or `g_m`
    pub map: String,
    pub enclosure: RigorousInterval,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tag: Option<Tag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub membership: Option<Membership>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum CertVerdict {
    Nontrivial {
        #[serde(skip_serializing_if = "Option::is_none")]
        final_tag: Option<Tag>,
        /// lower bound on |α(x₀) − x₀|
        displacement_lower_bound: f64,
    },
    Inconclusive {
        step: usize,
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub word: BSWord,
    /// the word conjugated so that its leading a-power is absorbed
    pub conjugated: BSWord,
    #[serde(with = "serde_rational")]
    pub x0: Rational,
    pub mode: Mode,
    pub steps: Vec<CertStep>,
    pub result: CertVerdict,
}

impl Certificate {
    pub fn is_nontrivial(&self) -> bool {
        matches!(self.result, CertVerdict::Nontrivial { .. })
    }

    pub fn final_tag(&self) -> Option<Tag> {
        match self.result {
            CertVerdict::Nontrivial { final_tag, .. } => final_tag,
            _ => None,
        }
    }
}

/// Moves a leading `a^{r}` to the end: `a^{-r} w a^{r}`.
pub fn conjugate_to_standard(w: &BSWord) -> BSWord {
    let mut s = w.merged().syllables;
    if s.iter().any(|x| matches!(x, Syllable::T(_))) {
        if let Some(Syllable::A(r)) = s.first().cloned() {
            s.remove(0);
            match s.last_mut() {
                Some(Syllable::A(last)) => {
                    *last += r;
                    if last.is_zero() {
                        s.pop();
                    }
                }
                _ => s.push(Syllable::A(r)),
            }
        }
    }
    BSWord {
        m: w.m,
        n: w.n,
        syllables: s,
    }
}

pub fn default_x0() -> Rational {
    rat(3, 4)
}

/// Replays the ping-pong induction on `x0` for a pinch-free word.
pub fn certify_word(act: &BSAction, w: &BSWord, x0: &Rational, mode: Mode) -> Result<Certificate, ActionError> {
    if w.m != act.m || w.n != act.n {
        return Err(ActionError::Precondition(format!(
            "word is in BS({},{}) but the action is for BS({},{})",
            w.m, w.n, act.m, act.n
        )));
    }
    if !w.is_pinch_free() {
        return Err(ActionError::Precondition(format!("word {w} contains a pinch")));
    }
    let (lo, hi) = act
        .intervals
        .start_region()
        .ok_or_else(|| ActionError::Precondition("C ∩ C2 is empty".into()))?;
    if !(lo < *x0 && *x0 < hi) {
        return Err(ActionError::Precondition(format!(
            "x0 = {} is outside the interior of C ∩ C2 = ({}, {})",
            rational::format_rational(x0),
            rational::format_rational(&lo),
            rational::format_rational(&hi)
        )));
    }
    let conj = conjugate_to_standard(w);
    let start = match mode {
        Mode::Float => RigorousInterval::Float(FInterval::from_rational(x0)),
        Mode::Rational => RigorousInterval::Exact(RInterval::point(x0.clone())),
    };
    let mut steps = Vec::new();
    let mut cur = start;
    let mut pending_shift = BigInt::zero();
    let mut last_tag = None;
    let x0f = rational::to_f64(x0);
    let inconclusive = |steps: Vec<CertStep>, reason: String| -> Certificate {
        Certificate {
            word: w.clone(),
            conjugated: conj.clone(),
            x0: x0.clone(),
            mode,
            result: CertVerdict::Inconclusive {
                step: steps.len(),
                reason,
            },
            steps,
        }
    };
    if conj.t_count() == 0 {
        let r = conj.a_total();
        let img = translate(&cur, &r);
        steps.push(CertStep {
            syllable: format!("a^{r}"),
            map: format!("h^{r}"),
            enclosure: img,
            tag: None,
            membership: None,
        });
        if r.is_zero() {
            return Ok(inconclusive(steps, "the identity word does not move any point".into()));
        }
        let disp = r.abs().to_f64().unwrap_or(f64::INFINITY);
        return Ok(Certificate {
            word: w.clone(),
            conjugated: conj.clone(),
            x0: x0.clone(),
            mode,
            steps,
            result: CertVerdict::Nontrivial {
                final_tag: None,
                displacement_lower_bound: disp,
            },
        });
    }
    // apply right to left
    for syl in conj.syllables.iter().rev() {
        match syl {
            Syllable::A(r) => pending_shift += r,
            Syllable::T(e) => {
                if !pending_shift.is_zero() {
                    cur = translate(&cur, &pending_shift);
                    steps.push(CertStep {
                        syllable: format!("a^{pending_shift}"),
                        map: format!("h^{pending_shift}"),
                        enclosure: cur.clone(),
                        tag: None,
                        membership: None,
                    });
                    pending_shift = BigInt::zero();
                }
                let (first, mid_tag, second, end_tag) = if *e == 1 {
                    (MapId::GmInv, Tag::BuZ, MapId::Gn, Tag::AsNZ)
                } else {
                    (MapId::GnInv, Tag::AuZ, MapId::Gm, Tag::BsMZ)
                };
                let syl_name = if *e == 1 { "t" } else { "t^-1" };
                for (map, tag) in [(first, mid_tag), (second, end_tag)] {
                    cur = act.apply(map, &cur)?;
                    let mem = act.lattice(tag).classify(&cur);
                    steps.push(CertStep {
                        syllable: syl_name.into(),
                        map: map_name(map).into(),
                        enclosure: cur.clone(),
                        tag: Some(tag),
                        membership: Some(mem),
                    });
                    if mem != Membership::Inside {
                        let reason = format!("enclosure of {} is {:?} for {}", map_name(map), mem, tag);
                        return Ok(inconclusive(steps, reason));
                    }
                }
                last_tag = Some(end_tag);
            }
        }
    }
    let tag = last_tag.expect("word has a stable letter");
    let set = act.lattice(tag);
    let disp = set.distance_from(x0f);
    Ok(Certificate {
        word: w.clone(),
        conjugated: conj,
        x0: x0.clone(),
        mode,
        steps,
        result: CertVerdict::Nontrivial {
            final_tag: Some(tag),
            displacement_lower_bound: disp,
        },
    })
}

fn map_name(m: MapId) -> &'static str {
    match m {
        MapId::Gn => "g_n",
        MapId::Gm => "g_m",
        MapId::GnInv => "g_n^-1",
        MapId::GmInv => "g_m^-1",
    }
}

/// Admissible rotation numbers of `h` in a circle action of BS(m,n):
/// `τ(h) = p/(m − n) mod 1`, i.e. `h` has a periodic point of period dividing `|n − m|`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RotationConstraint {
    pub m: i64,
    pub n: i64,
    pub period_divides: u64,
    #[serde(with = "crate::rational::serde_rational_vec")]
    pub admissible: Vec<Rational>,
}

pub fn rotation_obstruction(m: i64, n: i64) -> Result<RotationConstraint, ActionError> {
    if m == n {
        return Err(ActionError::Precondition("m = n: every rotation number is possible".into()));
    }
    let d = (n - m).unsigned_abs();
    let admissible = (0..d as i64).map(|p| rat(p, d as i64)).collect();
    Ok(RotationConstraint {
        m,
        n,
        period_divides: d,
        admissible,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointBracket {
    /// `k` with a sign change of `g(mk) − mk` between `k` and `k + 1`
    pub k: i64,
    pub lo: f64,
    pub hi: f64,
    pub residual: f64,
}

/// Locates a fixed point of `g`, assuming `g(x + m) = g(x) + n`-type growth:
/// scans `g(mk) − mk` for `|k| ≤ search` and bisects to width ≤ 1e-9.
pub fn find_g_fixed_point(g: &PieceTree, m: i64, search: i64) -> Result<FixedPointBracket, ActionError> {
    let f = g.compile();
    let disp = |x: f64| -> Result<f64, ActionError> {
        let e = f.enclose(x)?;
        Ok(e.mid() - x)
    };
    let mut prev: Option<(i64, f64)> = None;
    for k in -search..=search {
        let x = (m * k) as f64;
        let d = disp(x)?;
        if d == 0.0 {
            return Ok(FixedPointBracket {
                k,
                lo: x,
                hi: x,
                residual: 0.0,
            });
        }
        if let Some((pk, pd)) = prev {
            if pd.signum() != d.signum() {
                let (mut lo, mut hi) = (((m * pk) as f64), x);
                let lo_sign = pd.signum();
                while hi - lo > 1e-9 {
                    let mid = 0.5 * (lo + hi);
                    let dm = disp(mid)?;
                    if dm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if dm.signum() == lo_sign {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let mid = 0.5 * (lo + hi);
                return Ok(FixedPointBracket {
                    k: pk,
                    lo,
                    hi,
                    residual: disp(mid)?.abs(),
                });
            }
        }
        prev = Some((k, d));
    }
    Err(ActionError::SearchBound(search))
}

pub fn action_hash_input(spec: &ActionSpec) -> String {
    serde_json::to_string(spec).expect("serializable")
}
