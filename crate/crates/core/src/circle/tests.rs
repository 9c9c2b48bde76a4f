use super::*;
use crate::piecewise::{compose, invert, TrigLift, TrigTerm};
use crate::rational::rat;
use proptest::prelude::*;

fn rotation(p: i64, q: i64) -> MonotoneRealMap {
    MonotoneRealMap::closed(PieceTree::translation(rat(p, q)), format!("x + {p}/{q}")).unwrap()
}

fn trig(offset: Rational, k: u32, sin: f64) -> MonotoneRealMap {
    let t = TrigLift::new(1, offset, vec![TrigTerm { k, cos: 0.0, sin }]).unwrap();
    MonotoneRealMap::closed(PieceTree::Trig(Arc::new(t)), "trig").unwrap()
}

fn pl(knots: &[(Rational, Rational)]) -> MonotoneRealMap {
    let lift = PeriodicLift::piecewise_linear(1, knots).unwrap();
    MonotoneRealMap::closed(PieceTree::periodic(lift), "pl").unwrap()
}

/// Period-3 attracting orbit {0, 1/3, 2/3}, advancing one step.
fn period_three() -> MonotoneRealMap {
    trig(rat(1, 3), 3, -0.05)
}

#[test]
fn rotation_estimates() {
    let r = rotation(1, 3);
    let est = translation_number_estimate(&r, 0.0, 1_000_000, false).unwrap();
    assert!((est.estimate - 1.0 / 3.0).abs() <= est.error_bound);
    assert!(est.error_bound >= 2e-6 && est.error_bound < 2e-6 + 1e-9);
    assert_eq!(translation_number_exact(&r, &int(0), 1000).unwrap(), rat(1, 3));
    let t2 = rotation(2, 1);
    assert_eq!(translation_number_estimate(&t2, 0.3, 100, false).unwrap().estimate, 2.0);
    assert_eq!(translation_number_exact(&t2, &rat(3, 10), 7).unwrap(), int(2));
}

#[test]
fn attracting_fixed_point_has_zero_translation() {
    let f = trig(int(0), 1, 0.1);
    let n = 100_000;
    let est = translation_number_estimate(&f, 0.3, n, true).unwrap();
    assert!(est.estimate.abs() <= est.error_bound);
    // oracle: plain iteration of the formula
    let mut x = 0.3f64;
    for _ in 0..n {
        x += 0.1 * (2.0 * std::f64::consts::PI * x).sin();
    }
    assert!(((x - 0.3) / n as f64 - est.estimate).abs() < 1e-12);
    assert!(est.richardson.unwrap().abs() <= est.error_bound);
}

#[test]
fn translation_needs_degree_one() {
    let d2 = MonotoneRealMap::closed(PieceTree::affine(int(2), int(0)).unwrap(), "2x").unwrap();
    assert!(matches!(
        translation_number_estimate(&d2, 0.0, 10, false),
        Err(CircleError::Representation(_))
    ));
    assert!(translation_number_estimate(&rotation(1, 2), 0.0, 0, false).is_err());
}

#[test]
fn nu_examples() {
    let mu = AtomicCircleMeasure::uniform(&[int(0), rat(1, 2)]).unwrap();
    let x = rat(1, 7);
    assert_eq!(nu(&mu, &x, &x), int(0));
    assert_eq!(nu(&mu, &rat(-1, 4), &rat(3, 4)), int(1));
    assert_eq!(nu(&mu, &rat(3, 4), &rat(-1, 4)), int(-1));
    // half-open: the left end counts, the right end does not
    assert_eq!(nu(&mu, &int(0), &rat(1, 2)), rat(1, 2));
    assert_eq!(nu(&mu, &rat(1, 100), &rat(5, 2)), rat(5, 2) - rat(1, 2));
}

/// Brute-force oracle: sum weights of atoms p + k lying in [x, y).
fn nu_oracle(mu: &AtomicCircleMeasure, x: &Rational, y: &Rational) -> Rational {
    let (lo, hi, sign) = if x <= y { (x, y, 1) } else { (y, x, -1) };
    let mut total = Rational::zero();
    let kmin = rational::floor_int(lo).to_i64().unwrap() - 2;
    let kmax = rational::floor_int(hi).to_i64().unwrap() + 2;
    for (p, w) in mu.atoms() {
        for k in kmin..=kmax {
            let q = p + int(k);
            if &q >= lo && &q < hi {
                total += w;
            }
        }
    }
    total * int(sign)
}

use num_traits::ToPrimitive;

#[test]
fn measure_validation() {
    assert!(AtomicCircleMeasure::new(vec![(int(0), rat(1, 2))]).is_err());
    assert!(AtomicCircleMeasure::new(vec![(int(1), int(1))]).is_err());
    assert!(AtomicCircleMeasure::new(vec![(rat(1, 2), rat(1, 2)), (int(0), rat(1, 2))]).is_err());
    let json = r#"{"atoms":[{"position":"0","weight":"1/2"},{"position":"1/2","weight":"1/2"}]}"#;
    let mu: AtomicCircleMeasure = serde_json::from_str(json).unwrap();
    assert_eq!(serde_json::to_string(&mu).unwrap(), json);
    let bad = r#"{"atoms":[{"position":"0","weight":"1/3"}]}"#;
    assert!(serde_json::from_str::<AtomicCircleMeasure>(bad).is_err());
}

#[test]
fn mean_translation_examples() {
    let mu = AtomicCircleMeasure::uniform(&[int(0), rat(1, 2)]).unwrap();
    let half = rotation(1, 2);
    assert_eq!(mean_translation_number(&half, &mu, &rat(1, 5)).unwrap().value, rat(1, 2));
    // fixed points at the atoms
    let fix = pl(&[(int(0), int(0)), (rat(1, 4), rat(1, 8)), (rat(1, 2), rat(1, 2)), (rat(3, 4), rat(7, 8))]);
    assert_eq!(mean_translation_number(&fix, &mu, &rat(1, 3)).unwrap().value, int(0));
    // period-3 orbit
    let f = period_three();
    let mu3 = AtomicCircleMeasure::uniform(&[int(0), rat(1, 3), rat(2, 3)]).unwrap();
    let m = mean_translation_number(&f, &mu3, &rat(1, 10)).unwrap();
    assert_eq!(m.value, rat(1, 3));
    assert_eq!(m.checked_at.len(), 5);
    // oracle: ν(0, F(0)) with F(0) = 1/3 counts only the atom at 0
    assert_eq!(nu_oracle(&mu3, &int(0), &rat(1, 3)), rat(1, 3));
}

#[test]
fn mean_translation_matches_estimate() {
    let f = period_three();
    let mu3 = AtomicCircleMeasure::uniform(&[int(0), rat(1, 3), rat(2, 3)]).unwrap();
    let tm = mean_translation_number(&f, &mu3, &int(0)).unwrap().value;
    let est = translation_number_estimate(&f, 0.1, 1_000_000, false).unwrap();
    assert!((est.estimate - rational::to_f64(&tm)).abs() < 1e-6);
}

#[test]
fn non_invariant_measure_is_rejected() {
    let mu = AtomicCircleMeasure::uniform(&[int(0), rat(1, 2)]).unwrap();
    let r = rotation(1, 3);
    match mean_translation_number(&r, &mu, &int(0)) {
        Err(CircleError::Invariance { atom, .. }) => assert_eq!(atom, "0"),
        other => panic!("{other:?}"),
    }
    // weights must be carried along as well
    let lopsided = AtomicCircleMeasure::new(vec![(int(0), rat(1, 3)), (rat(1, 2), rat(2, 3))]).unwrap();
    assert!(mean_translation_number(&rotation(1, 2), &lopsided, &int(0)).is_err());
}

#[test]
fn grid_maps() {
    let csv = "x,F(x)\n0,0.1\n1/4,0.3\n0.5,0.7\n0.75,0.9\n";
    let pts = parse_grid_csv(csv).unwrap();
    assert_eq!(pts.len(), 4);
    let f = MonotoneRealMap::sampled(1, pts, "grid").unwrap();
    assert_eq!(f.eval_exact(&rat(1, 8)).unwrap().lo, rat(2, 10));
    assert_eq!(f.eval_exact(&rat(9, 8)).unwrap().lo, rat(12, 10));
    assert_eq!(f.equivariance_residual(64).unwrap(), 0.0);
    let src = f.to_source();
    let json = serde_json::to_string(&src).unwrap();
    let back: MapSource = serde_json::from_str(&json).unwrap();
    assert_eq!(back, src);
    let g = MonotoneRealMap::from_source(&back).unwrap();
    assert_eq!(g.eval_exact(&rat(3, 5)).unwrap(), f.eval_exact(&rat(3, 5)).unwrap());
    // non-monotone and over-long grids
    assert!(MonotoneRealMap::sampled(1, vec![(int(0), int(0)), (rat(1, 2), int(-1))], "").is_err());
    assert!(MonotoneRealMap::sampled(1, vec![(int(0), int(0)), (rat(1, 2), rat(3, 2))], "").is_err());
    assert!(parse_grid_csv("0,1\nfoo,2\n").is_err());
}

#[test]
fn closed_form_sources() {
    let json = r#"{"kind":"affine","slope":"1","offset":"1/3"}"#;
    let src: MapSource = serde_json::from_str(json).unwrap();
    let f = MonotoneRealMap::from_source(&src).unwrap();
    assert_eq!(f.degree(), 1);
    assert!(f.equivariance_residual(10).unwrap() == 0.0);
    let t = period_three();
    assert!(t.equivariance_residual(50).unwrap() <= 1e-12);
}

fn axis() -> impl Strategy<Value = f64> {
    -3.0f64..3.0
}

/// Random degree-1 PL lift with rational knots.
fn arb_pl() -> impl Strategy<Value = MonotoneRealMap> {
    (proptest::collection::btree_set(1i64..99, 1..5), proptest::collection::vec(1i64..20, 5), -3i64..3).prop_map(|(xs, ws, shift)| {
        let xs: Vec<i64> = xs.into_iter().collect();
        let total: i64 = ws[..=xs.len()].iter().sum();
        let mut knots = vec![(int(0), int(shift))];
        let mut acc = 0;
        for (i, x) in xs.iter().enumerate() {
            acc += ws[i];
            knots.push((rat(*x, 100), int(shift) + rat(acc, total)));
        }
        pl(&knots)
    })
}

/// Random PL lift sending atom i/q to (i + s)/q, so it preserves the uniform measure.
fn arb_preserving(q: i64) -> impl Strategy<Value = MonotoneRealMap> {
    (-2 * q..2 * q, proptest::collection::vec(1i64..9, q as usize)).prop_map(move |(s, mids)| {
        let mut knots = Vec::new();
        for i in 0..q {
            knots.push((rat(i, q), rat(i + s, q)));
            // an interior knot between consecutive atoms, images in order
            let m = rat(mids[i as usize], 10);
            knots.push((rat(i, q) + &m / int(q), rat(i + s, q) + &m / int(q)));
        }
        pl(&knots)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn nu_matches_oracle_and_is_additive(a in -40i64..40, b in -40i64..40, c in -40i64..40, which in 0usize..3) {
        let mus = [
            AtomicCircleMeasure::uniform(&[int(0), rat(1, 2)]).unwrap(),
            AtomicCircleMeasure::new(vec![(rat(1, 10), rat(1, 4)), (rat(1, 3), rat(3, 4))]).unwrap(),
            AtomicCircleMeasure::uniform(&[int(0), rat(1, 3), rat(2, 3)]).unwrap(),
        ];
        let mu = &mus[which];
        let (x, y, z) = (rat(a, 12), rat(b, 12), rat(c, 12));
        prop_assert_eq!(nu(mu, &x, &y), nu_oracle(mu, &x, &y));
        prop_assert_eq!(nu(mu, &x, &y) + nu(mu, &y, &z), nu(mu, &x, &z));
        prop_assert_eq!(nu(mu, &y, &x), -nu(mu, &x, &y));
    }

    #[test]
    fn mean_translation_is_additive(f in arb_preserving(3), g in arb_preserving(3)) {
        let mu = AtomicCircleMeasure::uniform(&[int(0), rat(1, 3), rat(2, 3)]).unwrap();
        let fg = f.compose(&g).unwrap();
        let x = rat(1, 7);
        let tf = mean_translation_number(&f, &mu, &x).unwrap().value;
        let tg = mean_translation_number(&g, &mu, &x).unwrap().value;
        let tfg = mean_translation_number(&fg, &mu, &x).unwrap().value;
        prop_assert_eq!(tfg, tf + tg);
    }

    #[test]
    fn mean_translation_agrees_with_estimate(f in arb_preserving(4)) {
        let mu = AtomicCircleMeasure::uniform(&[int(0), rat(1, 4), rat(1, 2), rat(3, 4)]).unwrap();
        let tm = rational::to_f64(&mean_translation_number(&f, &mu, &int(0)).unwrap().value);
        let est = translation_number_estimate(&f, 0.37, 2000, false).unwrap();
        prop_assert!((tm - est.estimate).abs() <= est.error_bound);
    }

    #[test]
    fn translation_of_powers(f in arb_pl(), x0 in axis(), k in 1usize..=5) {
        let n = 4000;
        let mut fk = f.clone();
        for _ in 1..k {
            fk = fk.compose(&f).unwrap();
        }
        let a = translation_number_estimate(&f, x0, n, false).unwrap();
        let b = translation_number_estimate(&fk, x0, n, false).unwrap();
        prop_assert!((b.estimate - k as f64 * a.estimate).abs() <= b.error_bound + k as f64 * a.error_bound);
    }

    #[test]
    fn translation_is_conjugacy_invariant(f in arb_pl(), g in arb_pl(), x0 in axis()) {
        let n = 4000;
        let conj = MonotoneRealMap::closed(compose(&compose(g.tree(), f.tree()), &invert(g.tree())), "gfg^-1").unwrap();
        let a = translation_number_estimate(&f, x0, n, false).unwrap();
        let b = translation_number_estimate(&conj, x0, n, false).unwrap();
        prop_assert!((a.estimate - b.estimate).abs() <= a.error_bound + b.error_bound);
    }
}

// --- audits ---

fn interval_map(f: impl Fn(f64) -> f64 + Sync) -> FnMap<impl Fn(f64) -> f64 + Sync> {
    FnMap::new(0.0, 1.0, f)
}

#[test]
fn commuting_audit_identity() {
    let id = interval_map(|x| x);
    let rep = audit_commuting_fixsets(&id, &id, 0.0, 1.0, 101, 1e-9).unwrap();
    assert_eq!(rep.verdict, Verdict::Consistent);
    assert!(rep.violations.is_empty());
    assert!(rep.findings.iter().any(|f| f.detail == "Fix(f) component [0, 1]"));
    assert!(!rep.caveat.is_empty());
}

#[test]
fn commuting_audit_square_and_fourth_power() {
    let f = interval_map(|x| x * x);
    let g = interval_map(|x| x * x * x * x);
    // oracle: g = f ∘ f, so they commute
    for i in 0..=100 {
        let x = i as f64 / 100.0;
        assert!(((f.f)((f.f)(x)) - (g.f)(x)).abs() < 1e-15);
    }
    let rep = audit_commuting_fixsets(&f, &g, 0.0, 1.0, 1001, 1e-9).unwrap();
    assert_eq!(rep.verdict, Verdict::Consistent);
    assert!(rep.warnings.is_empty());
    let comps = fixed_components(&f, &[0.0, 0.25, 0.5, 0.75, 1.0], 1e-9);
    assert_eq!(comps, vec![(0.0, 0.0), (1.0, 1.0)]);
    assert_eq!(fixed_components(&g, &[0.0, 0.5, 1.0], 1e-9), comps);
}

#[test]
fn commuting_audit_flags_moved_fixed_point() {
    let tau = 2.0 * std::f64::consts::PI;
    let f = interval_map(move |x| x + 0.05 * (tau * x).sin());
    let g = interval_map(|x| x + 0.03 * (std::f64::consts::PI * x).sin());
    let rep = audit_commuting_fixsets(&f, &g, 0.0, 1.0, 1001, 1e-9).unwrap();
    assert_eq!(rep.verdict, Verdict::Violation);
    assert!(!rep.warnings.is_empty());
    assert!(rep.violations.iter().any(|v| (v.location - 0.5).abs() < 1e-12));
    let json = serde_json::to_value(&rep).unwrap();
    let keys: Vec<&String> = json.as_object().unwrap().keys().collect();
    assert_eq!(keys.len(), 8);
}

#[test]
fn commuting_audit_sampled_maps() {
    let f = SampledIntervalMap::from_fn(0.0, 1.0, 501, |x| x * x).unwrap();
    let g = SampledIntervalMap::from_pairs(&[(0.0, 0.0), (0.5, 0.25), (1.0, 1.0)]).unwrap();
    assert!(audit_commuting_fixsets(&f, &g, 0.0, 1.0, 101, 1e-9).is_ok());
    let moved = interval_map(|x| 0.5 * x + 0.25);
    assert!(matches!(
        audit_commuting_fixsets(&f, &moved, 0.0, 1.0, 11, 1e-9),
        Err(CircleError::Precondition(_))
    ));
}

/// `a = y⁻¹x`, `b = x⁻¹y²` with `x = T_{1/2}` and `y = χ T_{1/3} χ⁻¹`: since
/// `x² = y³`, the pair satisfies `aba = bab`. χ is chosen so that `y = T_{1/2}`
/// on `[0, 1/4]`, hence `a` fixes `J = [0, 1/4]` while `b` moves it.
fn braid_pair() -> (MonotoneRealMap, MonotoneRealMap) {
    let chi = PieceTree::periodic(
        PeriodicLift::piecewise_linear(
            1,
            &[(int(0), int(0)), (rat(1, 12), rat(1, 4)), (rat(1, 3), rat(1, 2)), (rat(5, 12), rat(3, 4))],
        )
        .unwrap(),
    );
    let x = PieceTree::translation(rat(1, 2));
    let y = compose(&compose(&chi, &PieceTree::translation(rat(1, 3))), &invert(&chi));
    let a = compose(&invert(&y), &x);
    let b = compose(&invert(&x), &compose(&y, &y));
    (MonotoneRealMap::closed(a, "a").unwrap(), MonotoneRealMap::closed(b, "b").unwrap())
}

#[test]
fn braid_pair_oracle() {
    let (a, b) = braid_pair();
    for i in 0..=20 {
        let p = rat(i, 80);
        assert_eq!(a.eval_exact(&p).unwrap().lo, p);
        // b(p) = 5/14 + p/7 on J
        assert_eq!(b.eval_exact(&p).unwrap().lo, rat(5, 14) + &p / int(7));
    }
}

#[test]
fn aba_audit_verdicts() {
    let (a, b) = braid_pair();
    let rep = audit_aba(&a, &b, AbaExponents::BRAID, (0.0, 0.25), (-1.0, 2.0), 400, 1e-9).unwrap();
    assert_eq!(rep.verdict, Verdict::DisjointFromFixB);
    assert!(rep.violations.is_empty());
    let id = rotation(0, 1);
    let rep = audit_aba(&id, &id, AbaExponents::BRAID, (0.2, 0.4), (0.0, 1.0), 50, 1e-9).unwrap();
    assert_eq!(rep.verdict, Verdict::InsideFixB);
}

#[test]
fn aba_audit_preconditions() {
    let (a, b) = braid_pair();
    let bumped = MonotoneRealMap::closed(compose(&PieceTree::translation(rat(1, 100)), b.tree()), "b'").unwrap();
    assert!(matches!(
        audit_aba(&a, &bumped, AbaExponents::BRAID, (0.0, 0.25), (-1.0, 2.0), 100, 1e-9),
        Err(CircleError::Precondition(_))
    ));
    let bad = AbaExponents { m3: 2, ..AbaExponents::BRAID };
    assert!(audit_aba(&a, &b, bad, (0.0, 0.25), (0.0, 1.0), 10, 1e-9).is_err());
    assert!(audit_aba(&a, &b, AbaExponents::BRAID, (0.3, 0.6), (0.0, 1.0), 10, 1e-9).is_err());
}

#[test]
fn support_agreement() {
    let mu = AtomicCircleMeasure::uniform(&[int(0), rat(1, 2)]).unwrap();
    let f = rotation(1, 2);
    let g = pl(&[(int(0), rat(1, 2)), (rat(1, 10), rat(7, 10)), (rat(1, 2), int(1))]);
    let rep = audit_support_agreement(&f, &g, &mu, 1e-12).unwrap();
    assert_eq!(rep.verdict, Verdict::Consistent);
    assert_eq!(rep.findings.len(), 2);
}

#[test]
fn semi_stable_point_widens_the_bound() {
    // F(0) = −3: the circle map has a semi-stable fixed point at 0 (slope 0.1 from the
    // left, 15 from the right); plain float orbits slip past it.
    let f = pl(&[(int(0), int(-3)), (rat(1, 100), int(-3) + rat(7, 46)), (rat(13, 100), int(-3) + rat(19, 46)), (rat(23, 100), int(-3) + rat(24, 46)), (rat(37, 100), int(-3) + rat(43, 46))]);
    assert_eq!(translation_number_exact(&f, &int(0), 50).unwrap(), int(-3));
    let est = translation_number_estimate(&f, 1.2311357205967304, 4000, false).unwrap();
    assert!((est.estimate + 3.0).abs() <= est.error_bound);
}
