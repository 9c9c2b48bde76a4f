//! End-to-end acceptance checks, one PASS/FAIL line per criterion.

use std::sync::Arc;
use std::time::{Duration, Instant};

use bsline::action::{
    build_action, default_x0, faithfulness_sweep, verify_inclusions, Mode,
};
use bsline::circle::{
    mean_translation_number, translation_number_estimate, AtomicCircleMeasure, MonotoneRealMap,
};
use bsline::piecewise::{compose, invert, PeriodicLift, PieceTree, TrigLift, TrigTerm};
use bsline::presentations::{
    autfn_a_schema, derive_convention, is_connected, mc_schema, verify_autfn_relations, CommGraph,
    PresentationSchema, Relation, Letter, PINNED_CONVENTION,
};
use bsline::rational::{int, rat, to_f64};
use bsline::rigidity::{
    detect_nonstandard, hirsch_profile, solve_conjugacy, sup_distance, Classification, SolveOptions, Verdict,
};
use bsline::words::{bs12_oracle, interval_commutator, obstruction_commutator, StandardPinch};
use rand::{Rng, SeedableRng};

const PAIRS: [(i64, i64); 4] = [(1, 2), (2, 3), (2, 5), (3, 4)];

struct Outcome {
    ok: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome { ok: true, detail: detail.into() }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome { ok: false, detail: detail.into() }
}

/// Runs a criterion; the budget is part of the criterion.
fn run(id: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let ok = out.ok && took <= budget;
    let timing = if took <= budget { String::new() } else { format!(" [over budget {budget:?}]") };
    println!(
        "{} criterion {id:>2} {name}: {} ({:.2?}){timing}",
        if ok { "PASS" } else { "FAIL" },
        out.detail,
        took
    );
    ok
}

/// Each pair has its own budget, so the per-pair times are checked here.
fn per_pair(budget: Duration, f: impl Fn(i64, i64) -> Result<String, String>) -> Outcome {
    let mut notes = Vec::new();
    for (m, n) in PAIRS {
        let start = Instant::now();
        let r = f(m, n);
        let took = start.elapsed();
        match r {
            Err(e) => return fail(format!("({m},{n}): {e}")),
            Ok(_) if took > budget => return fail(format!("({m},{n}) took {took:.2?}")),
            Ok(s) => notes.push(format!("({m},{n}) {s}")),
        }
    }
    pass(notes.join("; "))
}

fn criterion_1() -> Outcome {
    per_pair(Duration::from_secs(1), |m, n| {
        let act = build_action(m, n).map_err(|e| e.to_string())?;
        let fl = act.relation_check(1000).map_err(|e| e.to_string())?;
        if fl.sup_residual_float > 1e-12 {
            return Err(format!("float residual {:e}", fl.sup_residual_float));
        }
        let ex = act.relation_check_exact(1000).map_err(|e| e.to_string())?;
        if ex.exact_points == 0 || ex.exact_nonzero > 0 {
            return Err(format!("exact: {} of {} linear-path points nonzero", ex.exact_nonzero, ex.exact_points));
        }
        Ok(format!("sup {:.1e}, {} exact zeros", fl.sup_residual_float, ex.exact_points))
    })
}

fn criterion_2() -> Outcome {
    per_pair(Duration::from_secs(1), |m, n| {
        let act = build_action(m, n).map_err(|e| e.to_string())?;
        for mode in [Mode::Rational, Mode::Float] {
            let t = verify_inclusions(&act, mode).map_err(|e| e.to_string())?;
            if t.inclusions.len() != 7 || !t.verified {
                let why = t
                    .first_failure()
                    .map(|(f, c)| format!("inclusion {} shift {}: {:?}", f.id, c.shift, c.verdict))
                    .unwrap_or_default();
                return Err(format!("{mode:?}: {why}"));
            }
        }
        Ok("7/7 inside".into())
    })
}

fn criterion_3() -> Outcome {
    let act = match build_action(2, 3) {
        Ok(a) => a,
        Err(e) => return fail(e.to_string()),
    };
    let table = match verify_inclusions(&act, Mode::Float) {
        Ok(t) => t,
        Err(e) => return fail(e.to_string()),
    };
    let jobs = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let r = match faithfulness_sweep(&act, &table, 6, 4, &default_x0(), jobs) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string()),
    };
    let tagged = r.final_as_nz + r.final_bs_mz;
    let detail = format!(
        "{} words, {} nontrivial, {} inconclusive, {} in A^s+3Z, {} in B^s+2Z, {} without t",
        r.words, r.nontrivial, r.inconclusive, r.final_as_nz, r.final_bs_mz, r.translation_words
    );
    if r.all_nontrivial() && r.inconclusive == 0 && tagged + r.translation_words == r.words && r.words > 0 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_4() -> Outcome {
    let s = bs12_oracle(8, &StandardPinch);
    let detail = format!("{} strings, {} comparisons, {} disagreements", s.strings, s.comparisons, s.disagreements);
    if s.disagreements == 0 && s.strings == (0..=8).map(|k| 4u64.pow(k)).sum::<u64>() {
        pass(detail)
    } else {
        fail(format!("{detail}; first witness {:?}", s.witnesses.first()))
    }
}

fn criterion_5() -> Outcome {
    let ok1 = matches!(obstruction_commutator(2, 3, 5, 1), Ok((_, c)) if c.nontrivial && c.pinch_free);
    let ok2 = [(2, 3)]
        .iter()
        .all(|&(m, n)| matches!(interval_commutator(m, n), Ok((_, c)) if c.nontrivial));
    let err = match obstruction_commutator(2, 3, 6, 1) {
        Err(e) => e.to_string(),
        Ok(_) => String::new(),
    };
    let ok3 = err.contains("divisible");
    let detail = format!("commutator(2,3,5,1) nontrivial: {ok1}; [tat^-1, a] nontrivial: {ok2}; (2,3,6,1) rejected: {ok3}");
    if ok1 && ok2 && ok3 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn trig_map(offset: bsline::rational::Rational, k: u32, sin: f64) -> MonotoneRealMap {
    let t = TrigLift::new(1, offset, vec![TrigTerm { k, cos: 0.0, sin }]).unwrap();
    MonotoneRealMap::closed(PieceTree::Trig(Arc::new(t)), "trig").unwrap()
}

/// PL lift sending `i/q` to `(i + s)/q` with one interior knot per gap.
fn preserving_map(rng: &mut impl Rng, q: i64) -> MonotoneRealMap {
    let s = rng.gen_range(-2 * q..2 * q);
    let mut knots = Vec::new();
    for i in 0..q {
        knots.push((rat(i, q), rat(i + s, q)));
        let m = rat(rng.gen_range(1..9), 10) / int(q);
        let m2 = rat(rng.gen_range(1..9), 10) / int(q);
        knots.push((rat(i, q) + m, rat(i + s, q) + m2));
    }
    MonotoneRealMap::closed(PieceTree::periodic(PeriodicLift::piecewise_linear(1, &knots).unwrap()), "pl").unwrap()
}

fn criterion_6() -> Outcome {
    let rot = MonotoneRealMap::closed(PieceTree::translation(rat(1, 3)), "x + 1/3").unwrap();
    let est = translation_number_estimate(&rot, 0.0, 1_000_000, false).unwrap();
    let err = (est.estimate - 1.0 / 3.0).abs();
    let ok1 = err <= 2e-6 && err <= est.error_bound;

    let f = trig_map(rat(1, 3), 3, -0.05);
    let mu = AtomicCircleMeasure::uniform(&[int(0), rat(1, 3), rat(2, 3)]).unwrap();
    let (tm, ok2) = match mean_translation_number(&f, &mu, &rat(1, 10)) {
        Ok(t) => {
            let e = translation_number_estimate(&f, 0.1, 1_000_000, false).unwrap();
            let v = to_f64(&t.value);
            (v, (e.estimate - v).abs() < 1e-6)
        }
        Err(_) => (f64::NAN, false),
    };

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let x = rat(1, 7);
    let mut additive = 0;
    for _ in 0..100 {
        let (a, b) = (preserving_map(&mut rng, 3), preserving_map(&mut rng, 3));
        let ab = a.compose(&b).unwrap();
        let t = |h: &MonotoneRealMap| mean_translation_number(h, &mu, &x).map(|m| m.value);
        if let (Ok(ta), Ok(tb), Ok(tab)) = (t(&a), t(&b), t(&ab)) {
            if tab == ta + tb {
                additive += 1;
            }
        }
    }
    let ok3 = additive == 100;
    let detail = format!(
        "rotation estimate {:.9} (|err| {err:.1e}, bound {:.3e}); tau_mu = {tm} vs estimate ok: {ok2}; additivity {additive}/100",
        est.estimate, est.error_bound
    );
    if ok1 && ok2 && ok3 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn conjugated_pair(eps: f64) -> (bsline::piecewise::FloatMap, bsline::piecewise::FloatMap) {
    let psi = PieceTree::Trig(Arc::new(
        TrigLift::new(1, int(0), vec![TrigTerm { k: 1, cos: 0.0, sin: eps }]).unwrap(),
    ));
    let g = compose(&compose(&invert(&psi), &PieceTree::affine(int(2), int(0)).unwrap()), &psi);
    let h = compose(&compose(&invert(&psi), &PieceTree::translation(int(1))), &psi);
    (g.compile(), h.compile())
}

fn criterion_7() -> Outcome {
    let eps = 0.01;
    let (g, h) = conjugated_pair(eps);
    let r = match solve_conjugacy(&g, &h, 2, SolveOptions::default()) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string()),
    };
    let tau = 2.0 * std::f64::consts::PI;
    let d = sup_distance(&r, |x| x + eps * (tau * x).sin());
    // the first ratio compares against the initial guess; the rest measure the contraction
    let ratio = r.contraction_ratios.iter().skip(1).cloned().fold(0.0, f64::max);
    let detail = format!(
        "{} iterations, sup|phi - psi| = {d:.2e}, max ratio {ratio:.3}, residuals g {:.1e} h {:.1e}",
        r.iterations, r.residual_g, r.residual_h
    );
    let ok = r.verdict == Verdict::Converged
        && r.iterations <= 60
        && d < 1e-4
        && ratio <= 0.55
        && r.residual_g <= 1e-8
        && r.residual_h <= 1e-8;
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_8() -> Outcome {
    let h = PieceTree::translation(int(1)).compile();
    let g = hirsch_profile(2).unwrap().compile();
    let hirsch = detect_nonstandard(&g, &h, 2, 3.0);
    let standard = detect_nonstandard(&PieceTree::affine(int(2), int(0)).unwrap().compile(), &h, 2, 3.0);
    let witness = match &hirsch {
        Ok(Classification::NotConjugateToStandard { witness, .. }) => Some(*witness),
        _ => None,
    };
    let std_ok = matches!(standard, Ok(Classification::ConsistentWithStandard { .. }));
    let detail = format!("attracting witness {witness:?}; standard consistent: {std_ok}");
    if witness.is_some() && std_ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_9() -> Outcome {
    let d1 = derive_convention(3);
    let d2 = derive_convention(3);
    let reproducible = matches!((&d1, &d2), (Ok(a), Ok(b)) if a == b && a.chosen == Some(PINNED_CONVENTION));
    let r = verify_autfn_relations(6);
    let detail = format!(
        "convention [x,y] = {} derived: {reproducible}; {} instances, {} failures",
        PINNED_CONVENTION,
        r.total_checked(),
        r.failures.len()
    );
    if reproducible && r.all_pass() && r.convention == PINNED_CONVENTION {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_10() -> Outcome {
    let mc_ok = (2..=10).all(|n| is_connected(&CommGraph::from_schema(&mc_schema(n).unwrap())).connected);
    let a6 = is_connected(&CommGraph::from_schema(&autfn_a_schema(6).unwrap())).connected;
    let two = PresentationSchema::new(
        "braid only",
        vec!["x".into(), "y".into()],
        vec![Relation::Braid { x: Letter::new("x"), y: Letter::new("y") }],
    )
    .unwrap();
    let c = is_connected(&CommGraph::from_schema(&two));
    let two_ok = !c.connected && c.components.len() == 2;
    let detail = format!("MC(2..10) connected: {mc_ok}; A_ij (n=6) connected: {a6}; braid-only split: {two_ok}");
    if mc_ok && a6 && two_ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn main() {
    let s = Duration::from_secs;
    let results = [
        run(1, "relation identity", s(4), criterion_1),
        run(2, "seven ping-pong inclusions", s(4), criterion_2),
        run(3, "faithfulness sweep (2,3)", s(60), criterion_3),
        run(4, "BS(1,2) word-problem oracle", s(60), criterion_4),
        run(5, "obstruction words", s(1), criterion_5),
        run(6, "rotation-number toolkit", s(10), criterion_6),
        run(7, "rigidity solver", s(10), criterion_7),
        run(8, "non-conjugacy detection", s(5), criterion_8),
        run(9, "Aut(F_n) relations", s(10), criterion_9),
        run(10, "commutativity graphs", s(1), criterion_10),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
