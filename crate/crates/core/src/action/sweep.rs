//! Exhaustive nontriviality sweep over pinch-free words.
//!
//! A word `a^{r_k} t^{e_k} ⋯ t^{e_1} a^{r_0}` is conjugated to
//! `t^{e_k} ⋯ t^{e_1} a^{r_0 + r_k}`, so words sharing a right-hand prefix
//! share their trajectory from `x₀`. The search walks that prefix tree once,
//! weighting each combined exponent `r₀' = r_0 + r_k` by the number of pairs
//! `|r_0|, |r_k| ≤ B` producing it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ActionError, BSAction, LatticeSet, Membership, PingPongTable, Tag};
use crate::interval::FInterval;
use crate::rational::{self, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepWitness {
    /// conjugated word, in `t^{e_k} a^{r_{k-1}} ⋯ t^{e_1} a^{r_0'}` form
    pub word: String,
    pub t_syllables: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub m: i64,
    pub n: i64,
    pub max_t: usize,
    pub bound: i64,
    #[serde(with = "crate::rational::serde_rational")]
    pub x0: Rational,
    pub mode: super::Mode,
    /// pinch-free words, identity excluded
    pub words: u64,
    pub nontrivial: u64,
    pub inconclusive: u64,
    /// words without `t`, nontrivial because `h^r` is a translation
    pub translation_words: u64,
    pub final_as_nz: u64,
    pub final_bs_mz: u64,
    pub words_by_t: Vec<u64>,
    /// lower bound on |α(x₀) − x₀| over words with a stable letter
    pub displacement_lower_bound: f64,
    pub witnesses: Vec<SweepWitness>,
}

impl SweepReport {
    pub fn all_nontrivial(&self) -> bool {
        self.inconclusive == 0 && self.nontrivial == self.words
    }
}

const MAX_WITNESSES: usize = 20;

#[derive(Default)]
struct Acc {
    words: u64,
    nontrivial: u64,
    inconclusive: u64,
    final_as: u64,
    final_bs: u64,
    by_t: Vec<u64>,
    witnesses: Vec<SweepWitness>,
}

impl Acc {
    fn new(max_t: usize) -> Self {
        Acc {
            by_t: vec![0; max_t + 1],
            ..Default::default()
        }
    }

    fn merge(mut self, o: Acc) -> Acc {
        self.words += o.words;
        self.nontrivial += o.nontrivial;
        self.inconclusive += o.inconclusive;
        self.final_as += o.final_as;
        self.final_bs += o.final_bs;
        for (a, b) in self.by_t.iter_mut().zip(o.by_t) {
            *a += b;
        }
        for w in o.witnesses {
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(w);
            }
        }
        self
    }
}

struct Ctx<'a> {
    act: &'a BSAction,
    max_t: usize,
    bound: i64,
    bu: LatticeSet,
    au: LatticeSet,
    asn: LatticeSet,
    bsm: LatticeSet,
}

enum Step {
    Ok(FInterval),
    Fail(String),
}

impl Ctx<'_> {
    /// `y ↦ g^{e}(y + r)` with both intermediate tags checked.
    fn step(&self, y: &FInterval, r: i64, e: i8) -> Step {
        let y = y.add_f(r as f64);
        let (first, mid, second, end) = if e == 1 {
            (&self.act.f_gm_inv, &self.bu, &self.act.f_gn, &self.asn)
        } else {
            (&self.act.f_gn_inv, &self.au, &self.act.f_gm, &self.bsm)
        };
        let z = match first.eval_interval(&y) {
            Ok(z) => z,
            Err(err) => return Step::Fail(err.to_string()),
        };
        let mem = mid.classify_float(&z);
        if mem != Membership::Inside {
            return Step::Fail(format!("intermediate enclosure [{:e}, {:e}] is {mem:?}", z.lo, z.hi));
        }
        let w = match second.eval_interval(&z) {
            Ok(w) => w,
            Err(err) => return Step::Fail(err.to_string()),
        };
        let mem = end.classify_float(&w);
        if mem != Membership::Inside {
            return Step::Fail(format!("final enclosure [{:e}, {:e}] is {mem:?}", w.lo, w.hi));
        }
        Step::Ok(w)
    }

    fn pinch(&self, outer: i8, r: i64, inner: i8) -> bool {
        (outer == 1 && inner == -1 && r % self.act.m == 0)
            || (outer == -1 && inner == 1 && r % self.act.n == 0)
    }

    /// Visits the word `t^{e} · path`, then its extensions to the left.
    #[allow(clippy::too_many_arguments)]
    fn visit(
        &self,
        y: &FInterval,
        r: i64,
        e: i8,
        ok: bool,
        mult: u64,
        path: &mut Vec<(i64, i8)>,
        acc: &mut Acc,
    ) {
        path.push((r, e));
        let depth = path.len();
        let next = if ok {
            match self.step(y, r, e) {
                Step::Ok(w) => Some(w),
                Step::Fail(reason) => {
                    if acc.witnesses.len() < MAX_WITNESSES {
                        acc.witnesses.push(SweepWitness {
                            word: render(path),
                            t_syllables: depth,
                            reason,
                        });
                    }
                    None
                }
            }
        } else {
            None
        };
        acc.words += mult;
        acc.by_t[depth] += mult;
        match next {
            Some(_) => {
                acc.nontrivial += mult;
                if e == 1 {
                    acc.final_as += mult;
                } else {
                    acc.final_bs += mult;
                }
            }
            None => acc.inconclusive += mult,
        }
        if depth < self.max_t {
            let w = next.unwrap_or(*y);
            for e2 in [-1i8, 1] {
                for r2 in -self.bound..=self.bound {
                    if !self.pinch(e2, r2, e) {
                        self.visit(&w, r2, e2, next.is_some(), mult, path, acc);
                    }
                }
            }
        }
        path.pop();
    }
}

fn render(path: &[(i64, i8)]) -> String {
    let mut parts = Vec::new();
    for &(r, e) in path.iter().rev() {
        parts.push(if e == 1 { "t".to_string() } else { "t^-1".to_string() });
        match r {
            0 => {}
            1 => parts.push("a".into()),
            _ => parts.push(format!("a^{r}")),
        }
    }
    parts.join(" ")
}

/// Certifies every pinch-free word of BS(m,n) with at most `max_t` stable
/// letters and all a-exponents in `[-bound, bound]`, in float mode.
/// Requires a verified ping-pong table for the same action parameters.
pub fn faithfulness_sweep(
    act: &BSAction,
    table: &PingPongTable,
    max_t: usize,
    bound: u32,
    x0: &Rational,
    jobs: usize,
) -> Result<SweepReport, ActionError> {
    if !table.verified {
        return Err(ActionError::Precondition(
            "the ping-pong inclusions have not been verified".into(),
        ));
    }
    if table.m != act.m || table.n != act.n || table.a != act.a || table.fourier_cutoff != act.fourier_cutoff {
        return Err(ActionError::Precondition(
            "the ping-pong table was computed for a different action".into(),
        ));
    }
    let (lo, hi) = act
        .intervals
        .start_region()
        .ok_or_else(|| ActionError::Precondition("C ∩ C2 is empty".into()))?;
    if !(lo < *x0 && *x0 < hi) {
        return Err(ActionError::Precondition(format!(
            "x0 = {} is outside the interior of C ∩ C2",
            rational::format_rational(x0)
        )));
    }
    if !(1..=1_000_000).contains(&bound) {
        return Err(ActionError::Precondition("exponent bound must be positive".into()));
    }
    let bound = bound as i64;
    let ctx = Ctx {
        act,
        max_t,
        bound,
        bu: act.lattice(Tag::BuZ),
        au: act.lattice(Tag::AuZ),
        asn: act.lattice(Tag::AsNZ),
        bsm: act.lattice(Tag::BsMZ),
    };
    let start = FInterval::from_rational(x0);
    let roots: Vec<(i64, i8)> = (-2 * bound..=2 * bound)
        .flat_map(|r| [(r, -1i8), (r, 1i8)])
        .collect();
    let run = || {
        roots
            .par_iter()
            .map(|&(r, e)| {
                let mut acc = Acc::new(max_t);
                if max_t >= 1 {
                    let mult = (2 * bound + 1 - r.abs()) as u64;
                    ctx.visit(&start, r, e, true, mult, &mut Vec::new(), &mut acc);
                }
                acc
            })
            .reduce(|| Acc::new(max_t), Acc::merge)
    };
    let acc = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    };
    let translation_words = 2 * bound as u64;
    let mut by_t = acc.by_t;
    by_t[0] = translation_words;
    let x0f = rational::to_f64(x0);
    let disp = ctx.asn.distance_from(x0f).min(ctx.bsm.distance_from(x0f));
    Ok(SweepReport {
        m: act.m,
        n: act.n,
        max_t,
        bound,
        x0: x0.clone(),
        mode: super::Mode::Float,
        words: acc.words + translation_words,
        nontrivial: acc.nontrivial + translation_words,
        inconclusive: acc.inconclusive,
        translation_words,
        final_as_nz: acc.final_as,
        final_bs_mz: acc.final_bs,
        words_by_t: by_t,
        displacement_lower_bound: disp,
        witnesses: acc.witnesses,
    })
}
