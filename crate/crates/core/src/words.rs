//! Words in BS(m,n) = ⟨t, a : t a^m t⁻¹ = a^n⟩.
//!
//! Reduction removes pinches `t a^{mk} t⁻¹ → a^{nk}` and `t⁻¹ a^{nk} t → a^{mk}`
//! with a single left-to-right stack pass. By Britton's lemma a pinch-free word
//! containing a stable letter is nontrivial.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{int, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WordError {
    #[error("invalid parameters m = {m}, n = {n}: {reason}")]
    BadParameters { m: i64, n: i64, reason: String },
    #[error("cannot parse token {0:?} (expected t, t^-1, a or a^K)")]
    BadToken(String),
    #[error("words live in different groups: BS({0},{1}) vs BS({2},{3})")]
    ParameterMismatch(i64, i64, i64, i64),
    #[error("hypothesis fails: {0}")]
    Hypothesis(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Syllable {
    /// `t^e` with `e = ±1`.
    T(i8),
    A(BigInt),
}

impl fmt::Display for Syllable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Syllable::T(1) => write!(f, "t"),
            Syllable::T(_) => write!(f, "t^-1"),
            Syllable::A(r) if r.is_one() => write!(f, "a"),
            Syllable::A(r) => write!(f, "a^{r}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BSWord {
    pub m: i64,
    pub n: i64,
    pub syllables: Vec<Syllable>,
}

pub fn check_parameters(m: i64, n: i64) -> Result<(), WordError> {
    if m == 0 || n == 0 {
        return Err(WordError::BadParameters {
            m,
            n,
            reason: "exponents must be nonzero".into(),
        });
    }
    Ok(())
}

impl BSWord {
    pub fn new(m: i64, n: i64, syllables: Vec<Syllable>) -> Result<Self, WordError> {
        check_parameters(m, n)?;
        Ok(BSWord { m, n, syllables })
    }

    pub fn identity(m: i64, n: i64) -> Self {
        BSWord {
            m,
            n,
            syllables: Vec::new(),
        }
    }

    pub fn parse(m: i64, n: i64, s: &str) -> Result<Self, WordError> {
        check_parameters(m, n)?;
        let syllables = s
            .split_whitespace()
            .map(parse_token)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BSWord { m, n, syllables })
    }

    pub fn t_count(&self) -> usize {
        self.syllables
            .iter()
            .filter(|s| matches!(s, Syllable::T(_)))
            .count()
    }

    pub fn inverse(&self) -> BSWord {
        let syllables = self
            .syllables
            .iter()
            .rev()
            .map(|s| match s {
                Syllable::T(e) => Syllable::T(-e),
                Syllable::A(r) => Syllable::A(-r),
            })
            .collect();
        BSWord {
            m: self.m,
            n: self.n,
            syllables,
        }
    }

    pub fn concat(&self, other: &BSWord) -> Result<BSWord, WordError> {
        same_group(self, other)?;
        let mut syllables = self.syllables.clone();
        syllables.extend(other.syllables.iter().cloned());
        Ok(BSWord {
            m: self.m,
            n: self.n,
            syllables,
        })
    }

    /// Syllables with adjacent a-powers merged and zero powers dropped.
    pub fn merged(&self) -> BSWord {
        let mut out: Vec<Syllable> = Vec::with_capacity(self.syllables.len());
        for s in &self.syllables {
            push_merged(&mut out, s.clone());
        }
        BSWord {
            m: self.m,
            n: self.n,
            syllables: out,
        }
    }

    /// True when no `t a^{mk} t⁻¹` or `t⁻¹ a^{nk} t` subword occurs (after merging a-powers).
    pub fn is_pinch_free(&self) -> bool {
        let w = self.merged();
        let s = &w.syllables;
        for i in 0..s.len() {
            if let Syllable::T(e1) = s[i] {
                match (s.get(i + 1), s.get(i + 2)) {
                    (Some(Syllable::T(e2)), _) if *e2 == -e1 => return false,
                    (Some(Syllable::A(r)), Some(Syllable::T(e2))) if *e2 == -e1 => {
                        let d = if e1 == 1 { self.m } else { self.n };
                        if r.is_multiple_of(&BigInt::from(d)) {
                            return false;
                        }
                    }
                    _ => {}
                }
            }
        }
        true
    }

    /// Exponent sum of the a-syllables.
    pub fn a_total(&self) -> BigInt {
        self.syllables
            .iter()
            .filter_map(|s| match s {
                Syllable::A(r) => Some(r.clone()),
                _ => None,
            })
            .sum()
    }
}

fn parse_token(tok: &str) -> Result<Syllable, WordError> {
    let bad = || WordError::BadToken(tok.to_string());
    let (base, exp) = match tok.split_once('^') {
        Some((b, e)) => (b, Some(e)),
        None => (tok, None),
    };
    let exp = match exp {
        Some(e) => BigInt::from_str(e.trim_start_matches('+')).map_err(|_| bad())?,
        None => BigInt::one(),
    };
    match base {
        "t" => {
            if exp == BigInt::one() {
                Ok(Syllable::T(1))
            } else if exp == -BigInt::one() {
                Ok(Syllable::T(-1))
            } else {
                Err(bad())
            }
        }
        "a" => Ok(Syllable::A(exp)),
        _ => Err(bad()),
    }
}

impl fmt::Display for BSWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.syllables.is_empty() {
            return write!(f, "1");
        }
        for (i, s) in self.syllables.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

fn word_string(s: &[Syllable]) -> String {
    if s.is_empty() {
        return "1".into();
    }
    s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

#[derive(Serialize, Deserialize)]
struct WordJson {
    m: i64,
    n: i64,
    word: String,
}

impl Serialize for BSWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        WordJson {
            m: self.m,
            n: self.n,
            word: word_string(&self.syllables),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BSWord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = WordJson::deserialize(d)?;
        let word = if j.word.trim() == "1" { "" } else { j.word.as_str() };
        BSWord::parse(j.m, j.n, word).map_err(serde::de::Error::custom)
    }
}

fn same_group(a: &BSWord, b: &BSWord) -> Result<(), WordError> {
    if a.m != b.m || a.n != b.n {
        return Err(WordError::ParameterMismatch(a.m, a.n, b.m, b.n));
    }
    Ok(())
}

fn push_merged(out: &mut Vec<Syllable>, s: Syllable) {
    match s {
        Syllable::A(r) => {
            if r.is_zero() {
                return;
            }
            if let Some(Syllable::A(prev)) = out.last_mut() {
                *prev += r;
                if prev.is_zero() {
                    out.pop();
                }
            } else {
                out.push(Syllable::A(r));
            }
        }
        t => out.push(t),
    }
}

/// Decides whether `t^{left} a^r t^{-left}` is a pinch and returns the
/// replacement exponent. Abstracted so that tests can inject faulty rules.
pub trait PinchRule {
    fn pinch(&self, m: i64, n: i64, left: i8, r: &BigInt) -> Option<BigInt>;
}

/// The defining relation: `t a^{mk} t⁻¹ = a^{nk}`.
pub struct StandardPinch;

impl PinchRule for StandardPinch {
    fn pinch(&self, m: i64, n: i64, left: i8, r: &BigInt) -> Option<BigInt> {
        let (from, to) = if left == 1 { (m, n) } else { (n, m) };
        let (q, rem) = r.div_rem(&BigInt::from(from));
        if rem.is_zero() {
            Some(q * BigInt::from(to))
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteStep {
    /// Syllable index, in the partially reduced word, where the pinch starts.
    pub position: usize,
    pub rule: String,
    pub before: String,
    pub after: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalForm {
    pub word: BSWord,
    pub reduced: bool,
}

impl NormalForm {
    pub fn is_identity(&self) -> bool {
        self.word.syllables.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reduction {
    pub input: BSWord,
    pub normal_form: NormalForm,
    pub steps: Vec<RewriteStep>,
}

pub fn reduce(w: &BSWord) -> NormalForm {
    reduce_with(w, &StandardPinch, false).normal_form
}

/// Reduction together with the list of rewrite steps.
pub fn reduce_traced(w: &BSWord) -> Reduction {
    reduce_with(w, &StandardPinch, true)
}

pub fn reduce_with(w: &BSWord, rule: &dyn PinchRule, trace: bool) -> Reduction {
    let mut out: Vec<Syllable> = Vec::with_capacity(w.syllables.len());
    let mut steps = Vec::new();
    for s in &w.syllables {
        match s {
            Syllable::A(_) => push_merged(&mut out, s.clone()),
            Syllable::T(e) => {
                let e = *e;
                let len = out.len();
                // t^{-e} t^{e}
                if let Some(Syllable::T(prev)) = out.last() {
                    if *prev == -e {
                        if trace {
                            steps.push(RewriteStep {
                                position: len - 1,
                                rule: "free cancellation".into(),
                                before: word_string(&[Syllable::T(*prev), Syllable::T(e)]),
                                after: "1".into(),
                            });
                        }
                        out.pop();
                        continue;
                    }
                }
                if len >= 2 {
                    if let (Syllable::T(left), Syllable::A(r)) = (&out[len - 2], &out[len - 1]) {
                        if *left == -e {
                            if let Some(r2) = rule.pinch(w.m, w.n, *left, r) {
                                if trace {
                                    let rule_name = if *left == 1 {
                                        "t a^{mk} t^-1 -> a^{nk}"
                                    } else {
                                        "t^-1 a^{nk} t -> a^{mk}"
                                    };
                                    steps.push(RewriteStep {
                                        position: len - 2,
                                        rule: rule_name.into(),
                                        before: word_string(&[
                                            Syllable::T(*left),
                                            Syllable::A(r.clone()),
                                            Syllable::T(e),
                                        ]),
                                        after: word_string(&[Syllable::A(r2.clone())]),
                                    });
                                }
                                out.truncate(len - 2);
                                push_merged(&mut out, Syllable::A(r2));
                                continue;
                            }
                        }
                    }
                }
                out.push(Syllable::T(e));
            }
        }
    }
    Reduction {
        input: w.clone(),
        normal_form: NormalForm {
            word: BSWord {
                m: w.m,
                n: w.n,
                syllables: out,
            },
            reduced: true,
        },
        steps,
    }
}

pub fn is_trivial(w: &BSWord) -> bool {
    is_trivial_with(w, &StandardPinch)
}

pub fn is_trivial_with(w: &BSWord, rule: &dyn PinchRule) -> bool {
    reduce_with(w, rule, false).normal_form.is_identity()
}

pub fn equal(w1: &BSWord, w2: &BSWord) -> Result<bool, WordError> {
    Ok(is_trivial(&w1.concat(&w2.inverse())?))
}

pub fn equal_with(w1: &BSWord, w2: &BSWord, rule: &dyn PinchRule) -> Result<bool, WordError> {
    Ok(is_trivial_with(&w1.concat(&w2.inverse())?, rule))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NontrivialityCertificate {
    pub normal_form: NormalForm,
    pub t_syllables: usize,
    pub pinch_free: bool,
    pub nontrivial: bool,
}

pub fn certify_nontrivial(w: &BSWord) -> NontrivialityCertificate {
    let nf = reduce(w);
    let t = nf.word.t_count();
    let nontrivial = !nf.is_identity();
    NontrivialityCertificate {
        pinch_free: nf.word.is_pinch_free(),
        t_syllables: t,
        nontrivial,
        normal_form: nf,
    }
}

fn t_power(q: i64) -> Vec<Syllable> {
    let e = if q >= 0 { 1 } else { -1 };
    (0..q.unsigned_abs()).map(|_| Syllable::T(e)).collect()
}

/// The commutator `g^q h^{-p} g^{-q} h^{-p} g^q h^p g^{-q} h^p` with `g = t`, `h = a`.
pub fn obstruction_commutator(
    m: i64,
    n: i64,
    p: i64,
    q: i64,
) -> Result<(BSWord, NontrivialityCertificate), WordError> {
    check_parameters(m, n)?;
    let mut failures = Vec::new();
    if p % m == 0 {
        failures.push(format!("p = {p} is divisible by m = {m}"));
    }
    if p % n == 0 {
        failures.push(format!("p = {p} is divisible by n = {n}"));
    }
    if q < 1 {
        failures.push(format!("q = {q} must be positive"));
    }
    if !failures.is_empty() {
        return Err(WordError::Hypothesis(failures.join("; ")));
    }
    let a = |r: i64| vec![Syllable::A(BigInt::from(r))];
    let mut s = Vec::new();
    for block in [
        t_power(q),
        a(-p),
        t_power(-q),
        a(-p),
        t_power(q),
        a(p),
        t_power(-q),
        a(p),
    ] {
        s.extend(block);
    }
    let w = BSWord::new(m, n, s)?;
    let cert = certify_nontrivial(&w);
    Ok((w, cert))
}

/// `[t a t⁻¹, a] = t a⁻¹ t⁻¹ a⁻¹ t a t⁻¹ a`, with `[x, y] = x⁻¹ y⁻¹ x y`.
pub fn interval_commutator(m: i64, n: i64) -> Result<(BSWord, NontrivialityCertificate), WordError> {
    let w = BSWord::parse(m, n, "t a^-1 t^-1 a^-1 t a t^-1 a")?;
    let cert = certify_nontrivial(&w);
    Ok((w, cert))
}

/// Every pinch-free word `a^{r_k} t^{e_k} ⋯ t^{e_1} a^{r_0}` with at most
/// `max_t` stable letters and `|r_i| ≤ bound`, except the identity.
///
/// Order: by number of stable letters, then lexicographically on
/// `(r_k, e_k, …, e_1, r_0)` with `e = -1` before `e = +1`.
pub fn enumerate_reduced(m: i64, n: i64, max_t: usize, bound: u32) -> ReducedWords {
    ReducedWords {
        m,
        n,
        max_t,
        bound: bound as i64,
        k: 0,
        digits: Vec::new(),
        started: false,
        done: false,
    }
}

pub struct ReducedWords {
    m: i64,
    n: i64,
    max_t: usize,
    bound: i64,
    k: usize,
    /// digits[2i] are a-exponents, digits[2i+1] are t-signs
    digits: Vec<i64>,
    started: bool,
    done: bool,
}

impl ReducedWords {
    fn min_digit(&self, pos: usize) -> i64 {
        if pos.is_multiple_of(2) {
            -self.bound
        } else {
            -1
        }
    }

    fn reset(&mut self, k: usize) {
        self.k = k;
        self.digits = (0..2 * k + 1).map(|p| self.min_digit(p)).collect();
    }

    /// Odometer increment at `pos`, clearing everything to its right.
    /// Returns false on overflow of the whole length class.
    fn bump(&mut self, pos: usize) -> bool {
        for p in pos + 1..self.digits.len() {
            self.digits[p] = self.min_digit(p);
        }
        let mut p = pos as isize;
        while p >= 0 {
            let i = p as usize;
            let max = if i.is_multiple_of(2) { self.bound } else { 1 };
            if self.digits[i] < max {
                self.digits[i] += if i.is_multiple_of(2) { 1 } else { 2 };
                return true;
            }
            self.digits[i] = self.min_digit(i);
            p -= 1;
        }
        false
    }

    /// First position whose digit completes a pinch.
    fn first_violation(&self) -> Option<usize> {
        let d = &self.digits;
        let mut i = 2;
        while i + 1 < d.len() {
            let (el, r, er) = (d[i - 1], d[i], d[i + 1]);
            if el == -er {
                let div = if el == 1 { self.m } else { self.n };
                if r % div == 0 {
                    return Some(i + 1);
                }
            }
            i += 2;
        }
        None
    }

    fn is_identity(&self) -> bool {
        self.k == 0 && self.digits[0] == 0
    }

    fn advance(&mut self, mut pos: Option<usize>) -> bool {
        loop {
            let ok = match pos {
                None => true,
                Some(p) => self.bump(p),
            };
            if !ok {
                if self.k >= self.max_t {
                    return false;
                }
                let k = self.k + 1;
                self.reset(k);
            }
            match self.first_violation() {
                Some(p) => pos = Some(p),
                None if self.is_identity() => pos = Some(self.digits.len() - 1),
                None => return true,
            }
        }
    }

    fn current(&self) -> NormalForm {
        let mut s = Vec::with_capacity(self.digits.len());
        for (i, &d) in self.digits.iter().enumerate() {
            if i % 2 == 0 {
                if d != 0 {
                    s.push(Syllable::A(BigInt::from(d)));
                }
            } else {
                s.push(Syllable::T(d as i8));
            }
        }
        NormalForm {
            word: BSWord {
                m: self.m,
                n: self.n,
                syllables: s,
            },
            reduced: true,
        }
    }
}

impl Iterator for ReducedWords {
    type Item = NormalForm;

    fn next(&mut self) -> Option<NormalForm> {
        if self.done || self.bound < 1 && self.max_t == 0 {
            return None;
        }
        let ok = if !self.started {
            self.started = true;
            self.reset(0);
            self.advance(None)
        } else {
            let last = self.digits.len() - 1;
            self.advance(Some(last))
        };
        if !ok {
            self.done = true;
            return None;
        }
        Some(self.current())
    }
}

/// Exact affine map `x ↦ slope·x + offset`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineMap {
    pub slope: Rational,
    pub offset: Rational,
}

impl AffineMap {
    pub fn identity() -> Self {
        AffineMap {
            slope: int(1),
            offset: int(0),
        }
    }

    /// `self ∘ other`.
    pub fn then_after(&self, other: &AffineMap) -> AffineMap {
        AffineMap {
            slope: &self.slope * &other.slope,
            offset: &self.slope * &other.offset + &self.offset,
        }
    }
}

/// The faithful affine representation of BS(1,n): `t ↦ n x`, `a ↦ x + 1`.
pub fn affine_image(w: &BSWord) -> AffineMap {
    let n = int(w.n);
    let mut acc = AffineMap::identity();
    for s in &w.syllables {
        let g = match s {
            Syllable::T(1) => AffineMap {
                slope: n.clone(),
                offset: int(0),
            },
            Syllable::T(_) => AffineMap {
                slope: n.recip(),
                offset: int(0),
            },
            Syllable::A(r) => AffineMap {
                slope: int(1),
                offset: Rational::from_integer(r.clone()),
            },
        };
        acc = acc.then_after(&g);
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleWitness {
    pub left: String,
    pub right: String,
    pub rewriting_says_equal: bool,
    pub affine_says_equal: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub max_letters: usize,
    pub strings: u64,
    pub comparisons: u64,
    pub disagreements: u64,
    pub witnesses: Vec<OracleWitness>,
}

const LETTERS: [(i8, i8); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

fn letters_word(n: i64, letters: &[usize]) -> BSWord {
    let syllables = letters
        .iter()
        .map(|&l| match LETTERS[l] {
            (e, 0) => Syllable::T(e),
            (_, r) => Syllable::A(BigInt::from(r)),
        })
        .collect();
    BSWord {
        m: 1,
        n,
        syllables,
    }
}

/// Exhaustive check of `equal` against the affine model of BS(1,2): for every
/// string `w` over `{t, t⁻¹, a, a⁻¹}` of at most `max_letters` letters and every
/// split `w = u·v`, `equal(u, v⁻¹)` must agree with equality of the affine maps.
pub fn bs12_oracle(max_letters: usize, rule: &dyn PinchRule) -> OracleSummary {
    let mut summary = OracleSummary {
        max_letters,
        strings: 0,
        comparisons: 0,
        disagreements: 0,
        witnesses: Vec::new(),
    };
    let mut letters = Vec::with_capacity(max_letters);
    for len in 0..=max_letters {
        letters.clear();
        letters.resize(len, 0usize);
        loop {
            summary.strings += 1;
            for split in 0..=len {
                let u = letters_word(2, &letters[..split]);
                let v_inv = letters_word(2, &letters[split..]).inverse();
                let rewriting = equal_with(&u, &v_inv, rule).expect("same group");
                let affine = affine_image(&u) == affine_image(&v_inv);
                summary.comparisons += 1;
                if rewriting != affine {
                    summary.disagreements += 1;
                    if summary.witnesses.len() < 10 {
                        summary.witnesses.push(OracleWitness {
                            left: u.to_string(),
                            right: v_inv.to_string(),
                            rewriting_says_equal: rewriting,
                            affine_says_equal: affine,
                        });
                    }
                }
            }
            // next string of this length
            let mut carry = true;
            let mut i = len;
            while carry && i > 0 {
                i -= 1;
                if letters[i] < 3 {
                    letters[i] += 1;
                    carry = false;
                } else {
                    letters[i] = 0;
                }
            }
            if carry {
                break;
            }
        }
    }
    summary
}

/// `t a^r t⁻¹` is treated as a pinch when `n | r` instead of `m | r`.
pub struct FlippedDivisibility;

impl PinchRule for FlippedDivisibility {
    fn pinch(&self, m: i64, n: i64, left: i8, r: &BigInt) -> Option<BigInt> {
        if left == 1 {
            let rem = r.mod_floor(&BigInt::from(n));
            rem.is_zero().then(|| r * BigInt::from(n) / BigInt::from(m))
        } else {
            StandardPinch.pinch(m, n, left, r)
        }
    }
}
