//! Free groups, the `A_ij`/`B_ij` automorphisms of `F_n`, and abstract
//! presentations of MC(n) type with their commutativity graphs.
//!
//! Products of automorphisms compose as functions: `(fg)(e) = f(g(e))`.
//! The commutator is pinned to `[x, y] = x⁻¹y⁻¹xy` by [`derive_convention`].

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PresentationError {
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("letter {letter} out of range for rank {rank}")]
    LetterOutOfRange { letter: i32, rank: usize },
    #[error("no inverse recorded for {0}")]
    NoInverse(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("precondition: {0}")]
    Precondition(String),
}

type R<T> = Result<T, PresentationError>;

/// Reduced word over `e_1..e_n`; letter `i` is `e_i`, `-i` is `e_i⁻¹`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FreeWord(Vec<i32>);

impl FreeWord {
    pub fn identity() -> Self {
        FreeWord(Vec::new())
    }

    pub fn gen(i: i32) -> Self {
        FreeWord(vec![i])
    }

    /// Freely reduces arbitrary letters (0 is rejected).
    pub fn new(letters: impl IntoIterator<Item = i32>) -> Self {
        let mut out: Vec<i32> = Vec::new();
        for l in letters {
            assert!(l != 0, "letter 0 is not a generator");
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        FreeWord(out)
    }

    pub fn letters(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        FreeWord(self.0.iter().rev().map(|l| -l).collect())
    }

    pub fn mul(&self, other: &FreeWord) -> Self {
        FreeWord::new(self.0.iter().chain(&other.0).copied())
    }

    pub fn max_letter(&self) -> usize {
        self.0.iter().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0)
    }
}

impl fmt::Display for FreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|&l| if l > 0 { format!("e{l}") } else { format!("e{}^-1", -l) })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Cancels one adjacent inverse pair at a time, choosing among the available
/// pairs with `pick(count)`; used to check that the normal form does not
/// depend on the reduction order.
pub fn reduce_with_order(letters: &[i32], mut pick: impl FnMut(usize) -> usize) -> FreeWord {
    let mut w = letters.to_vec();
    loop {
        let spots: Vec<usize> = (0..w.len().saturating_sub(1)).filter(|&i| w[i] == -w[i + 1]).collect();
        if spots.is_empty() {
            return FreeWord(w);
        }
        let i = spots[pick(spots.len()) % spots.len()];
        w.drain(i..i + 2);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeAutomorphism {
    pub rank: usize,
    pub label: String,
    pub images: Vec<FreeWord>,
    /// images of the inverse, when known
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse_images: Option<Vec<FreeWord>>,
}

impl FreeAutomorphism {
    pub fn identity(rank: usize) -> Self {
        let images: Vec<FreeWord> = (1..=rank as i32).map(FreeWord::gen).collect();
        FreeAutomorphism {
            rank,
            label: "id".into(),
            inverse_images: Some(images.clone()),
            images,
        }
    }

    pub fn from_images(label: impl Into<String>, images: Vec<FreeWord>) -> R<Self> {
        let rank = images.len();
        for w in &images {
            if let Some(&l) = w.letters().iter().find(|l| l.unsigned_abs() as usize > rank) {
                return Err(PresentationError::LetterOutOfRange { letter: l, rank });
            }
        }
        Ok(FreeAutomorphism {
            rank,
            label: label.into(),
            images,
            inverse_images: None,
        })
    }

    fn elementary(rank: usize, i: usize, label: String, image: FreeWord, inv: FreeWord) -> R<Self> {
        let mut a = FreeAutomorphism::identity(rank);
        a.label = label;
        a.images[i - 1] = image;
        a.inverse_images.as_mut().unwrap()[i - 1] = inv;
        Ok(a)
    }

    fn check_pair(rank: usize, i: usize, j: usize) -> R<()> {
        if i == j || i == 0 || j == 0 || i > rank || j > rank {
            return Err(PresentationError::Precondition(format!(
                "need distinct indices in 1..={rank}, got ({i}, {j})"
            )));
        }
        Ok(())
    }

    /// `e_i ↦ e_i e_j`; inverse `e_i ↦ e_i e_j⁻¹`.
    pub fn a(rank: usize, i: usize, j: usize) -> R<Self> {
        Self::check_pair(rank, i, j)?;
        let (ei, ej) = (i as i32, j as i32);
        Self::elementary(rank, i, format!("A_{i}{j}"), FreeWord::new([ei, ej]), FreeWord::new([ei, -ej]))
    }

    /// `e_i ↦ e_j e_i`; inverse `e_i ↦ e_j⁻¹ e_i`.
    pub fn b(rank: usize, i: usize, j: usize) -> R<Self> {
        Self::check_pair(rank, i, j)?;
        let (ei, ej) = (i as i32, j as i32);
        Self::elementary(rank, i, format!("B_{i}{j}"), FreeWord::new([ej, ei]), FreeWord::new([-ej, ei]))
    }

    pub fn inverse(&self) -> R<Self> {
        let inv = self
            .inverse_images
            .clone()
            .ok_or_else(|| PresentationError::NoInverse(self.label.clone()))?;
        Ok(FreeAutomorphism {
            rank: self.rank,
            label: format!("{}^-1", self.label),
            images: inv,
            inverse_images: Some(self.images.clone()),
        })
    }
}

/// Substitutes the images of `aut` into `w` and reduces.
pub fn apply(aut: &FreeAutomorphism, w: &FreeWord) -> R<FreeWord> {
    apply_images(&aut.images, w)
}

fn apply_images(images: &[FreeWord], w: &FreeWord) -> R<FreeWord> {
    let rank = images.len();
    let mut out = Vec::new();
    for &l in w.letters() {
        let k = l.unsigned_abs() as usize;
        if k > rank {
            return Err(PresentationError::LetterOutOfRange { letter: l, rank });
        }
        let img = &images[k - 1];
        if l > 0 {
            out.extend_from_slice(img.letters());
        } else {
            out.extend(img.letters().iter().rev().map(|x| -x));
        }
    }
    Ok(FreeWord::new(out))
}

/// `f ∘ g`: images `f(g(e_k))`; the inverse `g⁻¹ ∘ f⁻¹` is carried along.
pub fn compose_aut(f: &FreeAutomorphism, g: &FreeAutomorphism) -> R<FreeAutomorphism> {
    if f.rank != g.rank {
        return Err(PresentationError::RankMismatch(f.rank, g.rank));
    }
    let images = g.images.iter().map(|w| apply(f, w)).collect::<R<Vec<_>>>()?;
    let inverse_images = match (&f.inverse_images, &g.inverse_images) {
        (Some(fi), Some(gi)) => Some(fi.iter().map(|w| apply_images(gi, w)).collect::<R<Vec<_>>>()?),
        _ => None,
    };
    Ok(FreeAutomorphism {
        rank: f.rank,
        label: format!("{} {}", f.label, g.label),
        images,
        inverse_images,
    })
}

pub fn aut_equal(f: &FreeAutomorphism, g: &FreeAutomorphism) -> R<bool> {
    if f.rank != g.rank {
        return Err(PresentationError::RankMismatch(f.rank, g.rank));
    }
    Ok(f.images == g.images)
}

/// Left-to-right product `x_1 x_2 ⋯ x_k`.
pub fn product(rank: usize, factors: &[&FreeAutomorphism]) -> R<FreeAutomorphism> {
    factors
        .iter()
        .try_fold(FreeAutomorphism::identity(rank), |acc, f| compose_aut(&acc, f))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CommutatorConvention {
    /// `[x, y] = x y x⁻¹ y⁻¹`
    #[serde(rename = "x y x^-1 y^-1")]
    XYXinvYinv,
    /// `[x, y] = x⁻¹ y⁻¹ x y`
    #[serde(rename = "x^-1 y^-1 x y")]
    XinvYinvXY,
}

impl CommutatorConvention {
    pub const ALL: [CommutatorConvention; 2] = [CommutatorConvention::XYXinvYinv, CommutatorConvention::XinvYinvXY];

    pub fn commutator(self, x: &FreeAutomorphism, y: &FreeAutomorphism) -> R<FreeAutomorphism> {
        let (xi, yi) = (x.inverse()?, y.inverse()?);
        match self {
            CommutatorConvention::XYXinvYinv => product(x.rank, &[x, y, &xi, &yi]),
            CommutatorConvention::XinvYinvXY => product(x.rank, &[&xi, &yi, x, y]),
        }
    }
}

impl fmt::Display for CommutatorConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CommutatorConvention::XYXinvYinv => "x y x^-1 y^-1",
            CommutatorConvention::XinvYinvXY => "x^-1 y^-1 x y",
        })
    }
}

pub const PINNED_CONVENTION: CommutatorConvention = CommutatorConvention::XinvYinvXY;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConventionCandidate {
    pub convention: CommutatorConvention,
    /// `[A_12, A_23]` as images of the basis
    pub commutator_images: Vec<FreeWord>,
    pub satisfies_ii: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConventionDerivation {
    pub rank: usize,
    pub candidates: Vec<ConventionCandidate>,
    pub chosen: Option<CommutatorConvention>,
}

/// Evaluates both commutator conventions on the instance `i, j, k = 1, 2, 3`
/// of relation (ii) and keeps the one under which it holds.
pub fn derive_convention(rank: usize) -> R<ConventionDerivation> {
    if rank < 3 {
        return Err(PresentationError::Precondition("need rank >= 3 for an instance of (ii)".into()));
    }
    let a = |i, j| FreeAutomorphism::a(rank, i, j);
    let (a12, a23, a13) = (a(1, 2)?, a(2, 3)?, a(1, 3)?);
    let mut candidates = Vec::new();
    for c in CommutatorConvention::ALL {
        let first = c.commutator(&a12, &a23)?;
        let second = c.commutator(&a12, &a23.inverse()?)?;
        let ok = aut_equal(&first, &a13.inverse()?)? && aut_equal(&second, &a13)?;
        candidates.push(ConventionCandidate {
            convention: c,
            commutator_images: first.images,
            satisfies_ii: ok,
        });
    }
    let passing: Vec<_> = candidates.iter().filter(|c| c.satisfies_ii).map(|c| c.convention).collect();
    Ok(ConventionDerivation {
        rank,
        chosen: (passing.len() == 1).then(|| passing[0]),
        candidates,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyCount {
    pub relation: String,
    pub checked: usize,
    pub passed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutFnReport {
    pub n: usize,
    pub convention: CommutatorConvention,
    pub composition: String,
    pub families: Vec<FamilyCount>,
    pub failures: Vec<String>,
}

impl AutFnReport {
    pub fn all_pass(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn total_checked(&self) -> usize {
        self.families.iter().map(|f| f.checked).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    A,
    B,
}

impl Family {
    fn gen(self, n: usize, i: usize, j: usize) -> FreeAutomorphism {
        match self {
            Family::A => FreeAutomorphism::a(n, i, j),
            Family::B => FreeAutomorphism::b(n, i, j),
        }
        .expect("valid indices")
    }
}

/// Checks relations (i)–(iv) for every admissible index tuple.
pub fn verify_autfn_relations(n: usize) -> AutFnReport {
    verify_autfn_relations_with(n, PINNED_CONVENTION)
}

pub fn verify_autfn_relations_with(n: usize, conv: CommutatorConvention) -> AutFnReport {
    let idx: Vec<usize> = (1..=n).collect();
    let pairs: Vec<(usize, usize)> = idx
        .iter()
        .flat_map(|&i| idx.iter().filter(move |&&j| j != i).map(move |&j| (i, j)))
        .collect();
    let triples: Vec<(usize, usize, usize)> = pairs
        .iter()
        .flat_map(|&(i, j)| idx.iter().filter(move |&&k| k != i && k != j).map(move |&k| (i, j, k)))
        .collect();
    let quads: Vec<(usize, usize, usize, usize)> = pairs
        .iter()
        .flat_map(|&(i, j)| {
            pairs
                .iter()
                .filter(move |&&(k, l)| k != i && k != j && l != i && l != j)
                .map(move |&(k, l)| (i, j, k, l))
        })
        .collect();

    let mut families = Vec::new();
    let mut failures = Vec::new();
    let mut record = |name: &str, results: Vec<Option<String>>| {
        let checked = results.len();
        let bad: Vec<String> = results.into_iter().flatten().collect();
        families.push(FamilyCount {
            relation: name.into(),
            checked,
            passed: checked - bad.len(),
        });
        failures.extend(bad);
    };
    let eq = |x: R<FreeAutomorphism>, y: R<FreeAutomorphism>| -> bool {
        matches!((x, y), (Ok(x), Ok(y)) if x.images == y.images)
    };

    for (fam, tag) in [(Family::A, "A"), (Family::B, "B")] {
        let res = quads
            .par_iter()
            .map(|&(i, j, k, l)| {
                let (x, y) = (fam.gen(n, i, j), fam.gen(n, k, l));
                (!eq(compose_aut(&x, &y), compose_aut(&y, &x)))
                    .then(|| format!("(i) {tag}_{i}{j} {tag}_{k}{l} != {tag}_{k}{l} {tag}_{i}{j}"))
            })
            .collect();
        record(&format!("(i) {tag}"), res);
    }
    for (fam, tag, name) in [(Family::A, "A", "(ii)"), (Family::B, "B", "(iii)")] {
        let res = triples
            .par_iter()
            .flat_map_iter(|&(i, j, k)| {
                let (x, y, z) = (fam.gen(n, i, j), fam.gen(n, j, k), fam.gen(n, i, k));
                let yi = y.inverse().unwrap();
                let zi = z.inverse().unwrap();
                let first = (!eq(conv.commutator(&x, &y), Ok(zi)))
                    .then(|| format!("{name} [{tag}_{i}{j}, {tag}_{j}{k}] != {tag}_{i}{k}^-1"));
                let second = (!eq(conv.commutator(&x, &yi), Ok(z)))
                    .then(|| format!("{name} [{tag}_{i}{j}, {tag}_{j}{k}^-1] != {tag}_{i}{k}"));
                [first, second]
            })
            .collect();
        record(&format!("{name} {tag}"), res);
    }
    for (fam, tag) in [(Family::A, "A"), (Family::B, "B")] {
        let res = pairs
            .par_iter()
            .map(|&(i, j)| {
                let x = fam.gen(n, i, j);
                let yi = fam.gen(n, j, i).inverse().unwrap();
                (!eq(product(n, &[&x, &yi, &x]), product(n, &[&yi, &x, &yi])))
                    .then(|| format!("(iv) braid fails for {tag}_{i}{j}, {tag}_{j}{i}^-1"))
            })
            .collect();
        record(&format!("(iv) {tag}"), res);
    }
    AutFnReport {
        n,
        convention: conv,
        composition: "(fg)(e) = f(g(e))".into(),
        families,
        failures,
    }
}

/// A generator label, possibly inverted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub label: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub inverse: bool,
}

impl Letter {
    pub fn new(label: impl Into<String>) -> Self {
        Letter {
            label: label.into(),
            inverse: false,
        }
    }

    pub fn inv(label: impl Into<String>) -> Self {
        Letter {
            label: label.into(),
            inverse: true,
        }
    }

    pub fn inverted(&self) -> Self {
        Letter {
            label: self.label.clone(),
            inverse: !self.inverse,
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverse {
            write!(f, "{}^-1", self.label)
        } else {
            write!(f, "{}", self.label)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Relation {
    /// `xy = yx`
    Commuting { x: String, y: String },
    /// `xyx = yxy`
    Braid { x: Letter, y: Letter },
    /// `[x, y] = z`
    CommutatorIdentity { x: Letter, y: Letter, equals: Letter },
}

impl Relation {
    fn labels(&self) -> Vec<&str> {
        match self {
            Relation::Commuting { x, y } => vec![x, y],
            Relation::Braid { x, y } => vec![&x.label, &y.label],
            Relation::CommutatorIdentity { x, y, equals } => vec![&x.label, &y.label, &equals.label],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentationSchema {
    pub name: String,
    pub generators: Vec<String>,
    pub relations: Vec<Relation>,
}

fn unordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl PresentationSchema {
    pub fn new(name: impl Into<String>, generators: Vec<String>, relations: Vec<Relation>) -> R<Self> {
        let s = PresentationSchema {
            name: name.into(),
            generators,
            relations,
        };
        s.validate()?;
        Ok(s)
    }

    /// Distinct labels, declared references, no pair both commuting and
    /// braid, no self-relations.
    pub fn validate(&self) -> R<()> {
        let mut seen = BTreeSet::new();
        for g in &self.generators {
            if !seen.insert(g.as_str()) {
                return Err(PresentationError::InvalidSchema(format!("duplicate generator {g}")));
            }
        }
        for r in &self.relations {
            for l in r.labels() {
                if !seen.contains(l) {
                    return Err(PresentationError::InvalidSchema(format!("undeclared generator {l}")));
                }
            }
            if let Relation::Commuting { x, y } = r {
                if x == y {
                    return Err(PresentationError::InvalidSchema(format!("self-commuting relation on {x}")));
                }
            }
            if let Relation::Braid { x, y } = r {
                if x.label == y.label {
                    return Err(PresentationError::InvalidSchema(format!("self-braid relation on {}", x.label)));
                }
            }
        }
        let comm = self.commuting_pairs();
        if let Some(p) = self.braid_pairs().iter().find(|p| comm.contains(p)) {
            return Err(PresentationError::InvalidSchema(format!(
                "pair ({}, {}) is both commuting and braid",
                p.0, p.1
            )));
        }
        Ok(())
    }

    pub fn commuting_pairs(&self) -> BTreeSet<(String, String)> {
        self.relations
            .iter()
            .filter_map(|r| match r {
                Relation::Commuting { x, y } => Some(unordered(x, y)),
                _ => None,
            })
            .collect()
    }

    pub fn braid_pairs(&self) -> BTreeSet<(String, String)> {
        self.relations
            .iter()
            .filter_map(|r| match r {
                Relation::Braid { x, y } => Some(unordered(&x.label, &y.label)),
                _ => None,
            })
            .collect()
    }

    fn find_braid(&self, x: &str, y: &str) -> Option<(&Letter, &Letter)> {
        self.relations.iter().find_map(|r| match r {
            Relation::Braid { x: a, y: b } if !a.inverse && !b.inverse => {
                if a.label == x && b.label == y || a.label == y && b.label == x {
                    Some((a, b))
                } else {
                    None
                }
            }
            _ => None,
        })
    }
}

fn commuting(x: &str, y: &str) -> Relation {
    Relation::Commuting {
        x: x.into(),
        y: y.into(),
    }
}

fn braid(x: &str, y: &str) -> Relation {
    Relation::Braid {
        x: Letter::new(x),
        y: Letter::new(y),
    }
}

/// Generators `a_i, b_i` (`i = 1..n`) and `c_j` (`j = 1..n−1`) with the
/// commuting and braid relations of an MC(n) group, under the given labels.
fn mc_like(name: String, n: usize, labels: [&str; 3]) -> R<PresentationSchema> {
    let [la, lb, lc] = labels;
    let a = |i: usize| format!("{la}_{i}");
    let b = |i: usize| format!("{lb}_{i}");
    let c = |j: usize| format!("{lc}_{j}");
    let mut gens: Vec<String> = (1..=n).map(a).chain((1..=n).map(b)).collect();
    gens.extend((1..n).map(c));
    let mut rels = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            rels.push(commuting(&a(i), &a(j)));
            rels.push(commuting(&b(i), &b(j)));
        }
    }
    for i in 1..n {
        for j in i + 1..n {
            rels.push(commuting(&c(i), &c(j)));
        }
    }
    for i in 1..=n {
        for j in 1..n {
            rels.push(commuting(&a(i), &c(j)));
        }
    }
    for i in 1..=n {
        for j in 1..=n {
            if i != j {
                rels.push(commuting(&a(i), &b(j)));
            }
        }
    }
    for i in 1..=n {
        for j in 1..n {
            if j != i && j + 1 != i {
                rels.push(commuting(&b(i), &c(j)));
            }
        }
    }
    for i in 1..=n {
        rels.push(braid(&a(i), &b(i)));
    }
    for i in 1..=n {
        for j in [i.wrapping_sub(1), i] {
            if (1..n).contains(&j) {
                rels.push(braid(&b(i), &c(j)));
            }
        }
    }
    PresentationSchema::new(name, gens, rels)
}

pub fn mc_schema(n: usize) -> R<PresentationSchema> {
    if n < 2 {
        return Err(PresentationError::Precondition(format!("MC(n) needs n >= 2, got {n}")));
    }
    mc_like(format!("MC({n})"), n, ["a", "b", "c"])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Definition {
    pub label: String,
    pub word: Vec<Letter>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwistedSchema {
    pub twist: Letter,
    pub definitions: Vec<Definition>,
    pub schema: PresentationSchema,
}

/// From an MC(n) schema, the generators `A_i = a_i u`, `B_i = b_i u`
/// (`i < n`) and `C_j = c_j u` (`j < n−1`) with `u = a_n⁻¹`, which satisfy
/// the MC(n−1) relations because `u` commutes with every generator they use.
pub fn twisted_generators(schema: &PresentationSchema) -> R<TwistedSchema> {
    schema.validate()?;
    let n = (1..)
        .take_while(|i| schema.generators.contains(&format!("a_{i}")))
        .count();
    if n < 3 || mc_schema(n)?.relations != schema.relations {
        return Err(PresentationError::Precondition(
            "twisting needs an MC(n) schema with n >= 3".into(),
        ));
    }
    let u = format!("a_{n}");
    let comm = schema.commuting_pairs();
    let mut used: Vec<String> = (1..n).flat_map(|i| [format!("a_{i}"), format!("b_{i}")]).collect();
    used.extend((1..n - 1).map(|j| format!("c_{j}")));
    for g in &used {
        if !comm.contains(&unordered(g, &u)) {
            return Err(PresentationError::Precondition(format!("{u} does not commute with {g}")));
        }
    }
    let twist = Letter::inv(u);
    let mut definitions = Vec::new();
    for (small, big, count) in [("a", "A", n - 1), ("b", "B", n - 1), ("c", "C", n - 2)] {
        for i in 1..=count {
            definitions.push(Definition {
                label: format!("{big}_{i}"),
                word: vec![Letter::new(format!("{small}_{i}")), twist.clone()],
            });
        }
    }
    let inner = mc_like(format!("twisted MC({})", n - 1), n - 1, ["A", "B", "C"])?;
    Ok(TwistedSchema {
        twist,
        definitions,
        schema: inner,
    })
}

/// The `{A_ij}` part of the Aut(F_n) relations: commuting for disjoint index
/// pairs, commutator identities for chained pairs, braids for reversed pairs.
pub fn autfn_a_schema(n: usize) -> R<PresentationSchema> {
    if n < 2 {
        return Err(PresentationError::Precondition(format!("need n >= 2, got {n}")));
    }
    let l = |i: usize, j: usize| format!("A_{i}{j}");
    let mut gens = Vec::new();
    for i in 1..=n {
        for j in 1..=n {
            if i != j {
                gens.push(l(i, j));
            }
        }
    }
    let mut rels = Vec::new();
    for i in 1..=n {
        for j in 1..=n {
            for k in 1..=n {
                for m in 1..=n {
                    let disjoint = i != j && k != m && ![k, m].contains(&i) && ![k, m].contains(&j);
                    if disjoint && (i, j) < (k, m) {
                        rels.push(commuting(&l(i, j), &l(k, m)));
                    }
                }
                if i != j && j != k && i != k {
                    rels.push(Relation::CommutatorIdentity {
                        x: Letter::new(l(i, j)),
                        y: Letter::new(l(j, k)),
                        equals: Letter::inv(l(i, k)),
                    });
                    rels.push(Relation::CommutatorIdentity {
                        x: Letter::new(l(i, j)),
                        y: Letter::inv(l(j, k)),
                        equals: Letter::new(l(i, k)),
                    });
                }
            }
            if i < j {
                rels.push(Relation::Braid {
                    x: Letter::new(l(i, j)),
                    y: Letter::inv(l(j, i)),
                });
            }
        }
    }
    PresentationSchema::new(format!("A_ij of Aut(F_{n})"), gens, rels)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommGraph {
    pub vertices: Vec<String>,
    pub edges: Vec<(String, String)>,
}

impl CommGraph {
    pub fn from_schema(s: &PresentationSchema) -> Self {
        CommGraph {
            vertices: s.generators.clone(),
            edges: s.commuting_pairs().into_iter().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connectivity {
    pub connected: bool,
    pub components: Vec<Vec<String>>,
}

pub fn is_connected(g: &CommGraph) -> Connectivity {
    let index: BTreeMap<&str, usize> = g.vertices.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let mut adj = vec![Vec::new(); g.vertices.len()];
    for (x, y) in &g.edges {
        if let (Some(&i), Some(&j)) = (index.get(x.as_str()), index.get(y.as_str())) {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    let mut comp = vec![usize::MAX; g.vertices.len()];
    let mut components = Vec::new();
    for s in 0..g.vertices.len() {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = Vec::new();
        let mut queue = VecDeque::from([s]);
        comp[s] = id;
        while let Some(v) = queue.pop_front() {
            members.push(g.vertices[v].clone());
            for &w in &adj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = id;
                    queue.push_back(w);
                }
            }
        }
        components.push(members);
    }
    Connectivity {
        connected: components.len() <= 1,
        components,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum RewriteStep {
    Start { word: Vec<Letter> },
    Substitute { at: usize, from: Vec<Letter>, to: Vec<Letter>, word: Vec<Letter> },
    FreeReduce { word: Vec<Letter> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BraidConjugation {
    pub x: String,
    pub y: String,
    /// `(xy)⁻¹ y (xy) = y⁻¹ x⁻¹ y x y`
    pub word: Vec<Letter>,
    pub trace: Vec<RewriteStep>,
    pub equals_x: bool,
}

impl BraidConjugation {
    pub fn substitutions(&self) -> usize {
        self.trace.iter().filter(|s| matches!(s, RewriteStep::Substitute { .. })).count()
    }
}

fn reduce_letters(w: &[Letter]) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::new();
    for l in w {
        if out.last().is_some_and(|p| p.label == l.label && p.inverse != l.inverse) {
            out.pop();
        } else {
            out.push(l.clone());
        }
    }
    out
}

/// Rewrites `(xy)⁻¹ y (xy)` to `x` using `yxy = xyx` once.
pub fn braid_conjugator(schema: &PresentationSchema, x: &str, y: &str) -> R<BraidConjugation> {
    if schema.find_braid(x, y).is_none() {
        return Err(PresentationError::Precondition(format!("({x}, {y}) is not a braid pair of {}", schema.name)));
    }
    let (lx, ly) = (Letter::new(x), Letter::new(y));
    let word = vec![ly.inverted(), lx.inverted(), ly.clone(), lx.clone(), ly.clone()];
    let from = vec![ly.clone(), lx.clone(), ly.clone()];
    let to = vec![lx.clone(), ly.clone(), lx.clone()];
    let mut trace = vec![RewriteStep::Start { word: word.clone() }];
    let at = 2;
    let mut rewritten = word[..at].to_vec();
    rewritten.extend(to.iter().cloned());
    trace.push(RewriteStep::Substitute {
        at,
        from,
        to,
        word: rewritten.clone(),
    });
    let reduced = reduce_letters(&rewritten);
    let equals_x = reduced == vec![lx];
    trace.push(RewriteStep::FreeReduce { word: reduced });
    Ok(BraidConjugation {
        x: x.into(),
        y: y.into(),
        word,
        trace,
        equals_x,
    })
}
