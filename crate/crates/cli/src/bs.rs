use std::path::{Path, PathBuf};

use bsline::action::{
    self, action_hash_input, build_action_with, certify_word, default_x0, faithfulness_sweep, find_g_fixed_point,
    rotation_obstruction, verify_inclusions, ActionSpec, BSAction, Membership, Mode, PingPongTable,
};
use bsline::rational::{self, Rational};
use bsline::words::{self, bs12_oracle, enumerate_reduced, BSWord, StandardPinch};
use serde::{Deserialize, Serialize};

use crate::run::{parse_rational_arg, pre, sha256_hex, Ctx, Failure, FileRecord, Report, Status};

/// A ping-pong table bound to the action it was computed for.
#[derive(Debug, Serialize, Deserialize)]
pub struct TableFile {
    pub action_sha256: String,
    pub table: PingPongTable,
}

pub fn default_table_path(action: &Path) -> PathBuf {
    let stem = action.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "action".into());
    action.with_file_name(format!("{stem}.table.json"))
}

fn load_action(ctx: &Ctx, path: &Path) -> Result<(ActionSpec, BSAction), Failure> {
    let spec: ActionSpec = ctx.read_json(path)?;
    let act = BSAction::from_spec(&spec)?;
    Ok((spec, act))
}

fn spec_hash(spec: &ActionSpec) -> String {
    sha256_hex(action_hash_input(spec).as_bytes())
}

#[derive(Serialize)]
struct Constructed {
    m: i64,
    n: i64,
    #[serde(with = "rational::serde_rational")]
    a: Rational,
    #[serde(skip_serializing_if = "Option::is_none")]
    fourier_cutoff: Option<usize>,
    relation: action::RelationReport,
    action_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    written: Option<FileRecord>,
}

pub fn construct(ctx: &Ctx, m: i64, n: i64, a: &str, cutoff: Option<usize>, out: Option<&Path>) -> Result<Report, Failure> {
    let a = parse_rational_arg(a)?;
    let act = build_action_with(m, n, a.clone(), cutoff)?;
    let relation = match ctx.mode {
        Mode::Rational => act.relation_check_exact(1000)?,
        Mode::Float => act.relation_check(1000)?,
    };
    let spec = act.to_spec();
    let written = match out {
        Some(p) => Some(ctx.write_json(p, &spec)?),
        None => None,
    };
    if written.is_none() {
        return Report::ok(&spec);
    }
    Report::ok(&Constructed {
        m,
        n,
        a,
        fourier_cutoff: cutoff,
        relation,
        action_sha256: spec_hash(&spec),
        written,
    })
}

#[derive(Serialize)]
struct FactSummary<'a> {
    id: u8,
    statement: &'a str,
    verdict: Membership,
}

#[derive(Serialize)]
struct InclusionSummary<'a> {
    verified: bool,
    mode: Mode,
    facts: Vec<FactSummary<'a>>,
    table: FileRecord,
}

pub fn verify(ctx: &Ctx, action: &Path, out: Option<&Path>) -> Result<Report, Failure> {
    let (spec, act) = load_action(ctx, action)?;
    let table = verify_inclusions(&act, ctx.mode)?;
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| default_table_path(action));
    let file = TableFile {
        action_sha256: spec_hash(&spec),
        table,
    };
    let written = ctx.write_json(&out, &file)?;
    let facts = file.table.inclusions.iter().map(|f| FactSummary {
            id: f.id,
            statement: &f.statement,
            verdict: f.verdict,
        })
        .collect();
    let status = if file.table.verified {
        Status::Ok
    } else if file.table.inclusions.iter().any(|f| f.verdict == Membership::Outside) {
        Status::Violation
    } else {
        Status::Inconclusive
    };
    Report::new(
        &InclusionSummary {
            verified: file.table.verified,
            mode: ctx.mode,
            facts,
            table: written,
        },
        status,
    )
}

pub fn certify(ctx: &Ctx, action: &Path, word: &str, x0: Option<&str>, out: Option<&Path>) -> Result<Report, Failure> {
    let (_, act) = load_action(ctx, action)?;
    let w = BSWord::parse(act.m, act.n, word)?;
    let x0 = match x0 {
        Some(s) => parse_rational_arg(s)?,
        None => default_x0(),
    };
    let cert = certify_word(&act, &w, &x0, ctx.mode)?;
    if let Some(p) = out {
        ctx.write_json(p, &cert)?;
    }
    let status = if cert.is_nontrivial() { Status::Ok } else { Status::Inconclusive };
    Report::new(&cert, status)
}

#[derive(Serialize)]
struct Obstruction {
    rotation: action::RotationConstraint,
    #[serde(skip_serializing_if = "Option::is_none")]
    commutator: Option<words::NontrivialityCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    interval_commutator: Option<words::NontrivialityCertificate>,
}

pub fn obstruct(m: i64, n: i64, pq: Option<(i64, i64)>, interval: bool) -> Result<Report, Failure> {
    words::check_parameters(m, n)?;
    let rotation = rotation_obstruction(m, n)?;
    let commutator = match pq {
        Some((p, q)) => Some(words::obstruction_commutator(m, n, p, q)?.1),
        None => None,
    };
    let interval_commutator = if interval {
        Some(words::interval_commutator(m, n)?.1)
    } else {
        None
    };
    let nontrivial = commutator.iter().chain(&interval_commutator).all(|c| c.nontrivial);
    Report::new(
        &Obstruction {
            rotation,
            commutator,
            interval_commutator,
        },
        if nontrivial { Status::Ok } else { Status::Violation },
    )
}

pub fn reduce(m: i64, n: i64, word: &str) -> Result<Report, Failure> {
    let w = BSWord::parse(m, n, word)?;
    Report::ok(&words::reduce_traced(&w))
}

#[derive(Serialize)]
struct Equality {
    left: words::NormalForm,
    right: words::NormalForm,
    equal: bool,
}

pub fn equal(m: i64, n: i64, left: &str, right: &str) -> Result<Report, Failure> {
    let (l, r) = (BSWord::parse(m, n, left)?, BSWord::parse(m, n, right)?);
    Report::ok(&Equality {
        equal: words::equal(&l, &r)?,
        left: words::reduce(&l),
        right: words::reduce(&r),
    })
}

pub fn fixed_point(ctx: &Ctx, action: &Path, search: i64) -> Result<Report, Failure> {
    let (_, act) = load_action(ctx, action)?;
    Report::ok(&find_g_fixed_point(&act.g, act.m, search)?)
}

#[derive(Serialize)]
struct FaithfulnessSummary {
    m: i64,
    n: i64,
    max_syllables: usize,
    exponent_bound: u32,
    #[serde(with = "rational::serde_rational")]
    x0: Rational,
    mode: Mode,
    words: u64,
    nontrivial: u64,
    inconclusive: u64,
    translation_words: u64,
    final_as_nz: u64,
    final_bs_mz: u64,
    witnesses: Vec<String>,
}

pub fn faithfulness(
    ctx: &Ctx,
    action: &Path,
    table: Option<&Path>,
    max_t: usize,
    bound: u32,
    x0: Option<&str>,
) -> Result<Report, Failure> {
    let (spec, act) = load_action(ctx, action)?;
    let table_path = table.map(Path::to_path_buf).unwrap_or_else(|| default_table_path(action));
    if !table_path.exists() {
        return Err(pre(format!(
            "no ping-pong table at {}; run `bs verify-inclusions {}` first",
            table_path.display(),
            action.display()
        )));
    }
    let file: TableFile = ctx.read_json(&table_path)?;
    if file.action_sha256 != spec_hash(&spec) {
        return Err(pre(format!("{} was computed for a different action", table_path.display())));
    }
    if !file.table.verified {
        return Err(pre("the ping-pong table is not verified; refusing to certify words"));
    }
    let x0 = match x0 {
        Some(s) => parse_rational_arg(s)?,
        None => default_x0(),
    };
    let summary = match ctx.mode {
        Mode::Float => {
            let r = faithfulness_sweep(&act, &file.table, max_t, bound, &x0, ctx.jobs)?;
            FaithfulnessSummary {
                m: r.m,
                n: r.n,
                max_syllables: max_t,
                exponent_bound: bound,
                x0,
                mode: Mode::Float,
                words: r.words,
                nontrivial: r.nontrivial,
                inconclusive: r.inconclusive,
                translation_words: r.translation_words,
                final_as_nz: r.final_as_nz,
                final_bs_mz: r.final_bs_mz,
                witnesses: r.witnesses.into_iter().map(|w| format!("{}: {}", w.word, w.reason)).collect(),
            }
        }
        Mode::Rational => rational_sweep(&act, max_t, bound, x0)?,
    };
    let status = if summary.inconclusive == 0 && summary.nontrivial == summary.words {
        Status::Ok
    } else {
        Status::Inconclusive
    };
    Report::new(&summary, status)
}

/// Per-word exact certification; meant for small bounds.
fn rational_sweep(act: &BSAction, max_t: usize, bound: u32, x0: Rational) -> Result<FaithfulnessSummary, Failure> {
    let mut s = FaithfulnessSummary {
        m: act.m,
        n: act.n,
        max_syllables: max_t,
        exponent_bound: bound,
        x0,
        mode: Mode::Rational,
        words: 0,
        nontrivial: 0,
        inconclusive: 0,
        translation_words: 0,
        final_as_nz: 0,
        final_bs_mz: 0,
        witnesses: Vec::new(),
    };
    for nf in enumerate_reduced(act.m, act.n, max_t, bound) {
        s.words += 1;
        let cert = certify_word(act, &nf.word, &s.x0, Mode::Rational)?;
        if !cert.is_nontrivial() {
            s.inconclusive += 1;
            if s.witnesses.len() < 20 {
                s.witnesses.push(nf.word.to_string());
            }
            continue;
        }
        s.nontrivial += 1;
        match cert.final_tag() {
            Some(action::Tag::AsNZ) => s.final_as_nz += 1,
            Some(action::Tag::BsMZ) => s.final_bs_mz += 1,
            _ => s.translation_words += 1,
        }
    }
    Ok(s)
}

pub fn bs12(max_letters: usize) -> Result<Report, Failure> {
    let s = bs12_oracle(max_letters, &StandardPinch);
    let status = if s.disagreements == 0 { Status::Ok } else { Status::Violation };
    Report::new(&s, status)
}
