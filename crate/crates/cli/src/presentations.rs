use std::path::Path;

use bsline::presentations::{
    autfn_a_schema, braid_conjugator, derive_convention, is_connected, mc_schema, twisted_generators,
    verify_autfn_relations_with, CommGraph, CommutatorConvention, Connectivity, PresentationSchema, TwistedSchema,
    PINNED_CONVENTION,
};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::run::{Ctx, Failure, FileRecord, Report, Status};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ConventionArg {
    /// the convention fixed by the derivation
    Pinned,
    /// [x, y] = x y x^-1 y^-1
    Xyxy,
    /// [x, y] = x^-1 y^-1 x y
    XinvYinvXy,
}

impl ConventionArg {
    fn resolve(self) -> CommutatorConvention {
        match self {
            ConventionArg::Pinned => PINNED_CONVENTION,
            ConventionArg::Xyxy => CommutatorConvention::XYXinvYinv,
            ConventionArg::XinvYinvXy => CommutatorConvention::XinvYinvXY,
        }
    }
}

#[derive(Serialize)]
struct Emitted {
    name: String,
    generators: usize,
    relations: usize,
    written: FileRecord,
}

fn emit(ctx: &Ctx, value: &impl Serialize, schema: &PresentationSchema, path: Option<&Path>) -> Result<Report, Failure> {
    match path {
        Some(p) => {
            let written = ctx.write_json(p, value)?;
            Report::ok(&Emitted {
                name: schema.name.clone(),
                generators: schema.generators.len(),
                relations: schema.relations.len(),
                written,
            })
        }
        None => Report::ok(value),
    }
}

pub fn mc(ctx: &Ctx, n: usize, twisted: bool, out: Option<&Path>) -> Result<Report, Failure> {
    let schema = mc_schema(n)?;
    if twisted {
        let t = twisted_generators(&schema)?;
        return emit(ctx, &t, &t.schema, out);
    }
    emit(ctx, &schema, &schema, out)
}

pub fn autfn_schema(ctx: &Ctx, n: usize, out: Option<&Path>) -> Result<Report, Failure> {
    let schema = autfn_a_schema(n)?;
    emit(ctx, &schema, &schema, out)
}

pub fn autfn_verify(n: usize, convention: ConventionArg) -> Result<Report, Failure> {
    let report = verify_autfn_relations_with(n, convention.resolve());
    let status = if report.all_pass() { Status::Ok } else { Status::Violation };
    Report::new(&report, status)
}

pub fn convention(rank: usize) -> Result<Report, Failure> {
    let d = derive_convention(rank)?;
    let status = if d.chosen == Some(PINNED_CONVENTION) { Status::Ok } else { Status::Violation };
    Report::new(&d, status)
}

#[derive(Serialize)]
struct GraphReport {
    schema: String,
    graph: CommGraph,
    #[serde(flatten)]
    connectivity: Connectivity,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SchemaFile {
    Twisted(TwistedSchema),
    Plain(PresentationSchema),
}

/// A schema file, either plain or as emitted by `mc --twisted`.
fn load_schema(ctx: &Ctx, path: &Path) -> Result<PresentationSchema, Failure> {
    let s = match ctx.read_json::<SchemaFile>(path)? {
        SchemaFile::Twisted(t) => t.schema,
        SchemaFile::Plain(s) => s,
    };
    s.validate()?;
    Ok(s)
}

pub fn commgraph(ctx: &Ctx, schema: &Path) -> Result<Report, Failure> {
    let s = load_schema(ctx, schema)?;
    let graph = CommGraph::from_schema(&s);
    let connectivity = is_connected(&graph);
    Report::ok(&GraphReport {
        schema: s.name,
        graph,
        connectivity,
    })
}

pub fn braid(ctx: &Ctx, schema: &Path, x: &str, y: &str) -> Result<Report, Failure> {
    let s = load_schema(ctx, schema)?;
    let c = braid_conjugator(&s, x, y)?;
    let status = if c.equals_x { Status::Ok } else { Status::Violation };
    Report::new(&c, status)
}
