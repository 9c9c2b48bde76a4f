//! `bsline`: batch front end for Baumslag–Solitar actions, rotation numbers,
//! rigidity solves and presentation checks.
//!
//! Exit codes: 0 success, 1 IO/parse failure, 2 precondition error,
//! 3 inconclusive rigor, 4 property violation.

mod bs;
mod circle;
mod presentations;
mod rigidity;
mod run;

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use bsline::action::Mode;
use bsline::rigidity::SolveOptions;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use run::{Ctx, Failure, Report};

const WORD_HELP: &str = "Words are whitespace-separated tokens t, t^-1, a, a^K (K a signed integer) in \
BS(m,n) = <a, t | t a^m t^-1 = a^n>. The stable letter t is the generator written b in some sources \
(b a^m b^-1 = a^n) and a in others (a b^m a^-1 = b^n); only the relation matters.";

#[derive(Parser, Debug)]
#[command(name = "bsline", version, about = "Baumslag–Solitar actions on the line and circle-dynamics tools")]
struct Cli {
    /// arithmetic for rigorous evaluation
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Float)]
    mode: ModeArg,
    /// worker threads for parallel sweeps (default: available cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// append a run manifest line to DIR/manifest.jsonl
    #[arg(long, global = true, value_name = "DIR")]
    manifest_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Rational,
    Float,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Rational => Mode::Rational,
            ModeArg::Float => Mode::Float,
        }
    }
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// the explicit BS(m,n) action, ping-pong certificates and word problem
    #[command(subcommand, after_help = WORD_HELP)]
    Bs(BsCommand),
    /// end-to-end acceptance pipelines
    #[command(subcommand)]
    Pipeline(PipelineCommand),
    /// translation and rotation number of a degree-1 lift
    Rotnum(RotnumArgs),
    /// mean translation number with respect to an atomic invariant measure
    Meantrans(MeantransArgs),
    /// fixed-set audit for a pair of commuting interval maps
    AuditCommute(AuditCommuteArgs),
    /// fixed-set dichotomy audit for a pair satisfying a^n1 b^m3 a^n2 = b^m1 a^n3 b^m2
    AuditAba(AuditAbaArgs),
    /// conjugacy to the affine action of BS(1,n)
    #[command(subcommand)]
    Rigidity(RigidityCommand),
    /// Aut(F_n) relations, MC(n) schemas and commutativity graphs
    #[command(subcommand)]
    Presentations(PresentationsCommand),
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum BsCommand {
    /// build the action and write it as JSON
    Construct {
        #[arg(long)]
        m: i64,
        #[arg(long)]
        n: i64,
        /// half-width parameter of the ping-pong intervals
        #[arg(long, default_value = "1/10")]
        a: String,
        /// replace both lifts by Fejér means of this many Fourier modes
        #[arg(long)]
        fourier_cutoff: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// verify the seven inclusion facts; writes ACTION.table.json by default
    VerifyInclusions {
        action: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// certify that a pinch-free word moves x0
    Certify {
        action: PathBuf,
        #[arg(long)]
        word: String,
        /// start point in the interior of C ∩ C2 (default 3/4)
        #[arg(long)]
        x0: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// rotation-number constraint and non-trivial commutators for circle actions
    Obstruct {
        #[arg(long)]
        m: i64,
        #[arg(long)]
        n: i64,
        /// build the commutator for exponents p, q (both required)
        #[arg(long, requires = "q")]
        p: Option<i64>,
        #[arg(long, requires = "p")]
        q: Option<i64>,
        /// also check [t a t^-1, a]
        #[arg(long)]
        interval: bool,
    },
    /// normal form with the rewrite trace
    Reduce {
        #[arg(long)]
        m: i64,
        #[arg(long)]
        n: i64,
        #[arg(long)]
        word: String,
    },
    /// decide equality of two words
    Equal {
        #[arg(long)]
        m: i64,
        #[arg(long)]
        n: i64,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
    },
    /// bracket a fixed point of g
    FixedPoint {
        action: PathBuf,
        #[arg(long, default_value_t = 100)]
        search: i64,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PipelineCommand {
    /// certify every pinch-free word within the bounds (needs a verified table)
    Faithfulness {
        action: PathBuf,
        /// table from `bs verify-inclusions` (default ACTION.table.json)
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, default_value_t = 6)]
        max_syllables: usize,
        #[arg(long, default_value_t = 4)]
        exponent_bound: u32,
        #[arg(long)]
        x0: Option<String>,
    },
    /// exhaustive word-problem check against the affine model of BS(1,2)
    Bs12 {
        #[arg(long, default_value_t = 8)]
        max_letters: usize,
    },
}

#[derive(Args, Debug, Serialize)]
struct RotnumArgs {
    /// JSON map spec or CSV grid of (x, F(x)) over one period
    #[arg(long)]
    map: PathBuf,
    /// degree of a CSV grid
    #[arg(long, default_value_t = 1)]
    degree: i64,
    #[arg(long, default_value = "0")]
    x0: String,
    #[arg(long, default_value_t = 1_000_000)]
    iterations: u64,
    /// also report the two-scale extrapolation
    #[arg(long)]
    richardson: bool,
    /// iterate exactly in rational arithmetic for this many steps
    #[arg(long)]
    exact_iterations: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
struct MeantransArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long, default_value_t = 1)]
    degree: i64,
    /// JSON {"atoms": [{"position": "p/q", "weight": "p/q"}, ...]}
    #[arg(long)]
    measure: PathBuf,
    #[arg(long, default_value = "0")]
    x: String,
    /// iterations of the float estimate it is compared with
    #[arg(long, default_value_t = 100_000)]
    iterations: u64,
}

#[derive(Args, Debug, Serialize)]
struct AuditCommuteArgs {
    /// JSON {"points": [[x, y], ...]}, a JSON map spec, or a CSV grid
    #[arg(long)]
    f: PathBuf,
    #[arg(long)]
    g: PathBuf,
    #[arg(long, default_value = "0,1")]
    interval: String,
    #[arg(long, default_value_t = 2001)]
    samples: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct AuditAbaArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// n1,n2,n3,m1,m2,m3 (default: the braid relation)
    #[arg(long, default_value = "1,1,1,1,1,1")]
    exponents: String,
    /// the interval J ⊂ Fix(a), as lo,hi
    #[arg(long)]
    j: String,
    /// where the relation is sampled, as lo,hi
    #[arg(long, default_value = "0,1")]
    domain: String,
    #[arg(long, default_value_t = 2001)]
    samples: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum RigidityCommand {
    /// iterate the rigidity operator; the sampled φ is included as CSV
    Solve {
        /// JSON {"n": 2, "g": <map spec>, "h": <map spec>}
        #[arg(long)]
        action: PathBuf,
        #[arg(long)]
        n: Option<i64>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
        #[arg(long, default_value_t = 10.0)]
        window: f64,
        #[arg(long, default_value_t = 200)]
        max_iters: usize,
        /// also write φ as CSV here
        #[arg(long)]
        phi_out: Option<PathBuf>,
    },
    /// look for attracting fixed points of g
    Detect {
        #[arg(long)]
        action: PathBuf,
        #[arg(long)]
        n: Option<i64>,
        #[arg(long, default_value_t = 10.0)]
        window: f64,
    },
    /// write a sample action file
    Example {
        #[arg(long, value_enum)]
        kind: rigidity::ExampleKind,
        #[arg(long, default_value_t = 2)]
        n: i64,
        /// amplitude of the conjugating perturbation
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PresentationsCommand {
    /// the MC(n) schema
    Mc {
        #[arg(long)]
        n: usize,
        /// emit the generators twisted by u = a_n^-1 and their MC(n-1) relations
        #[arg(long)]
        twisted: bool,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// the schema of the generators A_ij of Aut(F_n)
    AutfnSchema {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// check the relations among A_ij, B_ij on every index tuple
    AutfnVerify {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = presentations::ConventionArg::Pinned)]
        convention: presentations::ConventionArg,
    },
    /// recompute which commutator convention the relations need
    DeriveConvention {
        #[arg(long, default_value_t = 3)]
        rank: usize,
    },
    /// commutativity graph and its components
    Commgraph { schema: PathBuf },
    /// conjugating word for a braid pair, with its rewrite check
    BraidConjugator {
        schema: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
}

impl Command {
    fn name(&self) -> String {
        fn sub(outer: &str, c: &impl Serialize) -> String {
            let v = serde_json::to_value(c).unwrap_or_default();
            match v.as_object().and_then(|o| o.keys().next().cloned()).or_else(|| v.as_str().map(String::from)) {
                Some(k) => format!("{outer} {k}"),
                None => outer.to_string(),
            }
        }
        match self {
            Command::Bs(c) => sub("bs", c),
            Command::Pipeline(c) => sub("pipeline", c),
            Command::Rotnum(_) => "rotnum".into(),
            Command::Meantrans(_) => "meantrans".into(),
            Command::AuditCommute(_) => "audit-commute".into(),
            Command::AuditAba(_) => "audit-aba".into(),
            Command::Rigidity(c) => sub("rigidity", c),
            Command::Presentations(c) => sub("presentations", c),
        }
    }
}

fn opt(p: &Option<PathBuf>) -> Option<&std::path::Path> {
    p.as_deref()
}

fn dispatch(ctx: &Ctx, command: &Command) -> Result<Report, Failure> {
    match command {
        Command::Bs(c) => match c {
            BsCommand::Construct {
                m,
                n,
                a,
                fourier_cutoff,
                out,
            } => bs::construct(ctx, *m, *n, a, *fourier_cutoff, opt(out)),
            BsCommand::VerifyInclusions { action, out } => bs::verify(ctx, action, opt(out)),
            BsCommand::Certify { action, word, x0, out } => bs::certify(ctx, action, word, x0.as_deref(), opt(out)),
            BsCommand::Obstruct { m, n, p, q, interval } => bs::obstruct(*m, *n, p.zip(*q), *interval),
            BsCommand::Reduce { m, n, word } => bs::reduce(*m, *n, word),
            BsCommand::Equal { m, n, left, right } => bs::equal(*m, *n, left, right),
            BsCommand::FixedPoint { action, search } => bs::fixed_point(ctx, action, *search),
        },
        Command::Pipeline(c) => match c {
            PipelineCommand::Faithfulness {
                action,
                table,
                max_syllables,
                exponent_bound,
                x0,
            } => bs::faithfulness(ctx, action, opt(table), *max_syllables, *exponent_bound, x0.as_deref()),
            PipelineCommand::Bs12 { max_letters } => bs::bs12(*max_letters),
        },
        Command::Rotnum(a) => circle::rotnum(
            ctx,
            circle::RotnumArgs {
                map: &a.map,
                degree: a.degree,
                x0: &a.x0,
                iterations: a.iterations,
                richardson: a.richardson,
                exact_iterations: a.exact_iterations,
            },
        ),
        Command::Meantrans(a) => circle::meantrans(ctx, &a.map, a.degree, &a.measure, &a.x, a.iterations),
        Command::AuditCommute(a) => circle::audit_commute(ctx, &a.f, &a.g, &a.interval, a.samples, a.tol),
        Command::AuditAba(a) => circle::audit_aba_cmd(
            ctx,
            circle::AbaArgs {
                a: &a.a,
                b: &a.b,
                exponents: &a.exponents,
                j: &a.j,
                domain: &a.domain,
                samples: a.samples,
                tol: a.tol,
            },
        ),
        Command::Rigidity(c) => match c {
            RigidityCommand::Solve {
                action,
                n,
                tol,
                delta,
                window,
                max_iters,
                phi_out,
            } => {
                let opts = SolveOptions {
                    delta: *delta,
                    window: *window,
                    tol: *tol,
                    max_iters: *max_iters,
                };
                rigidity::solve(ctx, action, *n, opts, opt(phi_out))
            }
            RigidityCommand::Detect { action, n, window } => rigidity::detect(ctx, action, *n, *window),
            RigidityCommand::Example { kind, n, eps, out } => rigidity::example(ctx, *kind, *n, *eps, opt(out)),
        },
        Command::Presentations(c) => match c {
            PresentationsCommand::Mc { n, twisted, emit } => presentations::mc(ctx, *n, *twisted, opt(emit)),
            PresentationsCommand::AutfnSchema { n, emit } => presentations::autfn_schema(ctx, *n, opt(emit)),
            PresentationsCommand::AutfnVerify { n, convention } => presentations::autfn_verify(*n, *convention),
            PresentationsCommand::DeriveConvention { rank } => presentations::convention(*rank),
            PresentationsCommand::Commgraph { schema } => presentations::commgraph(ctx, schema),
            PresentationsCommand::BraidConjugator { schema, x, y } => presentations::braid(ctx, schema, x, y),
        },
    }
}

fn main() {
    let cli = Cli::parse();
    let jobs = cli
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .max(1);
    let ctx = Ctx::new(cli.mode.into(), jobs);
    let start = Instant::now();
    let code = match dispatch(&ctx, &cli.command) {
        Ok(report) => {
            // a closed pipe (e.g. `| head`) is not an error of the run
            let _ = writeln!(std::io::stdout(), "{}", report.json);
            report.status.code()
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    };
    if let Some(dir) = &cli.manifest_dir {
        let params = serde_json::to_value(&cli.command).unwrap_or_default();
        if let Err(f) = ctx.append_manifest(dir, cli.command.name(), params, start.elapsed().as_secs_f64(), code) {
            eprintln!("error: {}", f.message());
            std::process::exit(1);
        }
    }
    std::process::exit(code);
}
