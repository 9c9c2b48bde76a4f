//! Exit codes, file IO with hashing, and the per-run manifest.

use std::cell::RefCell;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use bsline::action::{ActionError, Mode};
use bsline::circle::CircleError;
use bsline::piecewise::PiecewiseError;
use bsline::presentations::PresentationError;
use bsline::rigidity::RigidityError;
use bsline::words::WordError;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// A failed run; the variant fixes the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// unreadable or unparsable input, unwritable output
    Io(String),
    Precondition(String),
    Inconclusive(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Io(_) => 1,
            Failure::Precondition(_) => 2,
            Failure::Inconclusive(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Io(m) | Failure::Precondition(m) | Failure::Inconclusive(m) => m,
        }
    }
}

pub fn pre(msg: impl Into<String>) -> Failure {
    Failure::Precondition(msg.into())
}

impl From<ActionError> for Failure {
    fn from(e: ActionError) -> Self {
        Failure::Precondition(e.to_string())
    }
}

impl From<PiecewiseError> for Failure {
    fn from(e: PiecewiseError) -> Self {
        Failure::Precondition(e.to_string())
    }
}

impl From<CircleError> for Failure {
    fn from(e: CircleError) -> Self {
        match e {
            CircleError::Inconclusive(_) => Failure::Inconclusive(e.to_string()),
            _ => Failure::Precondition(e.to_string()),
        }
    }
}

impl From<WordError> for Failure {
    fn from(e: WordError) -> Self {
        Failure::Precondition(e.to_string())
    }
}

impl From<RigidityError> for Failure {
    fn from(e: RigidityError) -> Self {
        Failure::Precondition(e.to_string())
    }
}

impl From<PresentationError> for Failure {
    fn from(e: PresentationError) -> Self {
        Failure::Precondition(e.to_string())
    }
}

/// How a completed run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Inconclusive,
    Violation,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Inconclusive => 3,
            Status::Violation => 4,
        }
    }
}

/// A report for stdout plus its exit status.
pub struct Report {
    pub json: String,
    pub status: Status,
}

impl Report {
    pub fn new(value: &impl Serialize, status: Status) -> Result<Report, Failure> {
        Ok(Report {
            json: to_json(value)?,
            status,
        })
    }

    pub fn ok(value: &impl Serialize) -> Result<Report, Failure> {
        Report::new(value, Status::Ok)
    }
}

pub fn to_json(value: &impl Serialize) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map_err(|e| Failure::Io(format!("cannot serialize report: {e}")))
}

#[derive(Clone, Debug, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub bsline: &'static str,
    pub bsline_cli: &'static str,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: serde_json::Value,
    pub mode: Mode,
    pub jobs: usize,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub versions: Versions,
    pub wall_time_seconds: f64,
    pub exit_code: i32,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Shared run state: global flags and every file read or written.
pub struct Ctx {
    pub mode: Mode,
    pub jobs: usize,
    inputs: RefCell<Vec<FileRecord>>,
    outputs: RefCell<Vec<FileRecord>>,
}

impl Ctx {
    pub fn new(mode: Mode, jobs: usize) -> Self {
        Ctx {
            mode,
            jobs,
            inputs: RefCell::new(Vec::new()),
            outputs: RefCell::new(Vec::new()),
        }
    }

    pub fn read(&self, path: &Path) -> Result<String, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.borrow_mut().push(FileRecord {
            path: path.display().to_string(),
            sha256: sha256_hex(text.as_bytes()),
        });
        Ok(text)
    }

    pub fn read_json<T: DeserializeOwned>(&self, path: &Path) -> Result<T, Failure> {
        let text = self.read(path)?;
        serde_json::from_str(&text).map_err(|e| Failure::Io(format!("cannot parse {}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path, contents: &str) -> Result<FileRecord, Failure> {
        std::fs::write(path, contents).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
        let rec = FileRecord {
            path: path.display().to_string(),
            sha256: sha256_hex(contents.as_bytes()),
        };
        self.outputs.borrow_mut().push(rec.clone());
        Ok(rec)
    }

    pub fn write_json(&self, path: &Path, value: &impl Serialize) -> Result<FileRecord, Failure> {
        let mut text = to_json(value)?;
        text.push('\n');
        self.write(path, &text)
    }

    /// Appends one JSON line to `<dir>/manifest.jsonl`.
    pub fn append_manifest(
        &self,
        dir: &Path,
        subcommand: String,
        parameters: serde_json::Value,
        wall_time_seconds: f64,
        exit_code: i32,
    ) -> Result<PathBuf, Failure> {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
        let manifest = RunManifest {
            subcommand,
            parameters,
            mode: self.mode,
            jobs: self.jobs,
            inputs: self.inputs.borrow().clone(),
            outputs: self.outputs.borrow().clone(),
            versions: Versions {
                bsline: bsline::VERSION,
                bsline_cli: env!("CARGO_PKG_VERSION"),
            },
            wall_time_seconds,
            exit_code,
        };
        let line = serde_json::to_string(&manifest).map_err(|e| Failure::Io(e.to_string()))?;
        let path = dir.join("manifest.jsonl");
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Failure::Io(format!("cannot open {}: {e}", path.display())))?;
        writeln!(f, "{line}").map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

pub fn parse_rational_arg(s: &str) -> Result<bsline::rational::Rational, Failure> {
    bsline::rational::parse_rational(s).map_err(|e| pre(e.to_string()))
}

/// `"lo,hi"` → `(lo, hi)`.
pub fn parse_pair(s: &str) -> Result<(f64, f64), Failure> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => match (a.parse(), b.parse()) {
            (Ok(a), Ok(b)) => Ok((a, b)),
            _ => Err(pre(format!("expected two numbers, got {s:?}"))),
        },
        _ => Err(pre(format!("expected \"lo,hi\", got {s:?}"))),
    }
}
