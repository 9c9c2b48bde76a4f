use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn bsline(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bsline"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn construct(dir: &Path, m: &str, n: &str, out: &str) {
    let o = bsline(dir, &["bs", "construct", "--m", m, "--n", n, "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn faithfulness_pipeline_needs_verified_table() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    construct(p, "2", "3", "action.json");

    let refused = bsline(p, &["pipeline", "faithfulness", "action.json", "--max-syllables", "0", "--exponent-bound", "2"]);
    assert_eq!(code(&refused), 2);
    assert!(String::from_utf8_lossy(&refused.stderr).contains("verify-inclusions"));

    let v = bsline(p, &["bs", "verify-inclusions", "action.json"]);
    assert_eq!(code(&v), 0);
    let v = json(&v);
    assert_eq!(v["verified"], true);
    assert_eq!(v["facts"].as_array().unwrap().len(), 7);
    assert!(p.join("action.table.json").exists());

    // zero syllables: a^{±1}, a^{±2}
    let r = bsline(p, &["pipeline", "faithfulness", "action.json", "--max-syllables", "0", "--exponent-bound", "2"]);
    assert_eq!(code(&r), 0);
    let r = json(&r);
    assert_eq!(r["words"], 4);
    assert_eq!(r["nontrivial"], 4);
    assert_eq!(r["translation_words"], 4);
    assert_eq!(r["inconclusive"], 0);
}

#[test]
fn table_from_another_action_is_refused() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    construct(p, "2", "3", "a23.json");
    construct(p, "2", "5", "a25.json");
    assert_eq!(code(&bsline(p, &["bs", "verify-inclusions", "a23.json", "--out", "t.json"])), 0);
    let r = bsline(p, &["pipeline", "faithfulness", "a25.json", "--table", "t.json", "--max-syllables", "1"]);
    assert_eq!(code(&r), 2);
}

#[test]
fn rational_and_float_sweeps_agree() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    construct(p, "2", "3", "action.json");
    assert_eq!(code(&bsline(p, &["bs", "verify-inclusions", "action.json"])), 0);
    let args = ["pipeline", "faithfulness", "action.json", "--max-syllables", "2", "--exponent-bound", "1"];
    let f = json(&bsline(p, &args));
    let mut rargs = vec!["--mode", "rational"];
    rargs.extend(args);
    let r = json(&bsline(p, &rargs));
    for k in ["words", "nontrivial", "inconclusive", "final_as_nz", "final_bs_mz", "translation_words"] {
        assert_eq!(f[k], r[k], "{k}");
    }
    assert_eq!(f["inconclusive"], 0);
}

#[test]
fn certificates_follow_the_base_cases() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    construct(p, "2", "3", "action.json");
    let c = json(&bsline(p, &["bs", "certify", "action.json", "--word", "t", "--x0", "3/4"]));
    assert_eq!(c["result"]["verdict"], "nontrivial");
    assert_eq!(c["result"]["final_tag"], "A^s+nZ");
    let c = json(&bsline(p, &["bs", "certify", "action.json", "--word", "t^-1"]));
    assert_eq!(c["result"]["final_tag"], "B^s+mZ");
    // t a^2 t^-1 is a pinch
    assert_eq!(code(&bsline(p, &["bs", "certify", "action.json", "--word", "t a^2 t^-1"])), 2);
    assert_eq!(code(&bsline(p, &["bs", "certify", "action.json", "--word", "t", "--x0", "1/2"])), 2);
}

#[test]
fn construction_is_deterministic_and_round_trips() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    construct(p, "3", "4", "one.json");
    construct(p, "3", "4", "two.json");
    let (a, b) = (std::fs::read(p.join("one.json")).unwrap(), std::fs::read(p.join("two.json")).unwrap());
    assert_eq!(a, b);
    // the stored action can be re-verified and used
    assert_eq!(code(&bsline(p, &["bs", "verify-inclusions", "one.json"])), 0);
    let fp = json(&bsline(p, &["bs", "fixed-point", "one.json"]));
    assert!(fp["hi"].as_f64().unwrap() - fp["lo"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn obstruction_words() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    let o = bsline(p, &["bs", "obstruct", "--m", "2", "--n", "3", "--p", "5", "--q", "1", "--interval"]);
    assert_eq!(code(&o), 0);
    let o = json(&o);
    assert_eq!(o["commutator"]["nontrivial"], true);
    assert_eq!(o["interval_commutator"]["nontrivial"], true);
    assert_eq!(o["rotation"]["admissible"], serde_json::json!(["0"]));
    let o = json(&bsline(p, &["bs", "obstruct", "--m", "2", "--n", "5"]));
    assert_eq!(o["rotation"]["admissible"], serde_json::json!(["0", "1/3", "2/3"]));
    assert_eq!(code(&bsline(p, &["bs", "obstruct", "--m", "2", "--n", "3", "--p", "6", "--q", "1"])), 2);
}

#[test]
fn word_problem_commands() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    let e = json(&bsline(p, &["bs", "equal", "--m", "1", "--n", "2", "--left", "t a t^-1", "--right", "a^2"]));
    assert_eq!(e["equal"], true);
    let r = json(&bsline(p, &["bs", "reduce", "--m", "2", "--n", "3", "--word", "t a^4 t^-1"]));
    assert_eq!(r["normal_form"]["word"]["word"], "a^6");
    let o = bsline(p, &["pipeline", "bs12", "--max-letters", "4"]);
    assert_eq!(code(&o), 0);
    let o = json(&o);
    assert_eq!(o["strings"], 1 + 4 + 16 + 64 + 256);
    assert_eq!(o["disagreements"], 0);
}

#[test]
fn rotation_numbers_from_grids_and_specs() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    write(p, "rot.csv", "x,F\n0,1/3\n1/2,5/6\n");
    let r = bsline(p, &["rotnum", "--map", "rot.csv", "--iterations", "1000", "--exact-iterations", "30"]);
    assert_eq!(code(&r), 0);
    let r = json(&r);
    assert_eq!(r["exact"]["value"], "1/3");
    assert!((r["estimate"]["estimate"].as_f64().unwrap() - 1.0 / 3.0).abs() <= 2e-3);

    write(p, "t2.json", r#"{"kind": "affine", "slope": "1", "offset": "2"}"#);
    let r = json(&bsline(p, &["rotnum", "--map", "t2.json", "--x0", "3/10", "--iterations", "100"]));
    assert_eq!(r["estimate"]["estimate"], 2.0);
    assert_eq!(r["rotation_number"], 0.0);

    write(p, "mu.json", r#"{"atoms": [{"position": "0", "weight": "1/2"}, {"position": "1/2", "weight": "1/2"}]}"#);
    write(p, "half.json", r#"{"kind": "affine", "slope": "1", "offset": "1/2"}"#);
    let m = bsline(p, &["meantrans", "--map", "half.json", "--measure", "mu.json"]);
    assert_eq!(code(&m), 0);
    assert_eq!(json(&m)["mean_translation"]["value"], "1/2");
    // rotation by 1/3 moves the atoms off the support
    assert_eq!(code(&bsline(p, &["meantrans", "--map", "rot.csv", "--measure", "mu.json"])), 2);
}

fn points(f: impl Fn(f64) -> f64) -> String {
    let pts: Vec<[f64; 2]> = (0..=400).map(|i| i as f64 / 400.0).map(|x| [x, f(x)]).collect();
    serde_json::json!({ "points": pts }).to_string()
}

#[test]
fn audits_report_consistency_and_violations() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    write(p, "sq.json", &points(|x| x * x));
    write(p, "q4.json", &points(|x| x.powi(4)));
    let a = bsline(p, &["audit-commute", "--f", "sq.json", "--g", "q4.json", "--tol", "1e-6"]);
    assert_eq!(code(&a), 0);
    assert_eq!(json(&a)["verdict"], "consistent");

    // Fix(f) = {0, 1/2, 1}; g moves 1/2
    write(p, "f.json", &points(|x| x + 0.1 * (2.0 * std::f64::consts::PI * x).sin() / (2.0 * std::f64::consts::PI)));
    write(p, "g.json", &points(|x| x + 0.05 * x * (1.0 - x)));
    let a = bsline(p, &["audit-commute", "--f", "f.json", "--g", "g.json"]);
    assert_eq!(code(&a), 4);
    let a = json(&a);
    assert_eq!(a["verdict"], "violation");
    assert!(a["violations"].as_array().unwrap().iter().any(|v| (v["location"].as_f64().unwrap() - 0.5).abs() < 1e-3));

    write(p, "id.json", &points(|x| x));
    let a = json(&bsline(p, &["audit-aba", "--a", "id.json", "--b", "id.json", "--j", "0.2,0.3"]));
    assert_eq!(a["verdict"], "inside_fix_b");
    let a = bsline(p, &["audit-aba", "--a", "id.json", "--b", "sq.json", "--j", "0.2,0.3"]);
    assert_eq!(code(&a), 2);
}

#[test]
fn rigidity_solve_and_detect() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    assert_eq!(code(&bsline(p, &["rigidity", "example", "--kind", "perturbed", "--out", "pert.json"])), 0);
    let s = bsline(p, &["rigidity", "solve", "--action", "pert.json", "--n", "2", "--tol", "1e-8", "--phi-out", "phi.csv"]);
    assert_eq!(code(&s), 0);
    let s = json(&s);
    assert_eq!(s["verdict"], "converged");
    assert!(s["iterations"].as_u64().unwrap() <= 60);
    let csv = std::fs::read_to_string(p.join("phi.csv")).unwrap();
    assert_eq!(s["phi_csv"].as_str().unwrap(), csv);
    // φ should be ψ(x) = x + 0.01 sin(2πx)
    let worst = csv
        .lines()
        .skip(1)
        .map(|l| {
            let (x, y) = l.split_once(',').unwrap();
            let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
            (y - x - 0.01 * (2.0 * std::f64::consts::PI * x).sin()).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "sup |φ − ψ| = {worst}");

    assert_eq!(code(&bsline(p, &["rigidity", "example", "--kind", "hirsch", "--out", "h.json"])), 0);
    let c = json(&bsline(p, &["rigidity", "detect", "--action", "h.json"]));
    assert_eq!(c["verdict"], "not_conjugate_to_standard");
    assert_eq!(c["witness"], 0.0);
    assert_eq!(code(&bsline(p, &["rigidity", "solve", "--action", "h.json"])), 2);

    assert_eq!(code(&bsline(p, &["rigidity", "example", "--kind", "standard", "--out", "s.json"])), 0);
    let c = json(&bsline(p, &["rigidity", "detect", "--action", "s.json"]));
    assert_eq!(c["verdict"], "consistent_with_standard");
    assert_eq!(code(&bsline(p, &["rigidity", "detect", "--action", "s.json", "--n", "3"])), 2);
}

#[test]
fn presentation_commands() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    assert_eq!(code(&bsline(p, &["presentations", "mc", "--n", "3", "--emit", "mc3.json"])), 0);
    let g = json(&bsline(p, &["presentations", "commgraph", "mc3.json"]));
    assert_eq!(g["connected"], true);
    assert_eq!(g["graph"]["vertices"].as_array().unwrap().len(), 8);

    let b = json(&bsline(p, &["presentations", "braid-conjugator", "mc3.json", "--x", "a_1", "--y", "b_1"]));
    assert_eq!(b["equals_x"], true);
    let subs = b["trace"].as_array().unwrap().iter().filter(|s| s["step"] == "substitute").count();
    assert_eq!(subs, 1);
    assert_eq!(code(&bsline(p, &["presentations", "braid-conjugator", "mc3.json", "--x", "a_1", "--y", "a_1"])), 2);

    write(
        p,
        "braid.json",
        r#"{"name": "braid only", "generators": ["x", "y"],
            "relations": [{"kind": "braid", "x": {"label": "x"}, "y": {"label": "y"}}]}"#,
    );
    let g = json(&bsline(p, &["presentations", "commgraph", "braid.json"]));
    assert_eq!(g["connected"], false);
    assert_eq!(g["components"].as_array().unwrap().len(), 2);

    let v = bsline(p, &["presentations", "autfn-verify", "--n", "6"]);
    assert_eq!(code(&v), 0);
    let v = json(&v);
    assert_eq!(v["convention"], "x^-1 y^-1 x y");
    assert!(v["failures"].as_array().unwrap().is_empty());
    assert_eq!(code(&bsline(p, &["presentations", "autfn-verify", "--n", "4", "--convention", "xyxy"])), 4);
    assert_eq!(code(&bsline(p, &["presentations", "derive-convention"])), 0);
}

#[test]
fn manifests_are_appended_and_reference_outputs() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    let run = ["--manifest-dir", "runs"];
    let with = |rest: &[&str]| {
        let mut v: Vec<&str> = run.to_vec();
        v.extend(rest);
        bsline(p, &v)
    };
    assert_eq!(code(&with(&["bs", "construct", "--m", "2", "--n", "3", "--out", "action.json"])), 0);
    assert_eq!(code(&with(&["bs", "verify-inclusions", "action.json"])), 0);
    assert_eq!(code(&with(&["bs", "obstruct", "--m", "2", "--n", "3", "--p", "6", "--q", "1"])), 2);
    let text = std::fs::read_to_string(p.join("runs/manifest.jsonl")).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0]["subcommand"], "bs construct");
    assert_eq!(lines[1]["subcommand"], "bs verify-inclusions");
    assert_eq!(lines[2]["exit_code"], 2);
    assert_eq!(lines[0]["parameters"]["bs"]["construct"]["m"], 2);
    assert!(lines[0]["versions"]["bsline"].is_string());
    assert!(lines[0]["wall_time_seconds"].as_f64().unwrap() >= 0.0);

    let action = std::fs::read(p.join("action.json")).unwrap();
    let digest = hex::encode(Sha256::digest(&action));
    assert_eq!(lines[0]["outputs"][0]["path"], "action.json");
    assert_eq!(lines[0]["outputs"][0]["sha256"], digest.as_str());
    assert_eq!(lines[1]["inputs"][0]["sha256"], digest.as_str());
    assert_eq!(lines[1]["outputs"][0]["path"], "action.table.json");
}

#[test]
fn unreadable_input_exits_with_io_code() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    assert_eq!(code(&bsline(p, &["bs", "verify-inclusions", "missing.json"])), 1);
    write(p, "junk.json", "{ not json");
    assert_eq!(code(&bsline(p, &["presentations", "commgraph", "junk.json"])), 1);
}
