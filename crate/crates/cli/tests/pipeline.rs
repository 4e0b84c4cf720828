use std::fs;
use std::path::Path;
use std::process::Command;

use lmea::backend::read_transcript;
use lmea::{brute_force, read_instance, RunLog};
use lmea_cli::optima::{load_cache, OPTIMA_FILE};
use lmea_cli::{Fragment, Manifest};

fn lmea(out: &Path, args: &[&str]) -> String {
    let output = Command::new(env!("CARGO_BIN_EXE_lmea"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).unwrap()
}

fn small(out: &Path) {
    lmea(
        out,
        &["gen", "--sizes", "10", "--kinds", "rue", "--seed", "9"],
    );
    lmea(out, &["solve"]);
}

#[test]
fn default_gen_writes_forty_instances() {
    let dir = tempfile::tempdir().unwrap();
    lmea(dir.path(), &["gen"]);
    let files: Vec<_> = fs::read_dir(dir.path().join("instances"))
        .unwrap()
        .collect();
    assert_eq!(files.len(), 40);
    let m = Manifest::load(dir.path().join("manifest.json")).unwrap();
    assert_eq!(m.sets.len(), 8);
    assert!(m.sets.iter().all(|s| s.instances.len() == 5));
}

#[test]
fn regenerating_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        lmea(d, &["gen", "--sizes", "10,15", "--seed", "3"]);
    }
    let read = |d: &Path, f: &str| fs::read(d.join(f)).unwrap();
    assert_eq!(
        read(a.path(), "manifest.json"),
        read(b.path(), "manifest.json")
    );
    let m = Manifest::load(a.path().join("manifest.json")).unwrap();
    for inst in m.sets.iter().flat_map(|s| &s.instances) {
        assert_eq!(read(a.path(), &inst.file), read(b.path(), &inst.file));
    }
}

#[test]
fn solve_caches_and_matches_brute_force() {
    let dir = tempfile::tempdir().unwrap();
    small(dir.path());
    assert!(lmea(dir.path(), &["solve"]).contains("solved 0, cached 5"));
    let cache = load_cache(&dir.path().join(OPTIMA_FILE)).unwrap();
    let m = Manifest::load(dir.path().join("manifest.json")).unwrap();
    for inst in &m.sets[0].instances {
        let instance = read_instance(dir.path().join(&inst.file)).unwrap();
        let entry = &cache[&inst.id];
        assert!(entry.certifies(&instance));
        let brute = brute_force(&instance).unwrap().optimal_length;
        assert!((entry.optimal_length - brute).abs() <= 1e-9 * brute);
    }
}

#[test]
fn baselines_without_optima_fail() {
    let dir = tempfile::tempdir().unwrap();
    lmea(dir.path(), &["gen", "--sizes", "10", "--kinds", "rue"]);
    let status = Command::new(env!("CARGO_BIN_EXE_lmea"))
        .arg("--out")
        .arg(dir.path())
        .arg("baselines")
        .output()
        .unwrap()
        .status;
    assert!(!status.success());
}

#[test]
fn baselines_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    small(dir.path());
    let path = dir.path().join("results/baselines.json");
    lmea(dir.path(), &["baselines", "--repetitions", "1"]);
    let first = fs::read(&path).unwrap();
    lmea(dir.path(), &["baselines", "--repetitions", "1"]);
    assert_eq!(first, fs::read(&path).unwrap());
    let f = Fragment::load(&path).unwrap();
    assert_eq!(f.rows.len(), 5 * 4);
    assert!(f
        .rows
        .iter()
        .all(|r| r.gap_percent >= 0.0 && r.generations_to_optimum.is_none()));
}

#[test]
fn builtin_lmea_solves_rue10() {
    let dir = tempfile::tempdir().unwrap();
    small(dir.path());
    let stdout = lmea(dir.path(), &["evolve", "--backend", "builtin"]);
    assert!(stdout.contains("5 runs, 5 reached the optimum"), "{stdout}");
    let f = Fragment::load(&dir.path().join("results/evolve-lmea.json")).unwrap();
    assert!(f
        .rows
        .iter()
        .all(|r| r.success && r.gap_percent == 0.0 && r.complete));
}

#[test]
fn lmea_star_keeps_initial_temperature() {
    let dir = tempfile::tempdir().unwrap();
    small(dir.path());
    lmea(
        dir.path(),
        &["evolve", "--mode", "lmea_star", "-G", "60", "-K", "3"],
    );
    let runs = dir.path().join("runs/lmea_star");
    for entry in fs::read_dir(runs).unwrap() {
        let log = RunLog::from_jsonl(&fs::read_to_string(entry.unwrap().path()).unwrap()).unwrap();
        assert!(!log.config.self_adapt);
        assert!(log
            .records
            .iter()
            .all(|r| r.temperature == log.config.temp0));
    }
}

#[test]
fn opro_prompts_carry_no_selection_protocol() {
    let dir = tempfile::tempdir().unwrap();
    small(dir.path());
    lmea(dir.path(), &["evolve", "--mode", "opro", "-G", "5"]);
    lmea(dir.path(), &["evolve", "--mode", "lmea", "-G", "5"]);
    let first = |mode: &str| {
        let path = dir
            .path()
            .join(format!("transcripts/{mode}/rue-10-0-r0.jsonl"));
        read_transcript(&path).unwrap()[0].prompt.clone()
    };
    assert!(!first("opro").contains("<selection>"));
    assert!(first("lmea").contains("<selection>"));
}

#[test]
fn transcript_replay_reproduces_run_logs() {
    let dir = tempfile::tempdir().unwrap();
    small(dir.path());
    lmea(dir.path(), &["evolve", "-G", "30"]);
    let original = dir.path().join("original");
    fs::rename(dir.path().join("runs"), &original).unwrap();
    fs::rename(dir.path().join("transcripts"), dir.path().join("recorded")).unwrap();
    let recorded = dir.path().join("recorded");
    lmea(
        dir.path(),
        &[
            "evolve",
            "-G",
            "30",
            "--backend",
            "scripted",
            "--transcript",
            recorded.to_str().unwrap(),
        ],
    );
    for entry in fs::read_dir(original.join("lmea")).unwrap() {
        let path = entry.unwrap().path();
        let a = RunLog::from_jsonl(&fs::read_to_string(&path).unwrap()).unwrap();
        let replay = dir.path().join("runs/lmea").join(path.file_name().unwrap());
        let b = RunLog::from_jsonl(&fs::read_to_string(replay).unwrap()).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.best, b.best);
    }
}

#[test]
fn report_marks_missing_generations() {
    let dir = tempfile::tempdir().unwrap();
    small(dir.path());
    lmea(dir.path(), &["baselines", "--repetitions", "1"]);
    // One generation of 16 offspring out of 181440 tours: no run succeeds.
    lmea(dir.path(), &["evolve", "--mode", "opro", "-G", "1"]);
    let text = lmea(dir.path(), &["report"]);
    assert!(text.contains("N/A (0)"), "{text}");
    let csv = fs::read_to_string(dir.path().join("tables/results.csv")).unwrap();
    assert!(csv.starts_with("set,algorithm,runs,mean_gap"));
    assert!(dir.path().join("convergence/summary").is_dir());
    let saved = fs::read_to_string(dir.path().join("tables/results.txt")).unwrap();
    assert_eq!(saved, text);
}
