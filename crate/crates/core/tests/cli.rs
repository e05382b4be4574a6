use mufasa::cli::{run, EXIT_CONFIG, EXIT_OK};
use std::fs;
use std::path::Path;

fn mufasa(out: &Path, args: &[&str]) -> i32 {
    mufasa_env(out, args, vec![])
}

fn mufasa_env(out: &Path, args: &[&str], env: Vec<(String, String)>) -> i32 {
    let mut argv = vec!["mufasa".to_string(), "--out".to_string(), out.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    run(argv, env)
}

const TINY_SEARCH: [&str; 5] =
    ["search", "--evaluator", "surrogate", "search.population=6", "search.tournament=2"];

#[test]
fn compile_writes_graph_and_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    assert_eq!(mufasa(&out, &["compile", "--seed-genome", "late"]), EXIT_OK);
    let graph = fs::read_to_string(out.join("graph.json")).unwrap();
    assert!(graph.contains("\"nodes\""));
    let snap = fs::read_to_string(out.join("config.resolved.toml")).unwrap();
    assert!(snap.contains("[search]"));
}

#[test]
fn unknown_override_fails_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    assert_eq!(mufasa(&out, &["compile", "search.populaton=5"]), EXIT_CONFIG);
    assert_eq!(mufasa(&out, &["compile", "nosection.key=5"]), EXIT_CONFIG);
    assert_eq!(mufasa(&out, &["gen-data", "data.num_examples=3"]), EXIT_CONFIG);
    assert!(!out.exists());
}

#[test]
fn bad_arguments_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    assert_eq!(mufasa(&out, &["frobnicate"]), EXIT_CONFIG);
    assert_eq!(mufasa(&out, &["compile", "--seed-genome", "sideways"]), EXIT_CONFIG);
    assert_eq!(mufasa(&out, &["compile", "--genome", "/nonexistent/genome.json"]), EXIT_CONFIG);
    assert!(!out.exists());
}

#[test]
fn search_writes_artifacts_and_guards_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let mut args = TINY_SEARCH.to_vec();
    args.push("search.candidates=15");
    assert_eq!(mufasa(&out, &args), EXIT_OK);
    for f in ["checkpoint.json", "candidates.jsonl", "best_genome.json", "best.dot", "best_graph.json", "config.resolved.toml"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let log = fs::read_to_string(out.join("candidates.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 15);

    assert_eq!(mufasa(&out, &args), EXIT_CONFIG);
    let mut resumed = args.clone();
    resumed.push("--resume");
    assert_eq!(mufasa(&out, &resumed), EXIT_OK);
    assert_eq!(fs::read_to_string(out.join("candidates.jsonl")).unwrap().lines().count(), 15);

    // best genome file feeds back into compile
    let genome = out.join("best_genome.json").display().to_string();
    assert_eq!(mufasa(&dir.path().join("c"), &["compile", "--genome", &genome]), EXIT_OK);
}

#[test]
fn resume_continues_a_halted_search() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let mut short = TINY_SEARCH.to_vec();
    short.push("search.candidates=5");
    assert_eq!(mufasa(&out, &short), EXIT_OK);
    // a different budget changes the configuration hash
    let mut longer = TINY_SEARCH.to_vec();
    longer.extend(["search.candidates=9", "--resume"]);
    assert_eq!(mufasa(&out, &longer), EXIT_CONFIG);
}

#[test]
fn environment_overrides_apply_below_arguments() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e");
    let env = vec![
        ("MUFASA_SEARCH__CANDIDATES".to_string(), "4".to_string()),
        ("MUFASA_SEARCH__POPULATION".to_string(), "99".to_string()),
    ];
    let code = mufasa_env(&out, &TINY_SEARCH, env);
    assert_eq!(code, EXIT_OK);
    let snap = fs::read_to_string(out.join("config.resolved.toml")).unwrap();
    assert!(snap.contains("candidates = 4"));
    assert!(snap.contains("population = 6"));
    assert_eq!(fs::read_to_string(out.join("candidates.jsonl")).unwrap().lines().count(), 4);
}

#[test]
fn config_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[search]\npopulation = 5\ntournament = 2\ncandidates = 3\nevaluator = \"surrogate\"\n").unwrap();
    let out = dir.path().join("f");
    let c = cfg.display().to_string();
    assert_eq!(mufasa(&out, &["--config", &c, "search"]), EXIT_OK);
    assert_eq!(fs::read_to_string(out.join("candidates.jsonl")).unwrap().lines().count(), 3);

    fs::write(&cfg, "[search]\nbogus = 1\n").unwrap();
    assert_eq!(mufasa(&dir.path().join("g"), &["--config", &c, "search"]), EXIT_CONFIG);
}

#[test]
fn export_dot_and_gen_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    assert_eq!(mufasa(&out, &["export-dot", "--seed-genome", "hybrid"]), EXIT_OK);
    assert!(fs::read_to_string(out.join("graph.dot")).unwrap().starts_with("digraph"));
    assert_eq!(mufasa(&out, &["gen-data", "data.num_examples=50", "--seed", "3"]), EXIT_OK);
    let ds = mufasa::data::format::load(&out.join("dataset.txt")).unwrap();
    assert_eq!(ds.train.len() + ds.validation.len() + ds.test.len(), 50);
    assert_eq!(ds.spec.seed, 3);
}

#[test]
fn train_one_reports_fitness() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t");
    let args = ["train-one", "--seed-genome", "early", "train.steps=3", "train.batch_size=4", "data.num_examples=40", "model.widths=[4, 2, 4]"];
    assert_eq!(mufasa(&out, &args), EXIT_OK);
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("fitness.json")).unwrap()).unwrap();
    assert_eq!(fit["steps_run"], 3);
    assert!(out.join("params.bin").is_file());
    assert_eq!(fs::read_to_string(out.join("loss.tsv")).unwrap().lines().count(), 4);

    let over = ["train-one", "train.param_budget=10", "data.num_examples=40"];
    assert_eq!(mufasa(&dir.path().join("u"), &over), EXIT_OK);
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("u/fitness.json")).unwrap()).unwrap();
    assert_eq!(fit["steps_run"], 0);
    assert_eq!(fit["fitness"], 0.0);
}

#[test]
fn report_summarizes_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for seed in ["1", "2"] {
        let out = dir.path().join(format!("r{seed}"));
        let mut args = TINY_SEARCH.to_vec();
        args.extend(["search.candidates=6", "--seed", seed]);
        assert_eq!(mufasa(&out, &args), EXIT_OK);
        runs.push(out.display().to_string());
    }
    let rep = dir.path().join("rep");
    let mut args = vec!["report"];
    args.extend(runs.iter().map(String::as_str));
    assert_eq!(mufasa(&rep, &args), EXIT_OK);
    let table = fs::read_to_string(rep.join("report.txt")).unwrap();
    assert!(table.contains("r1") && table.contains("r2"));
    assert!(rep.join("report_series.tsv").is_file());
    assert_eq!(mufasa(&dir.path().join("rep2"), &["report", "/nonexistent/log.jsonl"]), EXIT_CONFIG);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_mufasa");
    let status = |args: &[&str]| std::process::Command::new(bin).args(args).current_dir(dir.path()).output().unwrap();
    let help = status(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    let text = String::from_utf8_lossy(&help.stdout).to_string();
    for sub in ["search", "compile", "train-one", "export-dot", "gen-data", "report"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
    assert_eq!(status(&["search", "search.tournament=0"]).status.code(), Some(EXIT_CONFIG));
    assert!(!dir.path().join("mufasa-out").exists());
    assert_eq!(status(&["compile"]).status.code(), Some(0));
    assert!(dir.path().join("mufasa-out/graph.json").is_file());
}
