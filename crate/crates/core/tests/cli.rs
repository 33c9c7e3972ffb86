use std::path::Path;

use eyeheat::cli::main_with_args;

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("eyeheat").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_check_and_solve() {
    let dir = tempfile::tempdir().unwrap();
    let msh = dir.path().join("eye.msh");
    assert_eq!(run(&["mesh", "generate", "--refinement", "1", "--out", p(&msh)]), 0);
    assert_eq!(run(&["mesh", "check", p(&msh)]), 0);

    let csv = dir.path().join("t.csv");
    let params = dir.path().join("p.json");
    std::fs::write(&params, r#"{"T_amb": 290.0}"#).unwrap();
    let code = run(&[
        "solve", "--mesh", p(&msh), "--params", p(&params), "--model", "nonlinear", "--csv", p(&csv),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("output,T [K],model,newton_iterations"));
    assert_eq!(text.lines().count(), 1 + 6);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"T_ambient": 290.0}"#).unwrap();
    assert_eq!(run(&["solve", "--refinement", "1", "--params", p(&bad), "--csv", p(&out)]), 2);
    assert_eq!(run(&["solve", "--refinement", "1", "--csv", p(&out), "--model", "cubic"]), 2);
    assert_eq!(run(&["mesh", "check", p(&dir.path().join("missing.msh"))]), 2);
    assert_eq!(run(&["reproduce", "no-such-preset", "--out-dir", p(dir.path())]), 2);

    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"mesh": {"generate": 1}, "outputs": [], "steps": ["solve"]}"#).unwrap();
    assert_eq!(run(&["run", "--config", p(&cfg)]), 2);
    std::fs::write(&cfg, r#"{"rbm": {"tol": "small"}}"#).unwrap();
    assert_eq!(run(&["run", "--config", p(&cfg)]), 2);
}

#[test]
fn pipeline_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{
            "mesh": {"generate": 1},
            "params": {"E": 100.0, "h_amb": 50.0},
            "rbm": {"train_size": 100},
            "uq": {"n": 500, "n_param": 100, "degree": 2, "bootstrap": 20, "sobol_outputs": ["O"]},
            "steps": ["mesh", "solve", "reduce", "online", "propagate", "sobol"],
            "out_dir": "out"
        }"#,
    )
    .unwrap();
    assert_eq!(run(&["run", "--config", p(&cfg)]), 0);
    let out = dir.path().join("out");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let names: Vec<&str> = manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["path"].as_str().unwrap())
        .collect();
    for f in ["model.rbm", "out.csv", "stats.csv", "sobol.csv", "results.csv"] {
        assert!(names.iter().any(|n| n.ends_with(f)), "{f} missing from {names:?}");
    }

    let files = ["model.rbm", "out.csv", "stats.csv", "hist.csv", "sobol.csv", "results.csv", "greedy.csv"];
    let first: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(out.join(f)).unwrap()).collect();
    assert_eq!(run(&["run", "--config", p(&cfg)]), 0);
    for (f, bytes) in files.iter().zip(&first) {
        assert_eq!(&std::fs::read(out.join(f)).unwrap(), bytes, "{f} changed between runs");
    }
}

#[test]
fn reduce_then_online() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.rbm");
    let hist = dir.path().join("greedy.csv");
    let code = run(&[
        "reduce", "--refinement", "1", "--train-size", "100", "--out", p(&model), "--history", p(&hist),
    ]);
    assert_eq!(code, 0);
    let csv = dir.path().join("o.csv");
    assert_eq!(run(&["online", "--model", p(&model), "--n", "3", "--csv", p(&csv)]), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.lines().next().unwrap().contains("delta [X]"));
    assert_eq!(text.lines().last().unwrap().rsplit(',').next().unwrap(), "3");
    assert_eq!(run(&["online", "--model", p(&model), "--n", "99", "--csv", p(&csv)]), 2);
}

#[test]
fn dsa_preset_writes_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["reproduce", "dsa-Tamb", "--refinement", "1", "--out-dir", p(dir.path())]), 0);
    let text = std::fs::read_to_string(dir.path().join("dsa-Tamb.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 9);
    assert!(rows[0].starts_with("283.15,"));
    assert!(rows[8].starts_with("303.15,"));
    assert!(dir.path().join("manifest.json").exists());
}
