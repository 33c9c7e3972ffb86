//! Runs a JSON pipeline (mesh, reduction, online evaluation and propagation)
//! through the command-line entry point and lists the artifacts.

fn main() {
    let dir = std::env::temp_dir().join("eyeheat-run-config");
    std::fs::create_dir_all(&dir).expect("create output dir");
    let config = serde_json::json!({
        "mesh": {"generate": 2},
        "params": [{"T_amb": 290.0}, {"T_amb": 300.0, "E": 100.0}],
        "rbm": {"train_size": 200},
        "uq": {"n": 2000},
        "steps": ["mesh", "reduce", "online", "propagate"],
        "out_dir": dir.join("out"),
    });
    let path = dir.join("run.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).expect("write config");

    let code = eyeheat::cli::main_with_args(["eyeheat", "run", "--config", path.to_str().unwrap()]);
    println!("exit code {code}");
    for e in std::fs::read_dir(dir.join("out")).expect("out dir").flatten() {
        println!("  {}", e.path().display());
    }
    print!("{}", std::fs::read_to_string(dir.join("out/out.csv")).unwrap_or_default());
}
