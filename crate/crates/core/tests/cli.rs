use std::process::Command;

fn fracops(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fracops"))
        .args(args)
        .env("FRACOPS_THREADS", "3")
        .output()
        .expect("binary runs")
}

#[test]
fn identical_configs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    for (name, args) in [
        ("wos", vec!["wos", "s=0.5", "x=0;0.5", "--samples", "4000", "--seed", "7"]),
        ("eval", vec!["eval", "field=bump", "s=0.4", "x=0;0.25", "variant=comparable", "density=oscillating"]),
        ("obstacle", vec!["obstacle", "--s", "0.5", "--grid-n", "255", "--format", "csv"]),
    ] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let path = dir.path().join(format!("{name}{run}.out"));
            let mut a = args.clone();
            a.extend(["--out", path.to_str().unwrap()]);
            let out = fracops(&a);
            assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
            let summary = std::fs::read(format!("{}.summary.json", path.display())).unwrap();
            outputs.push((std::fs::read(&path).unwrap(), summary));
        }
        assert!(!outputs[0].0.is_empty());
        assert_eq!(outputs[0], outputs[1], "{name}");
    }
}

#[test]
fn every_record_carries_an_error_field() {
    for args in [
        vec!["eval", "s=0.5", "x=0"],
        vec!["symbol", "s=0.3", "xi=1;2"],
        vec!["heat", "s=0.3", "points=3"],
        vec!["solve", "s=0.5", "N=31"],
        vec!["wos", "s=0.5", "samples=100"],
    ] {
        let out = fracops(&args);
        assert!(out.status.success());
        for line in String::from_utf8(out.stdout).unwrap().lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(
                ["err_est", "stderr", "residual"].iter().any(|k| v.get(k).is_some()),
                "{args:?}: {line}"
            );
        }
    }
}

#[test]
fn exit_codes() {
    assert_eq!(fracops(&["eval"]).status.code(), Some(1));
    assert_eq!(fracops(&["nonsense", "s=0.5"]).status.code(), Some(1));
    assert_eq!(fracops(&["eval", "s=0.5", "unknown=3"]).status.code(), Some(1));
    assert_eq!(fracops(&["--help"]).status.code(), Some(0));
    assert_eq!(fracops(&["heat", "--s", "abc"]).status.code(), Some(1));
}

#[test]
fn verify_subset_reports_named_checks() {
    let out = fracops(&["verify", "checks=1,2,5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.contains("\"name\":\"constants_half_laplacian\""));
}
