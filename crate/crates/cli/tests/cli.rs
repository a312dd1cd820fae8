use std::process::{Command, Output};

fn fbec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_small_lattice() {
    let o = fbec(&["validate", "--dims", "2,2,2", "--construction", "four-star"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("[pass] golden merge"));
    assert!(out.contains("four-star"));
    assert!(!out.contains("[FAIL]"));
}

#[test]
fn validate_json() {
    let o = fbec(&["validate", "--construction", "six-ring", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert!(v["checks"].as_array().unwrap().len() > 10);
}

#[test]
fn rate_is_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for k in 0..2 {
        let path = dir.path().join(format!("rate{k}.csv"));
        let o = fbec(&[
            "rate", "--construction", "six-ring", "--pfail", "0.30", "--ploss", "0", "--d", "4", "--trials", "400",
            "--seed", "7", "--output", path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(o.stdout.is_empty());
        outs.push(std::fs::read(path).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
    let text = String::from_utf8(outs[0].clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "construction,dx,dy,dz,p_fail,p_loss,trials,failures,rate,stderr,seed");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("six-ring,4,4,4,0.3,0,400,"));
    assert!(lines[1].ends_with(",7"));
}

#[test]
fn worker_count_does_not_change_results() {
    let args = |w: &'static str| {
        vec![
            "rate", "--construction", "four-star", "--pfail", "0.2", "--d", "4", "--trials", "300", "--seed", "3",
            "--workers", w,
        ]
    };
    let a = fbec(&args("1"));
    let b = fbec(&args("2"));
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn seed_is_required() {
    let o = fbec(&["rate", "--construction", "four-star", "--pfail", "0.2", "--d", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--seed"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(fbec(&[]).status.code(), Some(2));
    assert_eq!(fbec(&["bogus"]).status.code(), Some(2));
    let o = fbec(&[
        "rate", "--construction", "four-star", "--pfail", "0.2", "--d", "4", "--seed", "1", "--format", "xml",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = fbec(&["rate", "--construction", "five-star", "--pfail", "0.2", "--d", "4", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = fbec(&["rate", "--construction", "four-star", "--pfail", "1.5", "--d", "4", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# small sweep\nconstruction = four-star\npfail = 0.1,0.2\nd = 4\ntrials = 50\nseed = 5\n",
    )
    .unwrap();
    let o = fbec(&["sweep", "--config", cfg.to_str().unwrap(), "--seed", "6", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["record"]["seed"], 6);
    assert_eq!(rows[0]["config"]["experiment"]["trials"], 50);
    assert_eq!(rows[0]["config"]["experiment"]["aggregation"], "long-axes");
    assert_eq!(rows[1]["record"]["params"]["p_fail"], 0.2);
}

#[test]
fn unknown_config_keys_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "seed = 1\ncolour = red\nsizes = 4\n").unwrap();
    let o = fbec(&["rate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("colour") && err.contains("sizes"), "{err}");
}

#[test]
fn curve_above_threshold_is_null() {
    let o = fbec(&[
        "curve", "--construction", "six-ring", "--pfail-presets", "0.5", "--d", "4,6", "--trials", "200", "--seed",
        "11", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["p_fail"], 0.5);
    assert!(rows[0]["p_loss_th"].is_null());
    assert_eq!(rows[0]["config"]["experiment"]["seed"], 11);
}

#[test]
fn threshold_json_has_estimate() {
    let o = fbec(&[
        "threshold", "--construction", "four-star", "--pfail", "0.1,0.15,0.2,0.25,0.3", "--d", "4,6", "--dz", "2",
        "--trials", "200", "--seed", "2", "--aggregation", "per-plane", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let p = v["threshold"]["p_th"].as_f64().unwrap();
    assert!(p > 0.1 && p < 0.3, "{p}");
    assert_eq!(v["records"].as_array().unwrap().len(), 10);
    assert_eq!(v["config"]["proxy"], "decoder");
}
