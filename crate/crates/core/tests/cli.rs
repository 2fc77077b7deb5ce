use std::process::Command;

fn nls_rhp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nls-rhp"))
}

#[test]
fn solve_writes_identical_csv_twice() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let st = nls_rhp()
            .args(["--fixture", "post-break", "--out-dir"])
            .arg(dir.path())
            .args(["--name", name, "sweep", "--param", "mu", "--lo", "1.98", "--hi", "2.02", "--step", "0.01"])
            .output()
            .unwrap();
        assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
        outputs.push(std::fs::read(dir.path().join(format!("{name}.csv"))).unwrap());
        assert!(dir.path().join(format!("{name}.json")).exists());
    }
    assert!(!outputs[0].is_empty());
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn solve_prints_csv_on_stdout() {
    let out = nls_rhp().args(["--fixture", "pre-break", "--format", "csv", "solve"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("j,alpha_re,alpha_im,residual,jacobian_re,jacobian_im"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((row[1] - 0.76441612869).abs() < 1e-9 && (row[2] - 0.85330200034).abs() < 1e-9);
    assert!(String::from_utf8(out.stderr).unwrap().contains("alpha_0"));
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["--x", "0.5", "--t", "0.45", "--mu", "2", "--genus", "2", "--seed", "1.0,0.2", "--seed", "-0.3,0.9", "solve"],
        vec!["--fixture", "post-break", "sweep", "--lo", "3", "--hi", "1"],
        vec!["--fixture", "nowhere", "solve"],
        vec!["--fixture", "post-break", "--seed", "1.0", "solve"],
    ] {
        let out = nls_rhp().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn explicit_genus_zero_seed_solves() {
    let out = nls_rhp()
        .args(["--x", "0.5", "--t", "0.1", "--mu", "2", "--seed", "0.7,0.8", "--format", "json", "solve"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "solve");
    assert_eq!(v["params"]["genus"], 0);
}
