use std::path::Path;
use std::process::{Command, Output};

fn hubmagic(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hubmagic"))
        .args(args)
        .env("HUBMAGIC_CACHE_DIR", cache)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn catalog_summary_and_cache() {
    let dir = tempfile::tempdir().unwrap();
    for n in ["1", "2", "3"] {
        let o = hubmagic(dir.path(), &["catalog", "--build", n]);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        let want = match n {
            "1" => "6",
            "2" => "60",
            _ => "1080",
        };
        assert_eq!(row[1], want);
    }
    assert!(dir.path().join("stabilizer_catalog_n3_v1.bin").exists());
    let fresh = stdout(&hubmagic(tempfile::tempdir().unwrap().path(), &["catalog", "--build", "3"]));
    let cached = stdout(&hubmagic(dir.path(), &["catalog", "--build", "3"]));
    assert_eq!(fresh, cached);
    let bad = hubmagic(dir.path(), &["catalog", "--build", "7"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["ground", "--U-grid", "4:0:3"][..],
        &["ground", "--observables", "LR,nope"],
        &["ground", "--lp-tol", "0.5"],
        &["quench", "--boundary"],
        &["mix", "--pair", "sideways"],
        &["frobnicate"],
    ] {
        let o = hubmagic(dir.path(), args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "t = 1.0\nunknown_key = 3\n").unwrap();
    let o = hubmagic(dir.path(), &["ground", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = hubmagic(dir.path(), &["rom", "--state", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = hubmagic(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("thermal-scan"));
}

#[test]
fn partial_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = hubmagic(dir.path(), &["quench", "--time-grid=-1:1:3", "--observables", "d,purity"]);
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "time,d,purity,iterations,gap,error");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("-1,nan,nan,") && lines[1].contains("is negative"));
    assert!(lines[2].starts_with("0,") && lines[2].ends_with(','));
}

#[test]
fn config_file_with_overrides_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mix.toml");
    std::fs::write(
        &cfg,
        "U = 4.0\npair = \"doublon-minus\"\n\"lambda-grid\" = \"0:1:5\"\nobservables = [\"M2mix\", \"d\"]\nworkers = 3\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let a = hubmagic(dir.path(), &["mix", "--config", cfg]);
    let b = hubmagic(dir.path(), &["mix", "--config", cfg, "--workers", "1"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("lambda,M2mix,d,"));
    // U override wins over the file
    let c = hubmagic(dir.path(), &["mix", "--config", cfg, "--U", "1"]);
    assert_ne!(a.stdout, c.stdout);
    let out = dir.path().join("mix.jsonl");
    let d = hubmagic(dir.path(), &["mix", "--config", cfg, "--format", "records", "--out", out.to_str().unwrap()]);
    assert_eq!(d.status.code(), Some(0));
    assert!(d.stdout.is_empty());
    let records = std::fs::read_to_string(out).unwrap();
    assert_eq!(records.lines().count(), 5);
    let first = records.lines().next().unwrap();
    assert!(first.starts_with('{') && first.contains("\"lambda\":0") && first.contains("\"M2mix\":"));
}

#[test]
fn rom_on_single_qubit_state() {
    let dir = tempfile::tempdir().unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // (I + (X + Z)/√2)/2
    let state = format!(
        "{{\"n_qubits\": 1, \"matrix\": [[{a}, 0], [{b}, 0], [{b}, 0], [{c}, 0]]}}",
        a = 0.5 + 0.5 * h,
        b = 0.5 * h,
        c = 0.5 - 0.5 * h
    );
    let path = dir.path().join("h.json");
    std::fs::write(&path, state).unwrap();
    let o = hubmagic(dir.path(), &["rom", "--state", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let r: f64 = row[header.iter().position(|h| *h == "R").unwrap()].parse().unwrap();
    assert!((r - std::f64::consts::SQRT_2).abs() < 1e-9);
    let lr: f64 = row[header.iter().position(|h| *h == "LR").unwrap()].parse().unwrap();
    assert!((lr - 0.5).abs() < 1e-9);
}
