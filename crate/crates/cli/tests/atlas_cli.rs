use std::process::Command;

fn atlas(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_linkfeel-atlas"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.success(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn sample_csv_has_one_row_per_vertex() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("field.csv");
    let (ok, stdout, stderr) = atlas(&[
        "sample",
        "--mech",
        "fivebar",
        "--kind",
        "fivebar_direct",
        "--mode",
        "WM2",
        "--grid",
        "30x20",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(ok, "{stderr}");
    assert!(stdout.contains("FiveBarDirect WM2"), "{stdout}");
    let text = std::fs::read_to_string(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,value"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 600);
    let max = rows
        .iter()
        .filter_map(|r| r.rsplit(',').next()?.parse::<f64>().ok())
        .filter(|v| !v.is_nan())
        .fold(0.0f64, f64::max);
    assert_eq!(max, 1.0);
}

#[test]
fn aspects_pgm_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("aspects.pgm");
    let (ok, stdout, stderr) = atlas(&[
        "aspects",
        "--mech",
        "serial",
        "--grid",
        "120x120",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(ok, "{stderr}");
    assert!(stdout.starts_with("aspects: 1\n"), "{stdout}");
    let bytes = std::fs::read(out).unwrap();
    assert!(bytes.starts_with(b"P5\n120 120\n255\n"));
    assert_eq!(bytes.len(), b"P5\n120 120\n255\n".len() + 120 * 120);
}

#[test]
fn joint_limits_split_the_serial_workspace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("limited.csv");
    let (ok, stdout, stderr) = atlas(&[
        "aspects",
        "--mech",
        "serial",
        "--mode",
        "AllPostures",
        "--theta1-limits",
        "-1.5707963267948966,1.5707963267948966",
        "--margin",
        "1.0",
        "--grid",
        "400x400",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(ok, "{stderr}");
    let count: u32 = stdout
        .lines()
        .next()
        .unwrap()
        .trim_start_matches("aspects: ")
        .parse()
        .unwrap();
    assert!(count > 1, "{stdout}");
}

#[test]
fn bad_arguments_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let txt = dir.path().join("field.txt");
    for args in [
        vec!["sample", "--mech", "serial", "--out", txt.to_str().unwrap()],
        vec!["sample", "--mech", "serial", "--lengths", "1,2,3", "--out", "x.csv"],
        vec![
            "sample",
            "--mech",
            "serial",
            "--kind",
            "fivebar_direct",
            "--out",
            "x.csv",
        ],
        vec!["sample", "--mech", "robot", "--out", "x.csv"],
        vec!["sample", "--mech", "serial", "--grid", "1x1", "--out", "x.csv"],
    ] {
        let (ok, _, stderr) = atlas(&args);
        assert!(!ok, "{args:?}");
        assert!(!stderr.is_empty());
    }
    assert!(!txt.exists());
}
