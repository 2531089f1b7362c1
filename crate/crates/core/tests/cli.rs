//! End-to-end checks of the command-line surface: subcommands, file formats,
//! exit codes.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nlsdirac"))
}

#[test]
fn dirac_prints_json_and_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["dirac", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["n_star"], 1);
    assert!((json["c_sharp"].as_f64().unwrap() - 6.2608683).abs() < 1e-6);
    assert!(dir.path().join("dirac.json").exists());
}

#[test]
fn gap_open_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("gap.conf");
    std::fs::write(&conf, "potential = 2:5,1:1\n").unwrap();
    let out = bin()
        .args(["dirac", "--config"])
        .arg(&conf)
        .args(["--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_error_exits_with_code_one() {
    let out = bin().arg("no-such-subcommand").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["nls", "--inv-epsilon", "7"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bands_csv_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["bands", "--k-points", "9", "--n-bands", "4", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("bands.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "k,mu_1,mu_2,mu_3,mu_4");
    assert_eq!(lines.len(), 10);
    // 15 significant digits
    assert!(lines[1]
        .split(',')
        .all(|f| f.contains('e') && f.len() >= 16));
}

#[test]
fn nld_and_nls_emit_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "nld",
            "--c-sharp",
            "6.2832",
            "--beta1",
            "1.0",
            "--beta2",
            "0.0",
            "--t-final",
            "0.1",
            "--samples",
            "3",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("nld.csv")).unwrap();
    assert!(csv.starts_with("t,x,re_minus,im_minus,re_plus,im_plus\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 256);

    let out = bin()
        .args([
            "nls",
            "--inv-epsilon",
            "8",
            "--t-final",
            "0.02",
            "--samples",
            "2",
            "--length",
            "8",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let cons = std::fs::read_to_string(dir.path().join("conservation.csv")).unwrap();
    let lines: Vec<&str> = cons.lines().collect();
    assert_eq!(lines[0], "t,mass,energy");
    assert_eq!(lines.len(), 3);
    // mass column is conserved across the log
    let mass: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!((mass[0] - mass[1]).abs() / mass[0] < 1e-10);
}
