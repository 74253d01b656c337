use std::fs;
use std::path::Path;
use std::process::Command;

fn discoflux(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_discoflux")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.cfg");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn is_number_field(f: &str) -> bool {
    // integers, or d.dddddddddddddddde±x with seventeen significant digits
    if f.bytes().all(|b| b.is_ascii_digit()) {
        return true;
    }
    let f = f.strip_prefix('-').unwrap_or(f);
    let Some((mantissa, exp)) = f.split_once('e') else { return false };
    let exp_ok = exp.strip_prefix('-').unwrap_or(exp).bytes().all(|b| b.is_ascii_digit());
    let digits: Vec<&str> = mantissa.split('.').collect();
    exp_ok && digits.len() == 2 && digits[0].len() == 1 && digits[1].len() == 16
}

fn assert_csv_numbers(path: &Path, text_columns: &[usize]) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let width = lines.next().unwrap().split(',').count();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), width, "{}: {line}", path.display());
        for (i, f) in fields.iter().enumerate() {
            if !text_columns.contains(&i) {
                assert!(is_number_field(f), "{}: field {f:?}", path.display());
            }
        }
    }
}

#[test]
fn golden_convergence_csv() {
    let dir = tempfile::tempdir().unwrap();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let cfg = golden.join("smoke.cfg");
    let out = dir.path().join("out");
    let (code, _, err) = discoflux(&["hydro", "--config", cfg.to_str().unwrap(), "--seed", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let produced = fs::read_to_string(out.join("convergence.csv")).unwrap();
    let expected = fs::read_to_string(golden.join("convergence_smoke.csv")).unwrap();
    assert_eq!(produced, expected);
    assert_csv_numbers(&out.join("convergence.csv"), &[0]);
}

#[test]
fn every_subcommand_writes_reproducible_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "n_ladder = 32\nreplicas = 4\nblock = 2\nt = 0.1\ngrid = 256\nsnapshots = 0.05,0.1\nalpha = 0.3,0.5\ndeterministic = true\n",
    );
    for cmd in ["solve", "steady", "zrp", "couple", "audit", "hydro"] {
        let a = dir.path().join(format!("{cmd}_a"));
        let b = dir.path().join(format!("{cmd}_b"));
        for (out, threads) in [(&a, "1"), (&b, "2")] {
            let (code, _, err) =
                discoflux(&[cmd, "--config", &cfg, "--seed", "5", "--out", out.to_str().unwrap(), "--threads", threads]);
            assert!(code == 0 || code == 2, "{cmd}: exit {code}: {err}");
        }
        let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert!(!names.is_empty(), "{cmd} wrote nothing");
        for name in names {
            let (pa, pb) = (a.join(&name), b.join(&name));
            assert_eq!(fs::read(&pa).unwrap(), fs::read(&pb).unwrap(), "{cmd}: {name:?} differs");
            if pa.extension().is_some_and(|e| e == "csv") {
                let text_cols: &[usize] = match name.to_str().unwrap() {
                    "audit.csv" => &[1],
                    "convergence.csv" => &[0],
                    _ => &[],
                };
                assert_csv_numbers(&pa, text_cols);
            }
        }
    }
    assert!(dir.path().join("solve_a/snapshot_001.csv").exists());
    assert!(dir.path().join("steady_a/steady_001.csv").exists());
    assert!(dir.path().join("zrp_a/occupancy_1.csv").exists());
    assert!(dir.path().join("zrp_a/block_1.csv").exists());
    assert!(dir.path().join("couple_a/couple_trace.csv").exists());
    assert!(dir.path().join("couple_a/entropy_functional_J8.csv").exists());
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t = 0.1\ncolour = blue\n");
    let (code, _, err) = discoflux(&["solve", "--config", &cfg]);
    assert_eq!(code, 1);
    assert!(err.contains("unknown key"), "{err}");
    let (code, _, _) = discoflux(&["solve", "--config", "/nonexistent/run.cfg"]);
    assert_eq!(code, 1);
    let cfg = write_config(dir.path(), "n_ladder = 64,32\n");
    assert_eq!(discoflux(&["hydro", "--config", &cfg]).0, 1);
}

#[test]
fn failed_check_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "grid = 256\nt = 0.1\naudit_tolerance = 0\n");
    let out = dir.path().join("out");
    let (code, stdout, _) = discoflux(&["audit", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2, "{stdout}");
    assert!(stdout.contains("FAIL"));
}

#[test]
fn help_documents_config_keys() {
    let (code, stdout, _) = discoflux(&["--help"]);
    assert_eq!(code, 0);
    for key in ["lambda", "n_ladder", "replicas", "audit_tolerance", "deterministic"] {
        assert!(stdout.contains(key), "{key}");
    }
}
