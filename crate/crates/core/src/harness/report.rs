use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::{ConvergenceReport, EpsilonReport, HydroOutcome};

pub const CONVERGENCE_HEADER: &str = "run_id,N,epsilon,l,M,t,l1_mean,l1_std,events_total,wall_seconds";

/// Seventeen significant digits, `.` as decimal separator.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn write_file(dir: &Path, name: &str, text: &str) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}

pub(crate) fn convergence_csv(report: &ConvergenceReport) -> String {
    let mut s = String::from(CONVERGENCE_HEADER);
    s.push('\n');
    for r in &report.rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.run_id,
            r.n,
            fmt_f64(r.epsilon),
            r.l,
            r.m,
            fmt_f64(r.t),
            fmt_f64(r.l1_mean),
            fmt_f64(r.l1_std),
            r.events_total,
            fmt_f64(r.wall_seconds)
        )
        .unwrap();
    }
    s
}

fn plot_data(report: &ConvergenceReport) -> String {
    let mut s = String::new();
    for (name, f) in [
        ("l1_mean", (|r: &super::ConvergenceRow| r.l1_mean) as fn(&super::ConvergenceRow) -> f64),
        ("l1_std", |r| r.l1_std),
    ] {
        writeln!(s, "# series {name}").unwrap();
        for r in &report.rows {
            writeln!(s, "{} {}", r.n, fmt_f64(f(r))).unwrap();
        }
        s.push('\n');
    }
    s
}

/// `convergence.csv` and `convergence_plot.dat` in `dir`; reruns overwrite
/// with identical bytes.
pub fn emit_report(report: &ConvergenceReport, dir: &Path) -> io::Result<Vec<PathBuf>> {
    Ok(vec![
        write_file(dir, "convergence.csv", &convergence_csv(report))?,
        write_file(dir, "convergence_plot.dat", &plot_data(report))?,
    ])
}

/// `epsilon.csv`: one row per level with the gap to the next level.
pub fn emit_epsilon_report(report: &EpsilonReport, dir: &Path) -> io::Result<PathBuf> {
    let mut s = String::from("epsilon,n_cells,t,l1_diff\n");
    for r in &report.rows {
        writeln!(s, "{},{},{},{}", fmt_f64(r.epsilon), r.n_cells, fmt_f64(report.t), fmt_f64(r.l1_diff)).unwrap();
    }
    write_file(dir, "epsilon.csv", &s)
}

/// `young.csv`: per lattice size and bin, the ensemble mean and variance.
pub fn emit_young(outcome: &HydroOutcome, dir: &Path) -> io::Result<PathBuf> {
    let mut s = String::from("N,bin,x_lo,x_hi,samples,mean,variance\n");
    for p in &outcome.points {
        let Some(y) = &p.young else { continue };
        for (b, st) in y.bins.iter().enumerate() {
            writeln!(
                s,
                "{},{},{},{},{},{},{}",
                p.n,
                b,
                fmt_f64(st.x_lo),
                fmt_f64(st.x_hi),
                st.samples.len(),
                fmt_f64(st.mean),
                fmt_f64(st.variance)
            )
            .unwrap();
        }
    }
    write_file(dir, "young.csv", &s)
}

#[cfg(test)]
mod tests {
    use super::super::ConvergenceRow;
    use super::*;

    fn row(n: usize) -> ConvergenceRow {
        ConvergenceRow {
            run_id: format!("r{n}"),
            n,
            epsilon: 0.1,
            l: 10,
            m: 50,
            t: 0.4,
            l1_mean: 1.0 / n as f64,
            l1_std: 0.01,
            events_total: 1000,
            wall_seconds: 0.0,
            error: None,
        }
    }

    #[test]
    fn formatting() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.5), "-2.5000000000000000e0");
    }

    #[test]
    fn empty_report_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let r = ConvergenceReport { rows: vec![], reference: None };
        emit_report(&r, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
        assert_eq!(text, format!("{CONVERGENCE_HEADER}\n"));
    }

    #[test]
    fn four_rows_and_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let r = ConvergenceReport {
            rows: [250, 500, 1000, 2000].map(row).to_vec(),
            reference: None,
        };
        emit_report(&r, dir.path()).unwrap();
        let first = fs::read(dir.path().join("convergence.csv")).unwrap();
        let plot = fs::read(dir.path().join("convergence_plot.dat")).unwrap();
        let text = String::from_utf8(first.clone()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        for l in &lines[1..] {
            assert_eq!(l.split(',').count(), 10);
        }
        emit_report(&r, dir.path()).unwrap();
        assert_eq!(fs::read(dir.path().join("convergence.csv")).unwrap(), first);
        assert_eq!(fs::read(dir.path().join("convergence_plot.dat")).unwrap(), plot);
    }
}
