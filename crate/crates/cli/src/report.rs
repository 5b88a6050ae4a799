//! JSON, CSV and plot-data writers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use layersolve::bvp::{CorrectionReport, TheoremRegions};
use layersolve::{Branch, BvpSolution, CompositeSolution, PainleveSolution};
use serde::Serialize;

use crate::config::Pair;
use crate::error::{CliError, CliResult};
use crate::sweep::{SweepReport, FIT_METRICS};

/// Newton solve summary.
#[derive(Debug, Clone, Serialize)]
pub struct BvpReport {
    #[serde(rename = "A")]
    pub a: f64,
    pub branches: Pair,
    pub newton_iters: usize,
    pub final_residual: f64,
    pub tol: f64,
    pub quadratic_tail: bool,
    pub region_sups: TheoremRegions,
    pub correction: CorrectionReport,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn write_csv(path: &Path, header: &[&str], columns: &[&[f64]]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    let csv_err = |e: csv::Error| CliError::Output(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(csv_err)?;
    let rows = columns.first().map_or(0, |c| c.len());
    for i in 0..rows {
        w.write_record(columns.iter().map(|c| c[i].to_string())).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

/// Whitespace-separated columns with a commented header, as gnuplot reads them.
pub fn write_dat(path: &Path, header: &[&str], columns: &[&[f64]]) -> CliResult<()> {
    let mut out = format!("# {}\n", header.join(" "));
    let rows = columns.first().map_or(0, |c| c.len());
    for i in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| c[i].to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(out.as_bytes()).map_err(io_err(path))
}

/// Compact label for an `A` value in file names.
pub fn a_label(a: f64) -> String {
    format!("A{a:.4e}").replace('.', "p")
}

pub fn branch_label(b: Branch) -> &'static str {
    match b {
        Branch::Plus => "plus",
        Branch::Minus => "minus",
    }
}

/// `s,Y,Yp` for a profile.
pub fn write_profile(dir: &Path, p: &PainleveSolution, plots: bool) -> CliResult<PathBuf> {
    let path = dir.join(format!("painleve_{}.csv", branch_label(p.branch())));
    let cols: [&[f64]; 3] = [p.grid().nodes(), p.y(), p.yp()];
    write_csv(&path, &["s", "Y", "Yp"], &cols)?;
    if plots {
        write_dat(&path.with_extension("dat"), &["s", "Y", "Yp"], &cols)?;
    }
    Ok(path)
}

/// `x,u_ap,up,upp,E` for a composite approximation.
pub fn write_composite(dir: &Path, c: &CompositeSolution, plots: bool) -> CliResult<PathBuf> {
    let pair = Pair(c.branches.0, c.branches.1);
    let path = dir.join(format!("composite_{}_{pair}.csv", a_label(c.config.a)));
    let cols: [&[f64]; 5] = [c.mesh.nodes(), &c.u, &c.up, &c.upp, &c.e];
    write_csv(&path, &["x", "u_ap", "up", "upp", "E"], &cols)?;
    if plots {
        write_dat(&path.with_extension("dat"), &["x", "u_ap", "E"], &[c.mesh.nodes(), &c.u, &c.e])?;
    }
    Ok(path)
}

/// `x,u,u_ap,phi` for a Newton solution.
pub fn write_solution(dir: &Path, s: &BvpSolution, plots: bool) -> CliResult<PathBuf> {
    let pair = s.branches.map_or("none".to_string(), |b| Pair(b.0, b.1).to_string());
    let path = dir.join(format!("solve_{}_{pair}.csv", a_label(s.a)));
    let cols: [&[f64]; 4] = [s.mesh.nodes(), &s.u, &s.u_ap, &s.phi];
    write_csv(&path, &["x", "u", "u_ap", "phi"], &cols)?;
    if plots {
        write_dat(&path.with_extension("dat"), &["x", "u", "u_ap", "phi"], &cols)?;
    }
    Ok(path)
}

/// Header of the per-cell sweep table.
pub const SWEEP_CSV_HEADER: [&str; 14] = [
    "A",
    "pair",
    "E_sup",
    "boundary_norm_sup",
    "middle_norm_sup",
    "newton_iters",
    "final_residual",
    "tol",
    "phi_sup",
    "lambda1",
    "morse_index",
    "max_ratio",
    "seed_gap",
    "error",
];

/// One row per `(A, pair)` cell.
pub fn write_sweep_csv(path: &Path, r: &SweepReport) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    let csv_err = |e: csv::Error| CliError::Output(format!("{}: {e}", path.display()));
    w.write_record(SWEEP_CSV_HEADER).map_err(csv_err)?;
    for p in &r.per_a {
        for c in &p.cells {
            let mut row = vec![p.a.to_string(), c.pair.to_string()];
            match &c.metrics {
                Some(m) => {
                    let l1 = m.spectrum.eigenvalues.first().copied().unwrap_or(f64::NAN);
                    row.extend(
                        [
                            m.residual.e_sup,
                            m.residual.boundary_norm_sup,
                            m.residual.middle_norm_sup,
                            m.newton_iters as f64,
                            m.final_residual,
                            m.tol,
                            m.correction.phi_sup,
                            l1,
                            m.spectrum.morse_index as f64,
                            m.apriori.max_ratio,
                            m.seed_gap,
                        ]
                        .iter()
                        .map(|v| v.to_string()),
                    );
                    row.push(String::new());
                }
                None => {
                    row.extend(std::iter::repeat_n(String::new(), 11));
                    row.push(c.error.clone().unwrap_or_default());
                }
            }
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush().map_err(io_err(path))
}

/// `sweep.json`, `sweep_cells.csv` and, with `plots`, one `log10 A, log10 value` file per fitted metric.
pub fn write_sweep(dir: &Path, r: &SweepReport, plots: bool) -> CliResult<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let json = dir.join("sweep.json");
    write_json(&json, r)?;
    let table = dir.join("sweep_cells.csv");
    write_sweep_csv(&table, r)?;
    let mut out = vec![json, table];
    if plots {
        for &pair in &r.pairs {
            let Some(series) = r.series(pair) else { continue };
            for (name, get) in FIT_METRICS {
                let pts: Vec<(f64, f64)> = series.iter().filter_map(|(a, m)| get(m).filter(|v| *v > 0.0).map(|v| (a.log10(), v.log10()))).collect();
                let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                let path = dir.join(format!("fit_{name}_{pair}.dat"));
                write_dat(&path, &["log10_A", &format!("log10_{name}")], &[&x, &y])?;
                out.push(path);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_are_file_safe() {
        assert_eq!(a_label(1e4), "A1p0000e4");
        assert!(!a_label(10f64.powf(3.5)).contains('.'));
    }

    #[test]
    fn dat_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.dat");
        write_dat(&p, &["x", "y"], &[&[1.0, 2.0], &[3.0, 4.5]]).unwrap();
        assert_eq!(fs::read_to_string(p).unwrap(), "# x y\n1 3\n2 4.5\n");
    }

    #[test]
    fn csv_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_csv(&p, &["s", "Y", "Yp"], &[&[0.0, 0.5], &[0.0, 0.25], &[1.0, 0.5]]).unwrap();
        assert_eq!(fs::read_to_string(p).unwrap(), "s,Y,Yp\n0,0,1\n0.5,0.25,0.5\n");
    }
}
