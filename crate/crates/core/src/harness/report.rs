//! Report types, error measures and CSV emission.

use std::io::Write;
use std::path::Path;

use ndarray::Array1;

use crate::field::Field;
use crate::harness::config::ErrorKind;
use crate::stepper::Scheme;
use crate::{Error, Result};

/// Maximum-norm distance (complex modulus entrywise).
pub fn error_linf<S: Field>(u: &Array1<S>, v: &Array1<S>) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "cannot compare vectors of lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    Ok(u.iter()
        .zip(v.iter())
        .map(|(a, b)| (*a - *b).abs())
        .fold(0.0, f64::max))
}

/// Maximum-norm distance over the nodes whose positions fall inside the
/// closed window.
pub fn error_linf_window<S: Field>(
    u: &Array1<S>,
    v: &Array1<S>,
    xs: &[f64],
    window: [f64; 2],
) -> Result<f64> {
    if u.len() != v.len() || u.len() != xs.len() {
        return Err(Error::DimensionMismatch(
            "window error needs equal-length vectors and positions".into(),
        ));
    }
    let mut any = false;
    let mut best = 0.0f64;
    for ((a, b), &x) in u.iter().zip(v.iter()).zip(xs.iter()) {
        if x >= window[0] && x <= window[1] {
            any = true;
            best = best.max((*a - *b).abs());
        }
    }
    if !any {
        return Err(Error::Config(format!(
            "window [{}, {}] contains no grid nodes",
            window[0], window[1]
        )));
    }
    Ok(best)
}

/// `log2(e_coarse / e_fine)` for a halved step pair; `None` when either
/// error vanishes or is negative (undefined order).
pub fn observed_order(e_coarse: f64, e_fine: f64) -> Option<f64> {
    if e_coarse > 0.0 && e_fine > 0.0 {
        Some((e_coarse / e_fine).log2())
    } else {
        None
    }
}

/// Least-squares slope of `log(err)` against `log(tau)`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, e)| *t > 0.0 && *e > 0.0)
        .map(|&(t, e)| (t.ln(), e.ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |o| format!("{o:.6}"))
}

/// Anything the CLI can write as a CSV file.
pub trait CsvReport {
    fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()>;
}

/// Write a report to `path` (the whole file is produced in one shot so
/// reruns are byte-identical).
pub fn emit_csv<R: CsvReport>(report: &R, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    report
        .write_csv(&mut buf)
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
    std::fs::write(path, buf).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub scheme: Scheme,
    pub tau: f64,
    pub error: f64,
    pub order: Option<f64>,
}

/// Rows of `(scheme, tau, max-norm error, observed order)`, one error kind
/// per report.
#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub error_kind: ErrorKind,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    /// Rows of one scheme in ladder order (tau descending).
    pub fn scheme_rows(&self, scheme: Scheme) -> Vec<&ConvergenceRow> {
        self.rows.iter().filter(|r| r.scheme == scheme).collect()
    }

    /// Observed order of the finest consecutive pair for a scheme.
    pub fn finest_order(&self, scheme: Scheme) -> Option<f64> {
        self.scheme_rows(scheme).last().and_then(|r| r.order)
    }
}

impl CsvReport for ConvergenceReport {
    fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "scheme,tau,error_linf,observed_order")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.6e},{:.6e},{}",
                r.scheme.name(),
                r.tau,
                r.error,
                fmt_opt(r.order)
            )?;
        }
        Ok(())
    }
}

/// Global errors of the four corrected schemes on one comparison cell.
#[derive(Clone, Debug)]
pub struct ComparisonCell {
    pub reaction: String,
    pub coefficient: String,
    pub t: f64,
    pub tdbc2: f64,
    pub tdbc3: f64,
    pub cec2: f64,
    pub cec3: f64,
}

impl ComparisonCell {
    /// Best TDBC error over best CEC error (> 1 means CEC wins).
    pub fn ratio(&self) -> f64 {
        self.tdbc2.min(self.tdbc3) / self.cec2.min(self.cec3)
    }

    /// Accuracy gain going from second to third order, per method.
    pub fn cec_gain(&self) -> f64 {
        self.cec2 / self.cec3
    }

    pub fn tdbc_gain(&self) -> f64 {
        self.tdbc2 / self.tdbc3
    }
}

#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub n: usize,
    pub tau: f64,
    pub times: Vec<f64>,
    pub cells: Vec<ComparisonCell>,
}

impl ComparisonReport {
    pub fn cells_at(&self, t: f64) -> Vec<&ComparisonCell> {
        self.cells.iter().filter(|c| c.t == t).collect()
    }
}

impl CsvReport for ComparisonReport {
    fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "reaction,coefficient,t,tdbc2_error,tdbc3_error,cec2_error,cec3_error,ratio,cec_gain,tdbc_gain"
        )?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
                c.reaction,
                c.coefficient,
                c.t,
                c.tdbc2,
                c.tdbc3,
                c.cec2,
                c.cec3,
                c.ratio(),
                c.cec_gain(),
                c.tdbc_gain()
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ResonanceRow {
    pub scheme: Scheme,
    pub tau: f64,
    pub error: f64,
}

/// Global error over a log-spaced step-size sweep.
#[derive(Clone, Debug)]
pub struct ResonanceReport {
    pub rows: Vec<ResonanceRow>,
}

impl ResonanceReport {
    pub fn scheme_points(&self, scheme: Scheme) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.scheme == scheme)
            .map(|r| (r.tau, r.error))
            .collect()
    }
}

impl CsvReport for ResonanceReport {
    fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "scheme,tau,error_linf")?;
        for r in &self.rows {
            writeln!(w, "{},{:.6e},{:.6e}", r.scheme.name(), r.tau, r.error)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TraceRow {
    pub scheme: Scheme,
    pub tau: f64,
    pub t: f64,
    pub local: f64,
    pub global: f64,
}

/// Per-step local and global error time series.
#[derive(Clone, Debug)]
pub struct TraceReport {
    pub rows: Vec<TraceRow>,
}

impl CsvReport for TraceReport {
    fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "scheme,tau,t,local_error,global_error")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.6e},{:.6e},{:.6e},{:.6e}",
                r.scheme.name(),
                r.tau,
                r.t,
                r.local,
                r.global
            )?;
        }
        Ok(())
    }
}
