//! Artifact formats.
//!
//! CSV files are comma-separated with a header row and LF line endings;
//! every float is written as `{:.16e}` (17 significant digits, scientific
//! notation), so identical runs give identical bytes. Certificate and
//! coefficient files use `key = value` lines with polynomial matrices in the
//! round-trip text format of [`crate::polynomial::text`].

use std::fmt::Write as _;
use std::path::Path;

use crate::polynomial::text::{format_matrix, parse_matrix};
use crate::polynomial::SystemDef;
use crate::sos::Epsilons;
use crate::verify::{CertificateReport, Grid, LyapunovCertificate, TrajectoryRecord};
use crate::{Error, Result};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header plus one row per record.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// `iteration,loss,certified_loss`; iteration 0 is the initialization.
pub fn loss_csv(trace: &[f64], certified: &[f64]) -> String {
    csv(
        &["iteration", "loss", "certified_loss"],
        trace
            .iter()
            .zip(certified)
            .enumerate()
            .map(|(i, (l, c))| vec![i.to_string(), fmt_f64(*l), fmt_f64(*c)]),
    )
}

pub fn contour_csv(points: &[[f64; 3]]) -> String {
    csv(
        &["x1", "x2", "v"],
        points
            .iter()
            .map(|p| p.iter().map(|&v| fmt_f64(v)).collect()),
    )
}

/// `t, x1..xn, u1..um, v`.
pub fn trajectory_csv(rec: &TrajectoryRecord) -> String {
    let n = rec.states.first().map_or(0, |x| x.len());
    let m = rec.inputs.first().map_or(0, |u| u.len());
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=m).map(|i| format!("u{i}")));
    header.push("v".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    csv(
        &header,
        (0..rec.times.len()).map(|k| {
            let mut row = vec![fmt_f64(rec.times[k])];
            row.extend(rec.states[k].iter().map(|&v| fmt_f64(v)));
            row.extend(rec.inputs[k].iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(rec.v_values[k]));
            row
        }),
    )
}

/// Margins, factors and the grid report for one certificate.
pub fn certificate_text(
    cert: &LyapunovCertificate,
    grid: &Grid,
    report: &CertificateReport,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "eps1 = {:?}", cert.eps.eps1);
    let _ = writeln!(s, "eps2 = {:?}", cert.eps.eps2);
    let _ = writeln!(s, "p = {}", format_matrix(&cert.p));
    let _ = writeln!(s, "f = {}", format_matrix(&cert.f));
    let _ = writeln!(
        s,
        "grid = {:?} {:?} {}",
        grid.lo, grid.hi, grid.points_per_axis
    );
    let _ = writeln!(s, "min_eig_p = {}", fmt_f64(report.min_eig_p));
    let _ = writeln!(s, "max_eig_s = {}", fmt_f64(report.max_eig_s));
    let _ = writeln!(s, "points = {}", report.points);
    let _ = writeln!(s, "global = {}", report.global);
    let _ = writeln!(s, "pass = {}", report.pass);
    s
}

/// A certificate file read back: the certificate, its grid and the recorded
/// verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredCertificate {
    pub cert: LyapunovCertificate,
    pub grid: Grid,
    pub pass: bool,
}

fn field<'a>(text: &'a str, key: &str) -> Result<&'a str> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .find(|(k, _)| k.trim() == key)
        .map(|(_, v)| v.trim())
        .ok_or_else(|| Error::Parse(format!("certificate file lacks '{key}'")))
}

fn number<T: std::str::FromStr>(s: &str, key: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad '{key}' value '{s}'")))
}

pub fn parse_certificate(text: &str, sys: &SystemDef) -> Result<StoredCertificate> {
    let eps = Epsilons {
        eps1: number(field(text, "eps1")?, "eps1")?,
        eps2: number(field(text, "eps2")?, "eps2")?,
    };
    let p = parse_matrix(field(text, "p")?, sys.n())?;
    let f = parse_matrix(field(text, "f")?, sys.n())?;
    let grid_parts: Vec<&str> = field(text, "grid")?.split_whitespace().collect();
    let [lo, hi, count] = grid_parts[..] else {
        return Err(Error::Parse("grid needs 'lo hi points'".into()));
    };
    let grid = Grid {
        lo: number(lo, "grid")?,
        hi: number(hi, "grid")?,
        points_per_axis: number(count, "grid")?,
    };
    Ok(StoredCertificate {
        cert: LyapunovCertificate::new(sys, p, f, eps)?,
        grid,
        pass: number(field(text, "pass")?, "pass")?,
    })
}

pub fn load_certificate(path: &Path, sys: &SystemDef) -> Result<StoredCertificate> {
    parse_certificate(&std::fs::read_to_string(path)?, sys)
}
