//! Number formatting and file writers. CSV headers and column order are part
//! of the output schema and must not change.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub const COLLAPSE_HEADER: &[&str] = &["p", "P_X", "P_Y", "P_Z", "P_B", "X", "Y", "Z", "theta"];
pub const UNCOLLAPSE_HEADER: &[&str] = &["p", "P_X", "P_Y", "P_Z", "P_B", "X", "Y", "Z", "theta", "p_success"];
pub const QPT_HEADER: &[&str] = &["p", "fidelity", "chi_trace", "min_eigenvalue"];

const SIG_DIGITS: usize = 12;

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let r: f64 = format!("{:.*e}", SIG_DIGITS - 1, x).parse().expect("formatted float parses");
    if r == 0.0 { 0.0 } else { r }
}

/// `%.12g`-style rendering without trailing zeros.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if mantissa.trim_start_matches('-').chars().all(|ch| ch == '0' || ch == '.') {
        return "0".to_string();
    }
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub fn csv_string(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt_num(v)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    std::fs::write(path, csv_string(header, rows)).with_context(|| format!("cannot write {}", path.display()))
}

#[derive(Debug, Serialize)]
pub struct ChiFile {
    pub p: f64,
    pub basis: [&'static str; 4],
    pub real: [[f64; 4]; 4],
    pub imag: [[f64; 4]; 4],
    pub fidelity: f64,
    pub min_eigenvalue: f64,
}

impl ChiFile {
    pub fn new(p: f64, real: [[f64; 4]; 4], imag: [[f64; 4]; 4], fidelity: f64, min_eigenvalue: f64) -> Self {
        let r = |m: [[f64; 4]; 4]| m.map(|row| row.map(round_sig));
        Self {
            p: round_sig(p),
            basis: ["I", "X", "Y", "Z"],
            real: r(real),
            imag: r(imag),
            fidelity: round_sig(fidelity),
            min_eigenvalue: round_sig(min_eigenvalue),
        }
    }
}

/// `<dir>/<stem>.chi_p<p>.json` next to the fidelity CSV.
pub fn chi_path(out: &Path, p: f64) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "qpt".into());
    out.with_file_name(format!("{stem}.chi_p{}.json", fmt_num(p)))
}

pub fn write_chi(path: &Path, chi: &ChiFile) -> Result<()> {
    let mut text = serde_json::to_string_pretty(chi)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(0.15000000000000002), "0.15");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(-2.5e-7), "-2.5e-7");
        assert_eq!(fmt_num(1e-17), "1e-17");
        assert_eq!(fmt_num(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt_num(0.9999999999999999), "1");
    }

    #[test]
    fn csv_layout() {
        let s = csv_string(&["a", "b"], &[vec![1.0, 0.5]]);
        assert_eq!(s, "a,b\n1,0.5\n");
    }

    #[test]
    fn chi_file_name() {
        assert_eq!(chi_path(Path::new("/tmp/fid.csv"), 0.47), PathBuf::from("/tmp/fid.chi_p0.47.json"));
    }
}
