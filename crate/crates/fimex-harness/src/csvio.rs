//! Deterministic CSV and float formatting shared by all exports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fimex_core::Error;

/// 17 significant digits; round-trips f64 exactly.
pub fn fmt_f(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Write `lines` (already newline-free) joined by LF, with a trailing LF.
pub fn write_lines(path: &Path, header: &str, lines: &[String]) -> Result<(), Error> {
    let mut out = String::with_capacity(header.len() + lines.iter().map(|l| l.len() + 1).sum::<usize>() + 1);
    out.push_str(header);
    out.push('\n');
    for l in lines {
        out.push_str(l);
        out.push('\n');
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, out)?;
    Ok(())
}

/// Join fields with commas into a row.
pub fn row(fields: &[String]) -> String {
    let mut s = String::new();
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "{f}");
    }
    s
}
