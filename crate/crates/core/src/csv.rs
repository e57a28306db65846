//! Plain CSV output. Numbers are written with 17 significant digits in
//! Rust's locale-independent exponent notation.

use std::io::{self, Write};

use crate::series::MomentSeries;

/// 17 significant digits, `.` as decimal separator.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `t,Mz[,stderr]` with `t` converted to units of `1/γ`.
pub fn write_series<W: Write>(out: &mut W, series: &MomentSeries, gamma: f64, comment: &str) -> io::Result<()> {
    writeln!(
        out,
        "# {comment}; method={}; t in units of 1/gamma (gamma={}), Mz in units of q*hbar/(m*c)",
        series.method,
        fmt_num(gamma)
    )?;
    match &series.stderr {
        Some(se) => {
            writeln!(out, "t,Mz,stderr")?;
            for ((t, v), e) in series.times.iter().zip(&series.values).zip(se) {
                writeln!(out, "{},{},{}", fmt_num(gamma * t), fmt_num(*v), fmt_num(*e))?;
            }
        }
        None => {
            writeln!(out, "t,Mz")?;
            for (t, v) in series.times.iter().zip(&series.values) {
                writeln!(out, "{},{}", fmt_num(gamma * t), fmt_num(*v))?;
            }
        }
    }
    Ok(())
}

/// Two named columns, written as given.
pub fn write_columns<W: Write>(out: &mut W, comment: &str, names: (&str, &str), x: &[f64], y: &[f64]) -> io::Result<()> {
    writeln!(out, "# {comment}")?;
    writeln!(out, "{},{}", names.0, names.1)?;
    for (a, b) in x.iter().zip(y) {
        writeln!(out, "{},{}", fmt_num(*a), fmt_num(*b))?;
    }
    Ok(())
}
