//! CSV and JSON output.

use std::io::Write;

use super::sweep::SweepResult;
use crate::error::Result;

pub const CSV_HEADER: [&str; 10] = [
    "method",
    "snr_db",
    "pilot_len",
    "trials",
    "failures",
    "rmse_u",
    "rmse_v",
    "rmse_r_m",
    "nmse_db",
    "mean_runtime_ms",
];

/// `printf("%.9g")`-style formatting: nine significant digits, trailing zeros
/// trimmed, exponent form outside `[1e-5, 1e9)`.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let p = digits.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in &result.rows {
        let f = |x: f64| format_sig(x, 9);
        w.write_record([
            row.method.as_str().to_string(),
            f(row.snr_db),
            row.pilot_len.to_string(),
            row.trials.to_string(),
            row.failures.to_string(),
            f(row.rmse_u),
            f(row.rmse_v),
            f(row.rmse_r_m),
            f(row.nmse_db),
            f(row.mean_runtime_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(result: &SweepResult) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(result, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
