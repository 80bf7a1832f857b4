//! Convergence traces as CSV.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::optim::TraceRecord;

pub const HEADER: &str = "iter,wall_seconds,energy,energy_gap,grad_norm,alpha,restarted";

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// `n` significant digits in positional notation where practical.
pub fn fmt_sig(x: f64, n: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&mag) {
        return format!("{x:.*e}", n - 1);
    }
    let decimals = (n as i32 - 1 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn write_trace<W: Write>(mut w: W, records: &[TraceRecord], comments: &[String]) -> Result<()> {
    writeln!(w, "# energy_gap: energy above the lowest energy reached in the run")?;
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "{HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.iter,
            fmt17(r.wall_seconds),
            fmt17(r.energy),
            fmt17(r.energy_gap),
            fmt17(r.grad_norm),
            fmt17(r.alpha),
            u8::from(r.restarted)
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: BufRead>(r: R) -> Result<Vec<TraceRecord>> {
    let mut out = Vec::new();
    let mut seen_header = false;
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            if line != HEADER {
                return Err(Error::Format(format!("trace line {}: expected header '{HEADER}'", n + 1)));
            }
            seen_header = true;
            continue;
        }
        let bad = || Error::Format(format!("trace line {}: malformed record", n + 1));
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(bad());
        }
        let f = |i: usize| fields[i].parse::<f64>().map_err(|_| bad());
        out.push(TraceRecord {
            iter: fields[0].parse().map_err(|_| bad())?,
            wall_seconds: f(1)?,
            energy: f(2)?,
            energy_gap: f(3)?,
            grad_norm: f(4)?,
            alpha: f(5)?,
            restarted: match fields[6] {
                "0" => false,
                "1" => true,
                _ => return Err(bad()),
            },
        });
    }
    if !seen_header {
        return Err(Error::Format("trace has no header row".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_lossless() {
        let recs = vec![
            TraceRecord {
                iter: 0,
                wall_seconds: 0.001,
                energy: -12.942911769983699,
                energy_gap: 1.0 / 3.0,
                grad_norm: 3.2e-10,
                alpha: 0.0,
                restarted: false,
            },
            TraceRecord {
                iter: 1,
                wall_seconds: 0.25,
                energy: -12.9429155189828,
                energy_gap: 0.0,
                grad_norm: f64::MIN_POSITIVE,
                alpha: 0.125,
                restarted: true,
            },
        ];
        let mut buf = Vec::new();
        write_trace(&mut buf, &recs, &["method = adaptive_apg".into()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().any(|l| l == HEADER));
        assert_eq!(read_trace(&buf[..]).unwrap(), recs);
    }

    #[test]
    fn malformed_traces_rejected() {
        assert!(read_trace(&b"0,1,2,3,4,5,0\n"[..]).is_err());
        assert!(read_trace(format!("{HEADER}\n0,1,2\n").as_bytes()).is_err());
        assert!(read_trace(format!("{HEADER}\n0,1,2,3,4,5,yes\n").as_bytes()).is_err());
    }

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(-12.9429155189828, 15), "-12.9429155189828");
        assert_eq!(fmt_sig(-5.76164741513328, 15), "-5.76164741513328");
        assert_eq!(fmt_sig(-0.93081648457086, 14), "-0.93081648457086");
        assert_eq!(fmt_sig(0.0, 15), "0");
    }
}
