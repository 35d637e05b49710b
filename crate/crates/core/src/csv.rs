//! Minimal CSV formatting shared by the exporters.

use std::io::Write;

use crate::error::Result;

/// A float at 17 significant digits, enough to round-trip any `f64`.
pub fn sig17(value: f64) -> String {
    format!("{value:.16e}")
}

/// Writes `header`, then one line per row of pre-formatted cells.
pub fn write_table<W: Write>(mut out: W, comment: Option<&str>, header: &str, rows: &[Vec<String>]) -> Result<()> {
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 8.0, 123_456_789.123_456_78, f64::MIN_POSITIVE] {
            let s = sig17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
            let mantissa = s.split('e').next().unwrap();
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
    }

    #[test]
    fn table_layout() {
        let mut buf = Vec::new();
        let rows = vec![vec!["0".to_string(), sig17(1.5)]];
        write_table(&mut buf, Some("alpha=1"), "n,k_n", &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# alpha=1\nn,k_n\n0,1.5000000000000000e0\n");
    }
}
