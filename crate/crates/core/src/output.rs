//! CSV and number formatting shared by every exporter.

use crate::error::{Error, Result};

/// 17 significant digits, enough to round-trip an `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comma-separated table with a header row and LF line endings.
pub fn csv_table(header: &[String], rows: &[Vec<f64>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::Io(e.to_string()))?;
    for row in rows {
        w.write_record(row.iter().map(|x| num(*x))).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// `t1`, `t2`, ... for an `n`-dimensional point.
pub fn coord_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        let x = 0.1_f64 + 0.2;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn table_has_header_and_lf() {
        let s = csv_table(&header(&["a", "b"]), &[vec![1.0, 2.0]]).unwrap();
        assert!(s.starts_with("a,b\n"));
        assert!(!s.contains('\r'));
        assert_eq!(s.lines().count(), 2);
    }
}
