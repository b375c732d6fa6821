//! Comma-delimited numeric tables with a header row.
//!
//! Reals are printed with 17 significant digits so every `f64` survives a
//! write/read cycle bit for bit.

use std::io::BufRead;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub fn fmt_real<F: Real>(x: F) -> String {
    fmt_f64(x.to_f64().unwrap_or(f64::NAN))
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_field<T: FromStr>(row: &[String], col: usize) -> Result<T> {
    let raw = row
        .get(col)
        .ok_or_else(|| Error::input(format!("row has no column {col}")))?;
    raw.trim()
        .parse()
        .map_err(|_| Error::input(format!("cannot parse `{raw}` in column {col}")))
}

pub struct TableReader<R> {
    lines: std::io::Lines<R>,
    header: Vec<String>,
}

impl<R: BufRead> TableReader<R> {
    pub fn new(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = loop {
            match lines.next() {
                None => return Err(Error::input("table has no header row")),
                Some(line) => {
                    let line = line.map_err(|e| Error::input(e.to_string()))?;
                    if !line.starts_with('#') && !line.trim().is_empty() {
                        break split(&line);
                    }
                }
            }
        };
        Ok(Self { lines, header })
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.header.iter().any(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::input(format!("table has no column `{name}`")))
    }

    pub fn next_row(&mut self) -> Result<Option<Vec<String>>> {
        for line in self.lines.by_ref() {
            let line = line.map_err(|e| Error::input(e.to_string()))?;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let row = split(&line);
            if row.len() != self.header.len() {
                return Err(Error::input(format!(
                    "row has {} fields, header has {}",
                    row.len(),
                    self.header.len()
                )));
            }
            return Ok(Some(row));
        }
        Ok(None)
    }
}

fn split(line: &str) -> Vec<String> {
    line.split(',').map(|s| s.trim().to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 7.99936e-5, 1e-300, 123456.789, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            assert_eq!(
                s.split('e').next().unwrap().replace(['.', '-'], "").len(),
                17
            );
        }
    }

    #[test]
    fn reads_rows() {
        let text = "# comment\na,b\n1,2\n\n3,4\n";
        let mut r = TableReader::new(text.as_bytes()).unwrap();
        assert_eq!(r.column("b").unwrap(), 1);
        assert!(r.column("c").is_err());
        let row = r.next_row().unwrap().unwrap();
        assert_eq!(parse_field::<u32>(&row, 1).unwrap(), 2);
        assert!(r.next_row().unwrap().is_some());
        assert!(r.next_row().unwrap().is_none());
        let mut bad = TableReader::new("a,b\n1\n".as_bytes()).unwrap();
        assert!(bad.next_row().is_err());
        assert!(TableReader::new("".as_bytes()).is_err());
    }
}
