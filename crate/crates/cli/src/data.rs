//! CSV input schemas, one per model. All files have a header row.
//!
//! | model        | columns                         |
//! |--------------|---------------------------------|
//! | multinomial  | `count`, one row per cell       |
//! | weibull      | `x`                             |
//! | hdreg        | `y` plus one column per predictor |
//! | npreg        | `x`, `y`, `x` strictly increasing in `[0, 1]` |
//! | normal-mean  | `x`                             |
//! | binomial     | `n`, `x`, a single row          |

use std::path::Path;
use std::str::FromStr;

use loci_models::calibration::{BinomialCount, NormalSample};
use loci_models::multinomial::CellCounts;
use loci_models::weibull::WeibullSample;
use nalgebra::{DMatrix, DVector};

use crate::error::{CliError, Result};

/// Header and rows of a CSV file, kept as text.
pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Self::parse(&bytes)
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let bad = |e: csv::Error| CliError::Input(format!("malformed CSV: {e}"));
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
        let headers = r.headers().map_err(bad)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(bad)?.iter().map(str::to_string).collect());
        }
        if rows.is_empty() {
            return Err(CliError::Input("data file has no rows".into()));
        }
        Ok(Self { headers, rows })
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.headers.iter().position(|h| h == name).ok_or_else(|| CliError::Input(format!("missing column '{name}'")))
    }

    fn column<T: FromStr>(&self, name: &str) -> Result<Vec<T>> {
        let j = self.index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row[j]
                    .parse()
                    .map_err(|_| CliError::Input(format!("row {}: bad value '{}' in '{name}'", i + 1, row[j])))
            })
            .collect()
    }

    fn finite(&self, name: &str) -> Result<Vec<f64>> {
        let v: Vec<f64> = self.column(name)?;
        match v.iter().position(|x| !x.is_finite()) {
            Some(i) => Err(CliError::Input(format!("row {}: non-finite value in '{name}'", i + 1))),
            None => Ok(v),
        }
    }
}

pub fn multinomial(t: &Table) -> Result<CellCounts> {
    let counts = t.column("count")?;
    Ok(CellCounts { counts })
}

pub fn weibull(t: &Table) -> Result<WeibullSample> {
    Ok(WeibullSample::new(t.finite("x")?)?)
}

pub fn normal(t: &Table) -> Result<NormalSample<f64>> {
    Ok(NormalSample::from_values(&t.finite("x")?)?)
}

pub fn binomial(t: &Table) -> Result<BinomialCount> {
    if t.rows.len() != 1 {
        return Err(CliError::Input(format!("binomial data needs one row, got {}", t.rows.len())));
    }
    let n: u64 = t.column("n")?[0];
    let x: u64 = t.column("x")?[0];
    if x > n {
        return Err(CliError::Input(format!("x = {x} exceeds n = {n}")));
    }
    Ok(BinomialCount { n, x })
}

/// `(x, y)` of a regression on a fixed design.
pub fn npreg(t: &Table) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok((t.finite("x")?, t.finite("y")?))
}

/// Design matrix from every column except `y`, in header order.
pub fn hdreg(t: &Table) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let y = t.finite("y")?;
    let names: Vec<&String> = t.headers.iter().filter(|h| *h != "y").collect();
    if names.is_empty() {
        return Err(CliError::Input("no predictor columns".into()));
    }
    let cols = names.iter().map(|h| t.finite(h)).collect::<Result<Vec<_>>>()?;
    let x = DMatrix::from_fn(y.len(), cols.len(), |i, j| cols[j][i]);
    Ok((x, DVector::from_vec(y)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_are_found_by_name() {
        let t = Table::parse(b"y,x2,x1\n1,2,3\n4,5,6\n").unwrap();
        let (x, y) = hdreg(&t).unwrap();
        assert_eq!(y.as_slice(), &[1.0, 4.0]);
        assert_eq!(x[(1, 0)], 5.0);
        assert_eq!(x[(0, 1)], 3.0);
    }

    #[test]
    fn malformed_input_is_an_input_error() {
        let input_err = |r: Result<()>| matches!(r, Err(CliError::Input(_)));
        let bin = |text: &[u8]| Table::parse(text).and_then(|t| binomial(&t).map(|_| ()));
        assert!(input_err(bin(b"n,x\n10\n")));
        assert!(input_err(bin(b"n,x\n10,11\n")));
        assert!(input_err(bin(b"n,x\n")));
        assert!(input_err(bin(b"n,x\n10,1\n10,2\n")));
        assert!(input_err(bin(b"n,k\n10,1\n")));
        assert!(input_err(Table::parse(b"count\nabc\n").and_then(|t| multinomial(&t).map(|_| ()))));
        assert!(input_err(Table::parse(b"x\n1\nNaN\n").and_then(|t| normal(&t).map(|_| ()))));
    }
}
