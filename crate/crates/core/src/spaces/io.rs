use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// JSON wrapper for a row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixFile {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let data = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)])
            .collect();
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Parse(format!(
                "matrix declares {}x{} but holds {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn read_csv_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("{}: bad number '{f}'", path.display())))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a matrix from CSV (row-major, no header) or the JSON wrapper.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    if is_json(path) {
        let f: MatrixFile = serde_json::from_str(&fs::read_to_string(path)?)?;
        return f.to_matrix();
    }
    let rows = read_csv_rows(path)?;
    let cols = rows.first().map_or(0, |r| r.len());
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse(format!("{}: ragged or empty matrix", path.display())));
    }
    let data: Vec<f64> = rows.concat();
    Ok(DMatrix::from_row_slice(rows.len(), cols, &data))
}

/// Writes a matrix as CSV or JSON depending on the extension.
pub fn write_matrix(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    if is_json(path) {
        fs::write(path, serde_json::to_string_pretty(&MatrixFile::from_matrix(m))?)?;
        return Ok(());
    }
    let mut w = csv::Writer::from_path(path)?;
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|x| format_f64(*x)))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a vector: a CSV with one row or one column, a JSON array, or a
/// JSON matrix wrapper with a single row or column.
pub fn read_vector(path: impl AsRef<Path>) -> Result<DVector<f64>> {
    let path = path.as_ref();
    if is_json(path) {
        let text = fs::read_to_string(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let data: Vec<f64> = if value.is_array() {
            serde_json::from_value(value)?
        } else {
            let f: MatrixFile = serde_json::from_value(value)?;
            if f.rows != 1 && f.cols != 1 {
                return Err(Error::Parse(format!("{}: not a vector", path.display())));
            }
            f.to_matrix()?;
            f.data
        };
        return Ok(DVector::from_vec(data));
    }
    let rows = read_csv_rows(path)?;
    let data: Vec<f64> = if rows.len() == 1 {
        rows[0].clone()
    } else if rows.iter().all(|r| r.len() == 1) {
        rows.concat()
    } else {
        return Err(Error::Parse(format!("{}: not a vector", path.display())));
    };
    if data.is_empty() {
        return Err(Error::Parse(format!("{}: empty vector", path.display())));
    }
    Ok(DVector::from_vec(data))
}

/// Writes a vector as a single-column CSV or a JSON array.
pub fn write_vector(path: impl AsRef<Path>, v: &DVector<f64>) -> Result<()> {
    let path = path.as_ref();
    if is_json(path) {
        fs::write(path, serde_json::to_string(&v.iter().collect::<Vec<_>>())?)?;
        return Ok(());
    }
    let mut w = csv::Writer::from_path(path)?;
    for x in v.iter() {
        w.write_record([format_f64(*x)])?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest string that parses back to the same f64.
pub(crate) fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let m = DMatrix::from_row_slice(2, 3, &[1.0, -2.5, 1.0 / 3.0, 0.0, 1e-17, 7.0]);
        for name in ["m.csv", "m.json"] {
            let p = dir.path().join(name);
            write_matrix(&p, &m).unwrap();
            assert_eq!(read_matrix(&p).unwrap(), m);
        }
        let v = DVector::from_vec(vec![0.1, 0.2, std::f64::consts::PI]);
        for name in ["v.csv", "v.json"] {
            let p = dir.path().join(name);
            write_vector(&p, &v).unwrap();
            assert_eq!(read_vector(&p).unwrap(), v);
        }
        let p = dir.path().join("row.csv");
        fs::write(&p, "1, 2, 3\n").unwrap();
        assert_eq!(read_vector(&p).unwrap().len(), 3);
    }

    #[test]
    fn rejects_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "1,2\n3\n").unwrap();
        assert!(read_matrix(&p).is_err());
        let p = dir.path().join("bad.json");
        fs::write(&p, r#"{"rows":2,"cols":2,"data":[1,2,3]}"#).unwrap();
        assert!(read_matrix(&p).is_err());
    }
}
