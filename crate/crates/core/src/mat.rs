//! Dense row-major matrix, just enough surface for kernels and CSV I/O.

use crate::error::{Error, Result};
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Copies `Y[row_ix, col_ix]` into `dst` (shape must match).
    pub fn gather_into(&self, row_ix: &[usize], col_ix: &[usize], dst: &mut Mat) {
        debug_assert_eq!(dst.rows, row_ix.len());
        debug_assert_eq!(dst.cols, col_ix.len());
        for (a, &i) in row_ix.iter().enumerate() {
            for (b, &j) in col_ix.iter().enumerate() {
                dst.data[a * dst.cols + b] = self.data[i * self.cols + j];
            }
        }
    }

    pub fn submatrix(&self, row_ix: &[usize], col_ix: &[usize]) -> Mat {
        let mut out = Mat::zeros(row_ix.len(), col_ix.len());
        self.gather_into(row_ix, col_ix, &mut out);
        out
    }

    /// Applies a row and column permutation: `out[i][j] = self[sigma1[i]][sigma2[j]]`.
    pub fn permuted(&self, sigma1: &[usize], sigma2: &[usize]) -> Mat {
        self.submatrix(sigma1, sigma2)
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let mut w = BufWriter::new(w);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if j > 0 {
                    write!(w, ",")?;
                }
                write!(w, "{}", self.get(i, j))?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        self.write_csv(&mut f)
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Mat> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|tok| tok.trim().parse::<f64>()).collect();
            let row = row.map_err(|e| Error::Csv {
                line: lineno + 1,
                reason: e.to_string(),
            })?;
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(Error::Csv {
                        line: lineno + 1,
                        reason: format!("expected {} fields, got {}", first.len(), row.len()),
                    });
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Csv {
                line: 0,
                reason: "empty matrix".into(),
            });
        }
        Ok(Mat::from_rows(rows))
    }

    pub fn read_csv_path(path: &Path) -> Result<Mat> {
        let f = std::fs::File::open(path)?;
        Mat::read_csv(std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let m = Mat::from_rows(vec![vec![1.0, 2.5], vec![-3.0, 4.0e-9]]);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let back = Mat::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn gather_matches_submatrix() {
        let m = Mat::from_rows(vec![
            vec![1.0, 2.0, 3.0],
            vec![4.0, 5.0, 6.0],
            vec![7.0, 8.0, 9.0],
        ]);
        let sub = m.submatrix(&[2, 0], &[1]);
        assert_eq!(sub, Mat::from_rows(vec![vec![8.0], vec![2.0]]));
    }

    #[test]
    fn ragged_csv_rejected() {
        let r = Mat::read_csv(std::io::Cursor::new("1,2\n3\n"));
        assert!(r.is_err());
    }
}
