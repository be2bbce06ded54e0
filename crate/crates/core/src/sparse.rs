//! Row-indexed sparse real square matrices.
//!
//! This is the carrier type for every orthogonal matrix in the crate: Givens
//! rotations, weaved matrices, block-diagonal rotations and rotated electric
//! coupling matrices. Entries are stored per row as `(column, value)` pairs
//! with strictly increasing columns and no explicit zeros.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Values with magnitude at or below this threshold are dropped when entries
/// are produced by arithmetic. The constructions in this crate generate no
/// legitimately tiny values at the dimensions of interest.
pub const DROP_TOLERANCE: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseRowMatrix {
    dim: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRowMatrix {
    /// Matrix of the given dimension with no stored entries.
    pub fn zeros(dim: usize) -> Self {
        SparseRowMatrix {
            dim,
            rows: vec![Vec::new(); dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        SparseRowMatrix {
            dim,
            rows: (0..dim).map(|i| vec![(i, 1.0)]).collect(),
        }
    }

    /// Build from per-row entry lists. Entries are sorted, zero values are
    /// dropped and indices are validated.
    pub fn from_rows(dim: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if rows.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} rows, got {}",
                dim,
                rows.len()
            )));
        }
        let mut out = Vec::with_capacity(dim);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(c, _)| c);
            for win in row.windows(2) {
                if win[0].0 == win[1].0 {
                    return Err(Error::invalid(format!(
                        "duplicate column {} in row {}",
                        win[0].0, i
                    )));
                }
            }
            if let Some(&(c, _)) = row.last() {
                if c >= dim {
                    return Err(Error::invalid(format!(
                        "column {} out of range in row {} (dim {})",
                        c, i, dim
                    )));
                }
            }
            row.retain(|&(_, v)| v.abs() > DROP_TOLERANCE);
            out.push(row);
        }
        Ok(SparseRowMatrix { dim, rows: out })
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Result<Self> {
        let dim = dense.len();
        let rows = dense
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| v.abs() > DROP_TOLERANCE)
                    .map(|(c, &v)| (c, v))
                    .collect()
            })
            .collect();
        Self::from_rows(dim, rows)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.dim]; self.dim];
        for (i, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                out[i][c] = v;
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.rows[i].binary_search_by_key(&j, |&(c, _)| c) {
            Ok(pos) => self.rows[i][pos].1,
            Err(_) => 0.0,
        }
    }

    /// Insert, overwrite or remove (when the value is below the drop
    /// threshold) a single entry, keeping the row sorted.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i < self.dim && j < self.dim);
        let row = &mut self.rows[i];
        match row.binary_search_by_key(&j, |&(c, _)| c) {
            Ok(pos) => {
                if value.abs() > DROP_TOLERANCE {
                    row[pos].1 = value;
                } else {
                    row.remove(pos);
                }
            }
            Err(pos) => {
                if value.abs() > DROP_TOLERANCE {
                    row.insert(pos, (j, value));
                }
            }
        }
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Number of non-zero entries in the given row (φ_j).
    pub fn row_sparsity(&self, row: usize) -> usize {
        self.rows[row].len()
    }

    /// Largest per-row non-zero count (η), zero for an empty matrix.
    pub fn sparsity(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn transpose(&self) -> SparseRowMatrix {
        let mut rows = vec![Vec::new(); self.dim];
        for (i, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                rows[c].push((i, v));
            }
        }
        // Source rows are scanned in order, so each transposed row is sorted.
        SparseRowMatrix {
            dim: self.dim,
            rows,
        }
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &SparseRowMatrix) -> Result<SparseRowMatrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.dim, self.dim, other.dim, other.dim
            )));
        }
        let mut rows = Vec::with_capacity(self.dim);
        let mut acc = vec![0.0; self.dim];
        let mut touched = Vec::new();
        for row in &self.rows {
            for &(k, v) in row {
                for &(c, w) in &other.rows[k] {
                    if acc[c] == 0.0 {
                        touched.push(c);
                    }
                    acc[c] += v * w;
                }
            }
            touched.sort_unstable();
            let mut out = Vec::with_capacity(touched.len());
            for &c in &touched {
                if acc[c].abs() > DROP_TOLERANCE {
                    out.push((c, acc[c]));
                }
                acc[c] = 0.0;
            }
            touched.clear();
            rows.push(out);
        }
        Ok(SparseRowMatrix {
            dim: self.dim,
            rows,
        })
    }

    /// Place square blocks along the diagonal.
    pub fn block_diag(blocks: &[SparseRowMatrix]) -> SparseRowMatrix {
        let dim = blocks.iter().map(|b| b.dim).sum();
        let mut rows = Vec::with_capacity(dim);
        let mut offset = 0;
        for block in blocks {
            for row in &block.rows {
                rows.push(row.iter().map(|&(c, v)| (c + offset, v)).collect());
            }
            offset += block.dim;
        }
        SparseRowMatrix { dim, rows }
    }

    /// Max-norm of `self * selfᵀ − I`.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                let mut dot = 0.0;
                let (a, b) = (&self.rows[i], &self.rows[j]);
                let (mut ia, mut ib) = (0, 0);
                while ia < a.len() && ib < b.len() {
                    match a[ia].0.cmp(&b[ib].0) {
                        std::cmp::Ordering::Less => ia += 1,
                        std::cmp::Ordering::Greater => ib += 1,
                        std::cmp::Ordering::Equal => {
                            dot += a[ia].1 * b[ib].1;
                            ia += 1;
                            ib += 1;
                        }
                    }
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.dim];
        for row in &self.rows {
            for &(c, v) in row {
                sums[c] += v;
            }
        }
        sums
    }

    /// Apply an orthogonal similarity `selfᵀ * a * self`.
    pub fn conjugate_transpose_left(&self, a: &SparseRowMatrix) -> Result<SparseRowMatrix> {
        self.transpose().matmul(a)?.matmul(self)
    }

    /// Apply an orthogonal similarity `self * a * selfᵀ`.
    pub fn conjugate(&self, a: &SparseRowMatrix) -> Result<SparseRowMatrix> {
        self.matmul(a)?.matmul(&self.transpose())
    }

    /// Write in the coordinate text format: a `dim nnz` header line, then one
    /// `row col value` line per entry with 1-based indices and values printed
    /// with 17 significant digits.
    pub fn write_coord<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.dim, self.nnz())?;
        for (i, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                writeln!(w, "{} {} {:.16e}", i + 1, c + 1, v)?;
            }
        }
        Ok(())
    }

    /// Parse the coordinate text format written by [`write_coord`].
    ///
    /// [`write_coord`]: SparseRowMatrix::write_coord
    pub fn read_coord<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (dim, nnz) = loop {
            match lines.next() {
                Some((lineno, line)) => {
                    let line = line?;
                    let trimmed = line.trim();
                    if trimmed.is_empty() {
                        continue;
                    }
                    let mut parts = trimmed.split_whitespace();
                    let parse = |tok: Option<&str>| -> Result<usize> {
                        tok.ok_or(Error::Parse {
                            line: lineno + 1,
                            msg: "expected `dim nnz` header".into(),
                        })?
                        .parse()
                        .map_err(|e| Error::Parse {
                            line: lineno + 1,
                            msg: format!("bad header field: {e}"),
                        })
                    };
                    break (parse(parts.next())?, parse(parts.next())?);
                }
                None => {
                    return Err(Error::Parse {
                        line: 0,
                        msg: "empty matrix file".into(),
                    })
                }
            }
        };
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
        let mut seen = 0usize;
        for (lineno, line) in lines {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let mut parts = trimmed.split_whitespace();
            let bad = |msg: String| Error::Parse {
                line: lineno + 1,
                msg,
            };
            let row: usize = parts
                .next()
                .ok_or_else(|| bad("missing row".into()))?
                .parse()
                .map_err(|e| bad(format!("bad row index: {e}")))?;
            let col: usize = parts
                .next()
                .ok_or_else(|| bad("missing col".into()))?
                .parse()
                .map_err(|e| bad(format!("bad col index: {e}")))?;
            let val: f64 = parts
                .next()
                .ok_or_else(|| bad("missing value".into()))?
                .parse()
                .map_err(|e| bad(format!("bad value: {e}")))?;
            if row == 0 || col == 0 || row > dim || col > dim {
                return Err(bad(format!(
                    "entry ({row}, {col}) outside 1..={dim}"
                )));
            }
            rows[row - 1].push((col - 1, val));
            seen += 1;
        }
        if seen != nnz {
            return Err(Error::Parse {
                line: 0,
                msg: format!("header promised {nnz} entries, found {seen}"),
            });
        }
        Self::from_rows(dim, rows)
    }
}
