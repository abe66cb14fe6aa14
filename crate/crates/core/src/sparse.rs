//   Copyright 2026 hzreach developers
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.

//! Thin helpers around `sprs` compressed-sparse-row matrices.
//!
//! Every matrix handled by the crate is kept in CSR storage. Lowering
//! matrices are overwhelmingly zero and the generator blocks of hybrid
//! zonotopes are block structured, so sparse storage is the default even
//! where a matrix happens to fill in.

use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};

pub type SparseMatrix = CsMat<f64>;

/// `rows × cols` matrix with no stored entries.
pub fn zeros(rows: usize, cols: usize) -> SparseMatrix {
    CsMat::zero((rows, cols))
}

pub fn identity(n: usize) -> SparseMatrix {
    CsMat::eye(n)
}

/// Builds a CSR matrix from `(row, col, value)` triplets. Duplicates are summed,
/// explicit zeros are dropped.
pub fn from_triplets<I>(rows: usize, cols: usize, entries: I) -> SparseMatrix
where
    I: IntoIterator<Item = (usize, usize, f64)>,
{
    let mut tri = TriMat::new((rows, cols));
    for (i, j, v) in entries {
        debug_assert!(
            i < rows && j < cols,
            "triplet ({i},{j}) outside {rows}x{cols}"
        );
        if v != 0.0 {
            tri.add_triplet(i, j, v);
        }
    }
    let m: SparseMatrix = tri.to_csr();
    prune(&m)
}

/// Row-major dense data to CSR.
pub fn from_dense(rows: usize, cols: usize, data: &[f64]) -> SparseMatrix {
    assert_eq!(data.len(), rows * cols, "dense buffer length");
    from_triplets(
        rows,
        cols,
        data.iter()
            .enumerate()
            .map(|(k, &v)| (k / cols.max(1), k % cols.max(1), v)),
    )
}

pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> SparseMatrix {
    from_triplets(
        rows.len(),
        cols,
        rows.iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().map(move |(j, &v)| (i, j, v))),
    )
}

/// Diagonal matrix.
pub fn diag(values: &[f64]) -> SparseMatrix {
    let n = values.len();
    from_triplets(n, n, values.iter().enumerate().map(|(i, &v)| (i, i, v)))
}

/// Row selector: `S x = (x[idx[0]], x[idx[1]], ...)`.
pub fn selector(indices: &[usize], n: usize) -> SparseMatrix {
    from_triplets(
        indices.len(),
        n,
        indices.iter().enumerate().map(|(r, &c)| (r, c, 1.0)),
    )
}

/// Drops stored zeros and returns CSR storage.
fn prune(m: &SparseMatrix) -> SparseMatrix {
    let csr = if m.is_csr() { m.clone() } else { m.to_csr() };
    if csr.data().iter().all(|&v| v != 0.0) {
        return csr;
    }
    let mut tri = TriMat::new(csr.shape());
    for (v, (i, j)) in csr.iter() {
        if *v != 0.0 {
            tri.add_triplet(i, j, *v);
        }
    }
    tri.to_csr()
}

pub fn to_dense(m: &SparseMatrix) -> Vec<f64> {
    let (rows, cols) = m.shape();
    let mut out = vec![0.0; rows * cols];
    for (v, (i, j)) in m.iter() {
        out[i * cols + j] += *v;
    }
    out
}

pub fn entries(m: &SparseMatrix) -> Vec<(usize, usize, f64)> {
    let mut out: Vec<_> = m.iter().map(|(v, (i, j))| (i, j, *v)).collect();
    out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    out
}

/// `m · x` for a dense vector.
pub fn mul_vec(m: &SparseMatrix, x: &[f64]) -> Vec<f64> {
    assert_eq!(m.cols(), x.len(), "mul_vec dimension");
    let mut out = vec![0.0; m.rows()];
    if m.is_csr() {
        for (i, row) in m.outer_iterator().enumerate() {
            out[i] = row.iter().map(|(j, v)| v * x[j]).sum();
        }
    } else {
        for (v, (i, j)) in m.iter() {
            out[i] += v * x[j];
        }
    }
    out
}

pub fn mul(a: &SparseMatrix, b: &SparseMatrix) -> SparseMatrix {
    assert_eq!(a.cols(), b.rows(), "sparse product dimension");
    if a.rows() == 0 || b.cols() == 0 || a.nnz() == 0 || b.nnz() == 0 {
        return zeros(a.rows(), b.cols());
    }
    let p: SparseMatrix = a * b;
    prune(&p)
}

pub fn transpose(m: &SparseMatrix) -> SparseMatrix {
    m.transpose_view().to_csr()
}

pub fn scale(m: &SparseMatrix, s: f64) -> SparseMatrix {
    if s == 0.0 {
        return zeros(m.rows(), m.cols());
    }
    m.map(|v| v * s)
}

pub fn add(a: &SparseMatrix, b: &SparseMatrix) -> SparseMatrix {
    assert_eq!(a.shape(), b.shape(), "sparse sum shape");
    let sum: SparseMatrix = a + b;
    prune(&sum)
}

pub fn select_rows(m: &SparseMatrix, rows: &[usize]) -> SparseMatrix {
    let mut entries = Vec::new();
    for (r, &src) in rows.iter().enumerate() {
        if let Some(row) = m.outer_view(src) {
            entries.extend(row.iter().map(|(j, &v)| (r, j, v)));
        }
    }
    from_triplets(rows.len(), m.cols(), entries)
}

pub fn select_cols(m: &SparseMatrix, cols: &[usize]) -> SparseMatrix {
    let mut position = vec![usize::MAX; m.cols()];
    for (k, &c) in cols.iter().enumerate() {
        position[c] = k;
    }
    from_triplets(
        m.rows(),
        cols.len(),
        m.iter()
            .filter(|(_, (_, j))| position[*j] != usize::MAX)
            .map(|(v, (i, j))| (i, position[j], *v)),
    )
}

/// `[a b]`
pub fn hstack(blocks: &[&SparseMatrix]) -> SparseMatrix {
    let rows = blocks.first().map_or(0, |b| b.rows());
    let mut offset = 0;
    let mut entries = Vec::new();
    for b in blocks {
        assert_eq!(b.rows(), rows, "hstack row count");
        entries.extend(b.iter().map(|(v, (i, j))| (i, j + offset, *v)));
        offset += b.cols();
    }
    from_triplets(rows, offset, entries)
}

/// `[a; b]`
pub fn vstack(blocks: &[&SparseMatrix]) -> SparseMatrix {
    let cols = blocks.first().map_or(0, |b| b.cols());
    let mut offset = 0;
    let mut entries = Vec::new();
    for b in blocks {
        assert_eq!(b.cols(), cols, "vstack column count");
        entries.extend(b.iter().map(|(v, (i, j))| (i + offset, j, *v)));
        offset += b.rows();
    }
    from_triplets(offset, cols, entries)
}

/// `[a 0; 0 b]`
pub fn block_diag(a: &SparseMatrix, b: &SparseMatrix) -> SparseMatrix {
    let entries = a
        .iter()
        .map(|(v, (i, j))| (i, j, *v))
        .chain(b.iter().map(|(v, (i, j))| (i + a.rows(), j + a.cols(), *v)));
    from_triplets(a.rows() + b.rows(), a.cols() + b.cols(), entries)
}

/// Sum of absolute values of each column.
pub fn col_abs_sums(m: &SparseMatrix) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for (v, (_, j)) in m.iter() {
        out[j] += v.abs();
    }
    out
}

/// Sum of absolute values of each row.
pub fn row_abs_sums(m: &SparseMatrix) -> Vec<f64> {
    let mut out = vec![0.0; m.rows()];
    for (v, (i, _)) in m.iter() {
        out[i] += v.abs();
    }
    out
}

/// Dense copy of one row.
pub fn dense_row(m: &SparseMatrix, i: usize) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    if let Some(row) = m.outer_view(i) {
        for (j, &v) in row.iter() {
            out[j] = v;
        }
    }
    out
}

/// JSON encoding of a matrix: dense rows when at least a third of the entries
/// are nonzero, `(row, col, value)` triplets otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRepr {
    pub rows: usize,
    pub cols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triplets: Option<Vec<(usize, usize, f64)>>,
}

impl MatrixRepr {
    pub fn encode(m: &SparseMatrix) -> Self {
        let (rows, cols) = m.shape();
        if m.nnz() * 3 >= rows * cols && rows * cols > 0 {
            let d = to_dense(m);
            let dense = d.chunks(cols).map(<[f64]>::to_vec).collect();
            Self { rows, cols, dense: Some(dense), triplets: None }
        } else {
            Self { rows, cols, dense: None, triplets: Some(entries(m)) }
        }
    }

    pub fn decode(&self) -> Result<SparseMatrix> {
        let (rows, cols) = (self.rows, self.cols);
        match (&self.dense, &self.triplets) {
            (Some(d), None) => {
                if d.len() != rows || d.iter().any(|r| r.len() != cols) {
                    return Err(Error::Format(format!("dense matrix is not {rows}x{cols}")));
                }
                if d.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::Format("non-finite matrix entry".into()));
                }
                Ok(from_rows(d, cols))
            }
            (None, Some(t)) => {
                if let Some(&(i, j, _)) = t.iter().find(|(i, j, _)| *i >= rows || *j >= cols) {
                    return Err(Error::Format(format!("triplet ({i},{j}) outside {rows}x{cols}")));
                }
                if t.iter().any(|e| !e.2.is_finite()) {
                    return Err(Error::Format("non-finite matrix entry".into()));
                }
                Ok(from_triplets(rows, cols, t.iter().copied()))
            }
            (None, None) if rows * cols == 0 => Ok(zeros(rows, cols)),
            _ => Err(Error::Format("matrix needs exactly one of `dense` or `triplets`".into())),
        }
    }
}

/// `#[serde(with = ...)]` adapter for [`SparseMatrix`] fields.
pub mod serde_matrix {
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    use super::{MatrixRepr, SparseMatrix};

    pub fn serialize<S: Serializer>(m: &SparseMatrix, s: S) -> Result<S::Ok, S::Error> {
        MatrixRepr::encode(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SparseMatrix, D::Error> {
        MatrixRepr::deserialize(d)?.decode().map_err(D::Error::custom)
    }
}
