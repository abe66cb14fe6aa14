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

//! On-disk model format.
//!
//! A model is a JSON manifest next to a little-endian binary blob. The
//! manifest lists layer kinds, shapes and hyperparameters, and points into
//! the blob by byte offset. Matrices are stored densely, or as triplets
//! (`nnz` row indices as `u64`, `nnz` column indices as `u64`, `nnz` values as
//! `f64`) when fewer than a third of the entries are nonzero. The SHA-256 of
//! the blob is recorded in the manifest and checked on load.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{infer, Activation, Conv, Dense, Layer, Network, Shape, Window};
use crate::error::{Error, Result};
use crate::interval::IntervalVector;
use crate::sparse::{self, SparseMatrix};

pub const FORMAT: &str = "hzreach-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub input_shape: Shape,
    /// Blob file name, relative to the manifest's directory.
    pub blob: String,
    pub blob_bytes: u64,
    pub blob_sha256: String,
    pub layers: Vec<LayerEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    Dense,
    Triplets,
}

/// Location of one array inside the blob.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorRef {
    pub shape: Vec<usize>,
    pub encoding: Encoding,
    pub offset: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nnz: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerEntry {
    FullyConnected {
        activation: Activation,
        weights: TensorRef,
        bias_lower: TensorRef,
        bias_upper: TensorRef,
    },
    Conv {
        activation: Activation,
        filters: usize,
        in_channels: usize,
        window: Window,
        weights: TensorRef,
        bias: TensorRef,
    },
    AvgPool {
        window: Window,
    },
    MaxPool {
        window: Window,
    },
    MaxoutGroup {
        group_size: usize,
    },
}

#[derive(Default)]
struct BlobWriter {
    bytes: Vec<u8>,
}

impl BlobWriter {
    fn dense(&mut self, shape: Vec<usize>, values: &[f64]) -> TensorRef {
        let offset = self.bytes.len() as u64;
        for v in values {
            self.bytes.extend_from_slice(&v.to_le_bytes());
        }
        TensorRef { shape, encoding: Encoding::Dense, offset, nnz: None }
    }

    fn matrix(&mut self, m: &SparseMatrix) -> TensorRef {
        let (rows, cols) = m.shape();
        if m.nnz() * 3 >= rows * cols {
            return self.dense(vec![rows, cols], &sparse::to_dense(m));
        }
        let offset = self.bytes.len() as u64;
        let e = sparse::entries(m);
        for (i, _, _) in &e {
            self.bytes.extend_from_slice(&(*i as u64).to_le_bytes());
        }
        for (_, j, _) in &e {
            self.bytes.extend_from_slice(&(*j as u64).to_le_bytes());
        }
        for (_, _, v) in &e {
            self.bytes.extend_from_slice(&v.to_le_bytes());
        }
        TensorRef {
            shape: vec![rows, cols],
            encoding: Encoding::Triplets,
            offset,
            nnz: Some(e.len()),
        }
    }
}

struct BlobReader<'a> {
    bytes: &'a [u8],
}

impl BlobReader<'_> {
    fn words(&self, offset: u64, count: usize) -> Result<&[u8]> {
        let start = usize::try_from(offset).map_err(|_| Error::Format("offset overflow".into()))?;
        let end = count
            .checked_mul(8)
            .and_then(|n| n.checked_add(start))
            .ok_or_else(|| Error::Format("array extent overflow".into()))?;
        self.bytes.get(start..end).ok_or_else(|| {
            Error::Format(format!(
                "array at bytes {start}..{end} exceeds blob of {} bytes",
                self.bytes.len()
            ))
        })
    }

    fn f64s(&self, offset: u64, count: usize) -> Result<Vec<f64>> {
        let raw = self.words(offset, count)?;
        let out: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite value in blob".into()));
        }
        Ok(out)
    }

    fn u64s(&self, offset: u64, count: usize) -> Result<Vec<usize>> {
        let raw = self.words(offset, count)?;
        raw.chunks_exact(8)
            .map(|c| {
                usize::try_from(u64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                    .map_err(|_| Error::Format("index overflow".into()))
            })
            .collect()
    }

    fn vector(&self, t: &TensorRef, len: usize) -> Result<Vec<f64>> {
        if t.encoding != Encoding::Dense || t.shape.iter().product::<usize>() != len {
            return Err(Error::Format(format!(
                "expected a dense array of {len} values, found {:?} {:?}",
                t.encoding, t.shape
            )));
        }
        self.f64s(t.offset, len)
    }

    fn matrix(&self, t: &TensorRef) -> Result<SparseMatrix> {
        let [rows, cols] = t.shape[..] else {
            return Err(Error::Format(format!("matrix shape {:?} is not 2-D", t.shape)));
        };
        match t.encoding {
            Encoding::Dense => Ok(sparse::from_dense(rows, cols, &self.f64s(t.offset, rows * cols)?)),
            Encoding::Triplets => {
                let nnz = t.nnz.ok_or_else(|| Error::Format("triplet array without nnz".into()))?;
                let r = self.u64s(t.offset, nnz)?;
                let c = self.u64s(t.offset + 8 * nnz as u64, nnz)?;
                let v = self.f64s(t.offset + 16 * nnz as u64, nnz)?;
                if r.iter().any(|&i| i >= rows) || c.iter().any(|&j| j >= cols) {
                    return Err(Error::Format(format!("triplet index outside {rows}x{cols}")));
                }
                Ok(sparse::from_triplets(rows, cols, r.into_iter().zip(c).zip(v).map(|((i, j), v)| (i, j, v))))
            }
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Blob path used for a manifest path: same stem, `.bin` extension.
pub fn blob_path_for(manifest: &Path) -> PathBuf {
    manifest.with_extension("bin")
}

/// Serializes a network into a manifest and blob bytes.
pub fn encode_model(network: &Network, blob_name: &str) -> (Manifest, Vec<u8>) {
    let mut w = BlobWriter::default();
    let layers = network
        .layers()
        .iter()
        .map(|layer| match layer {
            Layer::FullyConnected(d) => LayerEntry::FullyConnected {
                activation: d.activation,
                weights: w.matrix(&d.weights),
                bias_lower: w.dense(vec![d.bias.len()], d.bias.lower()),
                bias_upper: w.dense(vec![d.bias.len()], d.bias.upper()),
            },
            Layer::Conv(c) => LayerEntry::Conv {
                activation: c.activation,
                filters: c.filters,
                in_channels: c.in_channels,
                window: c.window,
                weights: w.dense(
                    vec![c.filters, c.in_channels, c.window.height, c.window.width],
                    &c.weights,
                ),
                bias: w.dense(vec![c.filters], &c.bias),
            },
            Layer::AvgPool(win) => LayerEntry::AvgPool { window: *win },
            Layer::MaxPool(win) => LayerEntry::MaxPool { window: *win },
            Layer::MaxoutGroup { group_size } => LayerEntry::MaxoutGroup { group_size: *group_size },
        })
        .collect();
    let manifest = Manifest {
        format: FORMAT.into(),
        version: VERSION,
        input_shape: network.input_shape(),
        blob: blob_name.into(),
        blob_bytes: w.bytes.len() as u64,
        blob_sha256: sha256_hex(&w.bytes),
        layers,
    };
    (manifest, w.bytes)
}

/// Rebuilds a network from a manifest and its blob, verifying the checksum.
pub fn decode_model(manifest: &Manifest, blob: &[u8], blob_path: &Path) -> Result<Network> {
    if manifest.format != FORMAT {
        return Err(Error::Format(format!("unknown format `{}`", manifest.format)));
    }
    if manifest.version != VERSION {
        return Err(Error::Format(format!("unsupported version {}", manifest.version)));
    }
    let actual = sha256_hex(blob);
    if actual != manifest.blob_sha256 || blob.len() as u64 != manifest.blob_bytes {
        return Err(Error::Checksum {
            path: blob_path.to_path_buf(),
            expected: manifest.blob_sha256.clone(),
            actual,
        });
    }
    let r = BlobReader { bytes: blob };
    let mut layers = Vec::with_capacity(manifest.layers.len());
    for entry in &manifest.layers {
        layers.push(match entry {
            LayerEntry::FullyConnected { activation, weights, bias_lower, bias_upper } => {
                let w = r.matrix(weights)?;
                let lo = r.vector(bias_lower, w.rows())?;
                let hi = r.vector(bias_upper, w.rows())?;
                Layer::FullyConnected(Dense::new(w, IntervalVector::new(lo, hi)?, *activation)?)
            }
            LayerEntry::Conv { activation, filters, in_channels, window, weights, bias } => {
                let n = filters * in_channels * window.height * window.width;
                Layer::Conv(Conv {
                    filters: *filters,
                    in_channels: *in_channels,
                    window: *window,
                    weights: r.vector(weights, n)?,
                    bias: r.vector(bias, *filters)?,
                    activation: *activation,
                })
            }
            LayerEntry::AvgPool { window } => Layer::AvgPool(*window),
            LayerEntry::MaxPool { window } => Layer::MaxPool(*window),
            LayerEntry::MaxoutGroup { group_size } => Layer::MaxoutGroup { group_size: *group_size },
        });
    }
    Network::new(manifest.input_shape, layers)
}

pub(crate) fn create_new(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Writes `path` (manifest) and its sibling `.bin` blob. Refuses to
/// overwrite existing files.
pub fn save_model(network: &Network, path: &Path) -> Result<Manifest> {
    let blob_path = blob_path_for(path);
    let blob_name = blob_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::InvalidArgument(format!("bad model path {}", path.display())))?
        .to_string();
    let (manifest, blob) = encode_model(network, &blob_name);
    create_new(&blob_path, &blob)?;
    create_new(path, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(manifest)
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn load_model(path: &Path) -> Result<Network> {
    let manifest = load_manifest(path)?;
    let blob_path = path.parent().unwrap_or(Path::new(".")).join(&manifest.blob);
    let blob = std::fs::read(&blob_path).map_err(|e| Error::io(&blob_path, e))?;
    decode_model(&manifest, &blob, &blob_path)
}

/// Input/output pairs shipped alongside a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSet {
    pub probes: Vec<Probe>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

impl ProbeSet {
    /// Records the network's own outputs at the given inputs.
    pub fn record(network: &Network, inputs: &[Vec<f64>]) -> Result<Self> {
        let probes = inputs
            .iter()
            .map(|x| Ok(Probe { input: x.clone(), output: infer(network, x)? }))
            .collect::<Result<_>>()?;
        Ok(Self { probes })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        create_new(path, serde_json::to_string_pretty(self)?.as_bytes())
    }

    /// Largest absolute deviation between recorded and computed outputs.
    pub fn max_error(&self, network: &Network) -> Result<f64> {
        let mut worst = 0.0f64;
        for p in &self.probes {
            let y = infer(network, &p.input)?;
            if y.len() != p.output.len() {
                return Err(Error::dims("probe output", y.len(), p.output.len()));
            }
            for (a, b) in y.iter().zip(&p.output) {
                worst = worst.max((a - b).abs());
            }
        }
        Ok(worst)
    }
}
