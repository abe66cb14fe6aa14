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

//! Error type shared by every module of the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("set is empty")]
    EmptySet,

    #[error("program is infeasible")]
    Infeasible,

    #[error("program is unbounded")]
    Unbounded,

    #[error("simplex iteration limit reached after {0} pivots")]
    IterationLimit(usize),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("unsupported layer kind `{0}`")]
    UnsupportedLayer(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("interval-valued bias in layer {layer}; point evaluation needs point biases")]
    IntervalBias { layer: usize },

    #[error("bounds do not enclose the set at coordinate {index}: [{lower}, {upper}] vs hull [{hull_lower}, {hull_upper}]")]
    UnsoundBounds {
        index: usize,
        lower: f64,
        upper: f64,
        hull_lower: f64,
        hull_upper: f64,
    },

    #[error("model format error: {0}")]
    Format(String),

    #[error("checksum mismatch for {path}: manifest says {expected}, blob hashes to {actual}")]
    Checksum {
        path: PathBuf,
        expected: String,
        actual: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            actual,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
