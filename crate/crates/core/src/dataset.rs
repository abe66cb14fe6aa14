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


//! Image sets, label files and input boxes on disk.
//!
//! Image sets are JSON `{"shape": {...}, "images": [[...], ...]}` with each
//! image flattened row-major. Labels are one class index per line. Input
//! boxes are CSV with a `lower,upper` header and one row per coordinate.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::IntervalVector;
use crate::model::io::create_new;
use crate::model::{Tensor3, TensorShape};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSet {
    pub shape: TensorShape,
    pub images: Vec<Vec<f64>>,
}

impl ImageSet {
    pub fn new(shape: TensorShape, images: Vec<Vec<f64>>) -> Result<Self> {
        let set = Self { shape, images };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<()> {
        for (i, img) in self.images.iter().enumerate() {
            if img.len() != self.shape.len() {
                return Err(Error::Shape(format!(
                    "image {i} has {} values, shape needs {}",
                    img.len(),
                    self.shape.len()
                )));
            }
        }
        Ok(())
    }

    pub fn tensors(&self) -> Result<Vec<Tensor3>> {
        self.images.iter().map(|d| Tensor3::from_flat(self.shape, d)).collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let set: Self = serde_json::from_str(&text)?;
        set.validate()?;
        Ok(set)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        create_new(path, serde_json::to_string(self)?.as_bytes())
    }
}

pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|_| Error::Format(format!("{}: line {} is not a class index: {l:?}", path.display(), i + 1)))
        })
        .collect()
}

pub fn save_labels(labels: &[usize], path: &Path) -> Result<()> {
    let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
    create_new(path, text.as_bytes())
}

#[derive(Serialize, Deserialize)]
struct BoxRow {
    lower: f64,
    upper: f64,
}

pub fn box_to_csv(b: &IntervalVector) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for i in 0..b.len() {
        let (lower, upper) = b.get(i);
        w.serialize(BoxRow { lower, upper }).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is UTF-8")
}

pub fn box_from_csv(text: &str) -> Result<IntervalVector> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<BoxRow> = r
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Format(format!("input box: {e}")))?;
    IntervalVector::new(rows.iter().map(|r| r.lower).collect(), rows.iter().map(|r| r.upper).collect())
}

pub fn load_box(path: &Path) -> Result<IntervalVector> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    box_from_csv(&text)
}

pub fn save_box(b: &IntervalVector, path: &Path) -> Result<()> {
    create_new(path, box_to_csv(b).as_bytes())
}
