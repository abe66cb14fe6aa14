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


//! Classification robustness under the brightening attack.
//!
//! The attack lets every pixel at or above a threshold take any value in
//! `[0, scale·δ]` and fixes all other pixels. An image is robust when, over
//! the reachable output set, the labelled logit strictly exceeds every other
//! logit. Because reachable sets are over-approximations, a failed check is
//! reported as unknown rather than as a counterexample.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hz::{Complexity, HybridZonotope, QueryOptions};
use crate::interval::IntervalVector;
use crate::lowering::lower_network;
use crate::model::{Network, Tensor3};
use crate::reach::{reach_ffnn, ReachConfig};

pub const PIXEL_SCALE: f64 = 255.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub threshold: f64,
    pub delta: f64,
    pub scale: f64,
}

impl AttackSpec {
    pub fn new(threshold: f64, delta: f64) -> Result<Self> {
        let s = Self { threshold, delta, scale: PIXEL_SCALE };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("delta must be a nonnegative number, got {}", self.delta)));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("pixel scale must be positive, got {}", self.scale)));
        }
        if !(0.0..=self.scale).contains(&self.threshold) {
            return Err(Error::InvalidArgument(format!(
                "threshold {} outside the pixel range [0, {}]",
                self.threshold, self.scale
            )));
        }
        Ok(())
    }
}

/// Flattened input box of the attack around `image`.
pub fn brighten(image: &Tensor3, spec: &AttackSpec) -> IntervalVector {
    let top = spec.scale * spec.delta;
    let (lo, hi): (Vec<f64>, Vec<f64>) = image
        .flatten()
        .iter()
        .map(|&p| if p >= spec.threshold { (0.0, top) } else { (p, p) })
        .unzip();
    IntervalVector::new(lo, hi).expect("attack intervals are ordered")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Robust,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: usize,
    pub verdict: Verdict,
    /// `(class, max over the set of y_class − y_label)` for every other class.
    pub margins: Vec<(usize, f64)>,
    /// Class with the largest margin, first on ties.
    pub worst_class: Option<usize>,
    pub worst_margin: f64,
}

/// Robust iff every pairwise margin is strictly negative.
pub fn verify_classification(r: &HybridZonotope, label: usize, opts: &QueryOptions) -> Result<Classification> {
    let m = r.dim();
    if label >= m {
        return Err(Error::InvalidArgument(format!("label {label} outside {m} outputs")));
    }
    let mut margins = Vec::with_capacity(m.saturating_sub(1));
    for j in (0..m).filter(|&j| j != label) {
        let mut d = vec![0.0; m];
        d[j] = 1.0;
        d[label] = -1.0;
        margins.push((j, r.support_with(&d, opts)?));
    }
    let worst = margins
        .iter()
        .copied()
        .fold(None, |best: Option<(usize, f64)>, (j, v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((j, v)),
        });
    let worst_margin = worst.map_or(f64::NEG_INFINITY, |w| w.1);
    Ok(Classification {
        label,
        verdict: if worst_margin < 0.0 { Verdict::Robust } else { Verdict::Unknown },
        margins,
        worst_class: worst.map(|w| w.0),
        worst_margin,
    })
}

/// Tightest box around the output set.
pub fn output_ranges(r: &HybridZonotope, opts: &QueryOptions) -> Result<IntervalVector> {
    r.interval_hull_with(opts)
}

/// `output,lower,upper` rows.
pub fn ranges_csv(ranges: &IntervalVector) -> String {
    let mut out = String::from("output,lower,upper\n");
    for i in 0..ranges.len() {
        let (l, u) = ranges.get(i);
        let _ = writeln!(out, "{i},{l:?},{u:?}");
    }
    out
}

/// Index of the largest entry, first on ties.
pub fn argmax(y: &[f64]) -> Option<usize> {
    y.iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
        .map(|b| b.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignImage {
    pub id: usize,
    pub image: Tensor3,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: usize,
    pub label: usize,
    /// Class of the unperturbed image.
    pub predicted: Option<usize>,
    /// Perturbed pixel count.
    pub perturbed: usize,
    /// Absent when the image could not be analysed.
    pub verdict: Option<Verdict>,
    pub worst_class: Option<usize>,
    pub worst_margin: Option<f64>,
    pub ranges: Option<IntervalVector>,
    pub complexity: Option<Complexity>,
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregate {
    pub images: usize,
    pub robust: usize,
    pub unknown: usize,
    pub failed: usize,
    /// Robust images over all images.
    pub robust_rate: f64,
    /// Correctly classified unperturbed images over all images.
    pub accuracy: f64,
    pub mean_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub attack: AttackSpec,
    pub reach: ReachConfig,
    pub workers: usize,
    pub records: Vec<ImageRecord>,
    pub aggregate: Aggregate,
}

impl CampaignReport {
    /// `id,label,predicted,perturbed,verdict,worst_class,worst_margin,ng,nb,nc,seconds,error`.
    pub fn records_csv(&self) -> String {
        let mut out = String::from("id,label,predicted,perturbed,verdict,worst_class,worst_margin,ng,nb,nc,seconds,error\n");
        let opt = |v: Option<usize>| v.map_or(String::new(), |v| v.to_string());
        for r in &self.records {
            let verdict = match r.verdict {
                Some(Verdict::Robust) => "robust",
                Some(Verdict::Unknown) => "unknown",
                None => "failed",
            };
            let c = r.complexity.unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{verdict},{},{},{},{},{},{:.6},{}",
                r.id,
                r.label,
                opt(r.predicted),
                r.perturbed,
                opt(r.worst_class),
                r.worst_margin.map_or(String::new(), |m| format!("{m:?}")),
                c.ng,
                c.nb,
                c.nc,
                r.seconds,
                r.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
            );
        }
        out
    }

    /// `image,output,lower,upper` rows for every analysed image.
    pub fn ranges_csv(&self) -> String {
        let mut out = String::from("image,output,lower,upper\n");
        for r in &self.records {
            if let Some(ranges) = &r.ranges {
                for i in 0..ranges.len() {
                    let (l, u) = ranges.get(i);
                    let _ = writeln!(out, "{},{i},{l:?},{u:?}", r.id);
                }
            }
        }
        out
    }
}

fn analyse(net: &Network, item: &CampaignImage, spec: &AttackSpec, cfg: &ReachConfig) -> ImageRecord {
    let t0 = Instant::now();
    let predicted = crate::model::infer(net, item.image.flatten()).ok().and_then(|y| argmax(&y));
    let input = brighten(&item.image, spec);
    let perturbed = item.image.flatten().iter().filter(|&&p| p >= spec.threshold).count();
    let outcome = (|| -> Result<_> {
        let r = reach_ffnn(net, &HybridZonotope::from_box(&input), cfg)?;
        let c = verify_classification(&r.output, item.label, &cfg.query)?;
        let ranges = output_ranges(&r.output, &cfg.query)?;
        Ok((c, ranges, r.output.complexity()))
    })();
    let mut rec = ImageRecord {
        id: item.id,
        label: item.label,
        predicted,
        perturbed,
        verdict: None,
        worst_class: None,
        worst_margin: None,
        ranges: None,
        complexity: None,
        seconds: 0.0,
        error: None,
    };
    match outcome {
        Ok((c, ranges, complexity)) => {
            rec.verdict = Some(c.verdict);
            rec.worst_class = c.worst_class;
            rec.worst_margin = Some(c.worst_margin);
            rec.ranges = Some(ranges);
            rec.complexity = Some(complexity);
        }
        Err(e) => {
            tracing::warn!(image = item.id, error = %e, "image analysis failed");
            rec.error = Some(e.to_string());
        }
    }
    rec.seconds = t0.elapsed().as_secs_f64();
    rec
}

/// Verifies every image under the attack, `workers` at a time. Failures are
/// recorded per image and do not stop the campaign.
pub fn run_campaign(
    net: &Network,
    images: &[CampaignImage],
    spec: &AttackSpec,
    cfg: &ReachConfig,
    workers: usize,
) -> Result<CampaignReport> {
    spec.validate()?;
    cfg.validate()?;
    let lowered = lower_network(net)?.network;
    for item in images {
        if item.image.flatten().len() != lowered.input_len() {
            return Err(Error::dims("campaign image", lowered.input_len(), item.image.flatten().len()));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let mut records: Vec<ImageRecord> =
        pool.install(|| images.par_iter().map(|item| analyse(&lowered, item, spec, cfg)).collect());
    records.sort_by_key(|r| r.id);

    let n = records.len();
    let robust = records.iter().filter(|r| r.verdict == Some(Verdict::Robust)).count();
    let failed = records.iter().filter(|r| r.verdict.is_none()).count();
    let correct = records.iter().filter(|r| r.predicted == Some(r.label)).count();
    let rate = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    let aggregate = Aggregate {
        images: n,
        robust,
        unknown: n - robust - failed,
        failed,
        robust_rate: rate(robust),
        accuracy: rate(correct),
        mean_seconds: if n == 0 { 0.0 } else { records.iter().map(|r| r.seconds).sum::<f64>() / n as f64 },
    };
    Ok(CampaignReport { attack: *spec, reach: *cfg, workers: workers.max(1), records, aggregate })
}
