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


//! `hzreach` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or invalid argument, 2 I/O, format,
//! checksum or shape failure, 3 empty or infeasible set, 4 budget or
//! iteration limit, 5 internal consistency failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hzreach::bounds::BoundMethod;
use hzreach::dataset::{load_box, load_labels, ImageSet};
use hzreach::lowering::lower_network;
use hzreach::model::io::{load_model, save_model, ProbeSet};
use hzreach::model::Shape;
use hzreach::reach::{reach_cnn, ReachConfig, ReachResult};
use hzreach::reduce::{reduce_network, RhoPolicy};
use hzreach::robust::{brighten, output_ranges, ranges_csv, run_campaign, AttackSpec, CampaignImage};
use hzreach::{Error, IntervalVector, Layer, Network};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tracing_subscriber::EnvFilter;

/// Largest probe error accepted when checking a lowered model.
const PROBE_TOL: f64 = 1e-9;
const PROBES: usize = 16;

#[derive(Parser, Debug)]
#[command(name = "hzreach", version, about = "Hybrid-zonotope reachability for ReLU networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rewrite convolution and pooling layers as fully-connected layers.
    Lower(LowerArgs),
    /// Compute the reachable output set over an input box.
    Reach(ReachArgs),
    /// Verify robustness of a labelled image set under a brightening attack.
    Verify(VerifyArgs),
    /// Remove low-impact neurons, folding their contribution into bias intervals.
    Reduce(ReduceArgs),
}

#[derive(Args, Debug, Serialize)]
struct LowerArgs {
    #[arg(long)]
    model: PathBuf,
    /// Output prefix; writes PREFIX.json, PREFIX.bin, PREFIX.provenance.json and PREFIX.probes.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Bounds {
    Ibp,
    Crown,
    Exact,
}

impl From<Bounds> for BoundMethod {
    fn from(b: Bounds) -> Self {
        match b {
            Bounds::Ibp => BoundMethod::Ibp,
            Bounds::Crown => BoundMethod::Crown,
            Bounds::Exact => BoundMethod::ExactHull,
        }
    }
}

/// `none`, a threshold such as `0.5`, or `quantile:Q` for a per-layer quantile.
fn parse_rho(s: &str) -> Result<RhoPolicy, String> {
    let policy = if s == "none" {
        RhoPolicy::Disabled
    } else if let Some(q) = s.strip_prefix("quantile:") {
        RhoPolicy::Quantile(q.parse().map_err(|e| format!("bad quantile `{q}`: {e}"))?)
    } else {
        RhoPolicy::Fixed(s.parse().map_err(|e| format!("bad threshold `{s}`: {e}"))?)
    };
    policy.validate().map_err(|e| e.to_string())?;
    Ok(policy)
}

#[derive(Args, Debug, Serialize)]
struct AnalysisArgs {
    /// Removal threshold: a number, `quantile:Q`, or `none`.
    #[arg(long, default_value = "0", value_parser = parse_rho)]
    rho: RhoPolicy,
    /// Relaxation dial in [0, 1]; 0 keeps every crossing neuron exact.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long, value_enum, default_value_t = Bounds::Crown)]
    bounds: Bounds,
    /// Largest number of LP relaxations a single mixed-integer query may solve.
    #[arg(long)]
    node_limit: Option<usize>,
}

impl AnalysisArgs {
    fn config(&self) -> Result<ReachConfig, Error> {
        let mut cfg = ReachConfig { rho: self.rho, gamma: self.gamma, bounds: self.bounds.into(), ..Default::default() };
        if let Some(n) = self.node_limit {
            cfg.query.milp.node_limit = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug, Serialize)]
struct ReachArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV with `lower,upper` per input coordinate.
    #[arg(long, conflicts_with_all = ["image", "d", "delta"], required_unless_present = "image")]
    input_box: Option<PathBuf>,
    /// Image set JSON; the attack box is built around image `--image-index`.
    #[arg(long, requires_all = ["d", "delta"])]
    image: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    image_index: usize,
    /// Brightening threshold: pixels at or above it are perturbed.
    #[arg(long)]
    d: Option<f64>,
    /// Brightening magnitude as a fraction of the pixel scale.
    #[arg(long)]
    delta: Option<f64>,
    #[command(flatten)]
    analysis: AnalysisArgs,
    /// Also write PREFIX.bounds.csv with the pre-activation bounds used per neuron.
    #[arg(long)]
    dump_bounds: bool,
    /// Output prefix.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    images: PathBuf,
    /// One label per line, in image order.
    #[arg(long)]
    label_file: PathBuf,
    #[arg(long)]
    d: f64,
    #[arg(long)]
    delta: f64,
    #[command(flatten)]
    analysis: AnalysisArgs,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output prefix; writes PREFIX.report.json, PREFIX.images.csv and PREFIX.ranges.csv.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct ReduceArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input_box: PathBuf,
    /// Removal threshold: a number, `quantile:Q`, or `none`.
    #[arg(long, default_value = "0", value_parser = parse_rho)]
    rho: RhoPolicy,
    #[arg(long, value_enum, default_value_t = Bounds::Crown)]
    bounds: Bounds,
    /// Output prefix; writes PREFIX.json, PREFIX.bin and PREFIX.report.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidArgument(_) => 1,
            Error::DimensionMismatch { .. }
            | Error::Shape(_)
            | Error::Format(_)
            | Error::Checksum { .. }
            | Error::Io { .. }
            | Error::Json(_)
            | Error::IntervalBias { .. }
            | Error::UnsupportedLayer(_) => 2,
            Error::EmptySet | Error::Infeasible | Error::Unbounded => 3,
            Error::BudgetExceeded(_) | Error::IterationLimit(_) => 4,
            _ => 5,
        };
        Failure { code, message: e.to_string() }
    }
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

type Outcome = Result<(), Failure>;

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes a new file; existing files are never replaced.
fn write_new(path: &Path, contents: &str) -> Result<(), Error> {
    let mut f = std::fs::OpenOptions::new().write(true).create_new(true).open(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))?;
    tracing::info!(path = %path.display(), "wrote");
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    write_json_text(path, &serde_json::to_string_pretty(value)?)
}

fn write_json_text(path: &Path, text: &str) -> Result<(), Error> {
    write_new(path, &format!("{text}\n"))
}

fn is_fully_connected(net: &Network) -> bool {
    net.layers().iter().all(|l| matches!(l, Layer::FullyConnected(_)))
}

fn cmd_lower(args: &LowerArgs) -> Outcome {
    let net = load_model(&args.model)?;
    let lowered = lower_network(&net)?;
    if is_fully_connected(&net) {
        println!("model is already fully-connected; writing a copy");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let inputs: Vec<Vec<f64>> = (0..PROBES).map(|_| (0..net.input_len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let probes = ProbeSet::record(&net, &inputs)?;
    let err = probes.max_error(&lowered.network)?;
    println!("probe check: {PROBES} random inputs, max error {err:e} (tolerance {PROBE_TOL:e})");

    let model_path = with_suffix(&args.out, ".json");
    save_model(&lowered.network, &model_path)?;
    probes.save(&with_suffix(&args.out, ".probes.json"))?;
    write_json(
        &with_suffix(&args.out, ".provenance.json"),
        &serde_json::json!({
            "config": args,
            "provenance": lowered.provenance,
            "probes": PROBES,
            "probe_max_error": err,
            "layers_before": net.layers().len(),
            "layers_after": lowered.network.layers().len(),
        }),
    )?;
    println!("lowered {} layers into {} -> {}", net.layers().len(), lowered.network.layers().len(), model_path.display());
    if !(err <= PROBE_TOL) {
        return Err(Failure::new(5, format!("lowered model disagrees with the original on probes (max error {err:e})")));
    }
    Ok(())
}

/// Attack box around one image of an image set.
fn image_box(net: &Network, path: &Path, index: usize, spec: &AttackSpec) -> Result<IntervalVector, Error> {
    let set = ImageSet::load(path)?;
    if let Shape::Tensor(s) = net.input_shape() {
        if s != set.shape {
            return Err(Error::Shape(format!("model expects {s:?} images, file holds {:?}", set.shape)));
        }
    }
    let tensors = set.tensors()?;
    let image = tensors
        .get(index)
        .ok_or_else(|| Error::InvalidArgument(format!("image index {index} out of range ({} images)", tensors.len())))?;
    Ok(brighten(image, spec))
}

fn bounds_csv(r: &ReachResult) -> String {
    let mut out = String::from("layer,neuron,lower,upper\n");
    for rec in &r.layers {
        let kept: Vec<usize> = r
            .reduction
            .layers
            .iter()
            .find(|l| l.layer == rec.layer)
            .map_or_else(|| (0..rec.bounds.len()).collect(), |l| l.kept.clone());
        for (i, &j) in kept.iter().enumerate().take(rec.bounds.len()) {
            let (l, u) = rec.bounds.get(i);
            out.push_str(&format!("{},{j},{l:?},{u:?}\n", rec.layer));
        }
    }
    out
}

fn cmd_reach(args: &ReachArgs) -> Outcome {
    let cfg = args.analysis.config()?;
    let net = load_model(&args.model)?;
    let (input, attack) = match (&args.input_box, &args.image) {
        (Some(p), _) => (load_box(p)?, None),
        (None, Some(p)) => {
            let spec = AttackSpec::new(args.d.unwrap_or_default(), args.delta.unwrap_or_default())?;
            (image_box(&net, p, args.image_index, &spec)?, Some(spec))
        }
        (None, None) => return Err(Failure::new(1, "one of --input-box or --image is required")),
    };
    let r = reach_cnn(&net, &input, &cfg)?;
    let ranges = output_ranges(&r.output, &cfg.query)?;

    write_json_text(&with_suffix(&args.out, ".hz.json"), &r.output.to_json()?)?;
    write_new(&with_suffix(&args.out, ".complexity.csv"), &r.complexity_csv())?;
    write_new(&with_suffix(&args.out, ".ranges.csv"), &ranges_csv(&ranges))?;
    if args.dump_bounds {
        write_new(&with_suffix(&args.out, ".bounds.csv"), &bounds_csv(&r))?;
    }
    let c = r.output.complexity();
    write_json(
        &with_suffix(&args.out, ".summary.json"),
        &serde_json::json!({
            "config": args,
            "reach": cfg,
            "attack": attack,
            "input": input,
            "output_complexity": c,
            "exact_pieces": r.exact_pieces(),
            "reduction": r.reduction,
            "layers": r.layers,
            "seconds": r.seconds,
        }),
    )?;
    println!(
        "reach: {} outputs, ng={} nb={} nc={}, removed {} of {} hidden neurons, {:.3}s",
        ranges.len(),
        c.ng,
        c.nb,
        c.nc,
        r.reduction.removed(),
        r.reduction.hidden_before(),
        r.seconds
    );
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Outcome {
    let cfg = args.analysis.config()?;
    if args.workers == 0 {
        return Err(Failure::new(1, "--workers must be at least 1"));
    }
    let spec = AttackSpec::new(args.d, args.delta)?;
    let net = load_model(&args.model)?;
    let set = ImageSet::load(&args.images)?;
    let labels = load_labels(&args.label_file)?;
    if labels.len() != set.images.len() {
        return Err(Failure::new(2, format!("{} labels for {} images", labels.len(), set.images.len())));
    }
    let images: Vec<CampaignImage> = set
        .tensors()?
        .into_iter()
        .zip(labels)
        .enumerate()
        .map(|(id, (image, label))| CampaignImage { id, image, label })
        .collect();
    let report = run_campaign(&net, &images, &spec, &cfg, args.workers)?;

    write_json(&with_suffix(&args.out, ".report.json"), &serde_json::json!({ "config": args, "report": report }))?;
    write_new(&with_suffix(&args.out, ".images.csv"), &report.records_csv())?;
    write_new(&with_suffix(&args.out, ".ranges.csv"), &report.ranges_csv())?;
    let a = &report.aggregate;
    println!(
        "verify: {} images, {} robust, {} unknown, {} failed; robust rate {:.4}, accuracy {:.4}, mean {:.3}s per image",
        a.images, a.robust, a.unknown, a.failed, a.robust_rate, a.accuracy, a.mean_seconds
    );
    if a.images > 0 && a.failed == a.images {
        return Err(Failure::new(3, "no image could be analysed"));
    }
    Ok(())
}

fn cmd_reduce(args: &ReduceArgs) -> Outcome {
    let net = load_model(&args.model)?;
    let input = load_box(&args.input_box)?;
    let ffnn = lower_network(&net)?.network;
    let (reduced, report) = reduce_network(&ffnn, &input, args.rho, args.bounds.into())?;

    let model_path = with_suffix(&args.out, ".json");
    save_model(&reduced, &model_path)?;
    write_json(
        &with_suffix(&args.out, ".report.json"),
        &serde_json::json!({
            "config": args,
            "hidden_before": report.hidden_before(),
            "hidden_after": report.hidden_after(),
            "removed": report.removed(),
            "report": report,
        }),
    )?;
    println!(
        "reduce: removed {} of {} hidden neurons -> {}",
        report.removed(),
        report.hidden_before(),
        model_path.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("HZREACH_LOG").unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();

    let outcome = match &cli.command {
        Command::Lower(a) => cmd_lower(a),
        Command::Reach(a) => cmd_reach(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Reduce(a) => cmd_reduce(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("hzreach: error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
