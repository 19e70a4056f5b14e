//! End-to-end campaigns: spec → sampler loop → risk scoring → metrics, plus
//! result persistence, recomputation and cross-run comparison.
//!
//! A result directory holds `records.csv`, `summary.json`, the effective
//! spec as `spec.campaign`, and `scenes.txt` with one artifact per scene.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bowtie::{
    bundled_model, calibrate_threshold, is_high_risk, parse_bowtie_model, parse_calibration_risks, BowTieModel,
    RiskError,
};
use crate::dsl::{emit_scene_artifact, format_spec, format_value, parse_campaign_spec, CampaignSpec, SamplerKind, ThresholdSource};
use crate::harness::{bundled_landscape, parse_landscape, Evaluator, HarnessError, SyntheticEvaluator};
use crate::lexer::{fmt_num, Diagnostic};
use crate::metrics::{
    diversity, select_clusters, total_risk_scenes, MetricsError, DEFAULT_K_MAX, DEFAULT_RESTARTS,
};
use crate::samplers::{build_sampler, grid_enumerate, Origin, SamplerError, WarmStart};
use crate::scene::{Scene, SceneSpace};

pub const SUMMARY_SCHEMA: &str = "riskscout.summary/1";

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("{path}:{diag}")]
    Parse { path: String, diag: Diagnostic },
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("iteration {iteration}: {message}")]
    Iteration { iteration: u64, message: String },
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl CampaignError {
    /// Input problems a user can fix by editing a spec or its files.
    pub fn is_validation(&self) -> bool {
        matches!(self, CampaignError::Parse { .. } | CampaignError::Invalid(_))
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CampaignError + '_ {
    move |source| CampaignError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_text(path: &Path) -> Result<String, CampaignError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<(), CampaignError> {
    fs::write(path, text).map_err(io_err(path))
}

// ---------------------------------------------------------------------------
// Seeds
// ---------------------------------------------------------------------------

const SAMPLER_STREAM: u64 = 0x5a4d_504c_4552;
const METRICS_STREAM: u64 = 0x4d45_5452_4943;
const SCENE_STREAM: u64 = 0x5343_454e_4553;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn sampler_seed(seed: u64) -> u64 {
    splitmix64(seed ^ SAMPLER_STREAM)
}

pub fn metrics_seed(seed: u64) -> u64 {
    splitmix64(seed ^ METRICS_STREAM)
}

/// Evaluation seed of one scene, a function of the campaign seed and the
/// iteration only.
pub fn scene_seed(seed: u64, iteration: u64) -> u64 {
    splitmix64(splitmix64(seed ^ SCENE_STREAM) ^ iteration)
}

// ---------------------------------------------------------------------------
// Preparation
// ---------------------------------------------------------------------------

/// A spec with its referenced files loaded and its threshold resolved.
pub struct PreparedCampaign {
    pub spec: CampaignSpec,
    pub model: BowTieModel,
    pub evaluator: SyntheticEvaluator,
    pub delta: f64,
    pub warm_start: WarmStart,
}

fn resolve(base: Option<&Path>, file: &str) -> PathBuf {
    let p = Path::new(file);
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    }
}

pub fn load_spec(path: &Path) -> Result<CampaignSpec, CampaignError> {
    let text = read_text(path)?;
    parse_campaign_spec(&text).map_err(|diag| CampaignError::Parse {
        path: path.display().to_string(),
        diag,
    })
}

/// Loads the model, landscape, calibration risks and warm-start records a
/// spec refers to. Relative paths are resolved against `base`.
pub fn prepare(spec: CampaignSpec, base: Option<&Path>) -> Result<PreparedCampaign, CampaignError> {
    let parse_err = |path: &Path| {
        let path = path.display().to_string();
        move |diag| CampaignError::Parse { path, diag }
    };
    let model = match &spec.model {
        Some(f) => {
            let p = resolve(base, f);
            parse_bowtie_model(&read_text(&p)?).map_err(parse_err(&p))?
        }
        None => bundled_model(),
    };
    let landscape = match &spec.evaluator {
        Some(f) => {
            let p = resolve(base, f);
            parse_landscape(&read_text(&p)?).map_err(parse_err(&p))?
        }
        None => bundled_landscape(),
    };
    let evaluator = landscape
        .bind(&spec.space)
        .map_err(|e| CampaignError::Invalid(format!("landscape `{}`: {e}", landscape.name)))?;
    if let Some(i) = evaluator.road_segment_index() {
        let v = &spec.space.vars()[i];
        let (lo, hi) = model.segment_domain();
        if v.lower < lo as f64 || v.upper > hi as f64 {
            return Err(CampaignError::Invalid(format!(
                "variable `{}` ranges over [{}, {}] but the bow-tie model only classifies segments {lo}..={hi}",
                v.name,
                fmt_num(v.lower),
                fmt_num(v.upper)
            )));
        }
    }
    let delta = match &spec.threshold {
        ThresholdSource::Fixed(d) => *d,
        ThresholdSource::Calibrate(f) => {
            let p = resolve(base, f);
            let risks = parse_calibration_risks(&read_text(&p)?).map_err(parse_err(&p))?;
            calibrate_threshold(&risks).map_err(|e| CampaignError::Invalid(format!("{}: {e}", p.display())))?
        }
    };
    let warm_start = match (&spec.sampler.kind, &spec.sampler.gbo.warm_start) {
        (SamplerKind::Gbo, Some(f)) => {
            let p = resolve(base, f);
            read_records(&p, &spec.space)?
                .into_iter()
                .map(|r| (r.values, r.s_risk))
                .collect()
        }
        _ => Vec::new(),
    };
    if spec.sampler.kind == SamplerKind::Grid {
        grid_enumerate(&spec.space).map_err(|e| CampaignError::Invalid(e.to_string()))?;
    }
    Ok(PreparedCampaign {
        spec,
        model,
        evaluator,
        delta,
        warm_start,
    })
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: u64,
    pub values: Vec<f64>,
    pub rs: f64,
    pub is: f64,
    pub s_risk: f64,
    pub high_risk: bool,
    pub elapsed_ms: f64,
    /// Why the sampler proposed the scene; not persisted.
    pub origin: Option<Origin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub trs: f64,
    /// `None` when fewer than three scenes (or fewer than two distinct ones)
    /// make clustering undefined.
    pub clusters: Option<usize>,
    pub silhouette: Option<f64>,
    pub diversity: Option<f64>,
    pub total_time_ms: f64,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub spec: CampaignSpec,
    pub delta: f64,
    pub records: Vec<IterationRecord>,
    pub aggregates: Aggregates,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Record every elapsed time as zero so outputs are byte-reproducible.
    pub deterministic_time: bool,
}

/// Runs the feedback loop. `sink` sees every record as soon as it exists.
/// A grid sampler that runs out of points ends the campaign early.
pub fn run_campaign(
    prepared: &PreparedCampaign,
    options: RunOptions,
    sink: &mut dyn FnMut(&IterationRecord),
) -> Result<CampaignResult, CampaignError> {
    let spec = &prepared.spec;
    let mut sampler = build_sampler(
        &spec.sampler,
        &spec.space,
        sampler_seed(spec.seed),
        prepared.delta,
        prepared.warm_start.clone(),
    )?;
    let mut records: Vec<IterationRecord> = Vec::with_capacity(spec.iterations as usize);
    let mut last: Option<(Scene, f64)> = None;
    for iteration in 1..=spec.iterations {
        let started = Instant::now();
        let fail = |message: String| CampaignError::Iteration { iteration, message };
        let proposal = sampler
            .next(last.as_ref().map(|(s, r)| (s, *r)))
            .map_err(|e| fail(e.to_string()))?;
        let Some(proposal) = proposal else { break };
        let scene = Scene::new(iteration, proposal.values);
        let outcome = prepared
            .evaluator
            .evaluate(&scene, scene_seed(spec.seed, iteration))
            .map_err(|e: HarnessError| fail(e.to_string()))?;
        let risk = prepared
            .model
            .assess(&outcome.detector_trace, &outcome.infractions, spec.w1, spec.w2, prepared.delta)
            .map_err(|e: RiskError| fail(e.to_string()))?;
        let elapsed_ms = if options.deterministic_time {
            0.0
        } else {
            started.elapsed().as_secs_f64() * 1e3
        };
        let record = IterationRecord {
            iteration,
            values: scene.values.clone(),
            rs: risk.rs,
            is: risk.is,
            s_risk: risk.s_risk,
            high_risk: risk.high_risk,
            elapsed_ms,
            origin: Some(proposal.origin),
        };
        sink(&record);
        last = Some((scene, risk.s_risk));
        records.push(record);
    }
    if records.is_empty() {
        return Err(CampaignError::Invalid("the sampler produced no scenes".into()));
    }
    let aggregates = compute_aggregates(&records, &spec.space, prepared.delta, spec.seed)?;
    Ok(CampaignResult {
        spec: spec.clone(),
        delta: prepared.delta,
        records,
        aggregates,
    })
}

/// Aggregates as a pure function of the records.
pub fn compute_aggregates(
    records: &[IterationRecord],
    space: &SceneSpace,
    delta: f64,
    seed: u64,
) -> Result<Aggregates, CampaignError> {
    let risks: Vec<f64> = records.iter().map(|r| r.s_risk).collect();
    let trs = total_risk_scenes(&risks, delta)?;
    let points: Vec<Vec<f64>> = records.iter().map(|r| space.normalize(&r.values)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(metrics_seed(seed));
    let (clusters, silhouette, div) = match select_clusters(&points, DEFAULT_K_MAX, DEFAULT_RESTARTS, &mut rng) {
        Ok(a) => {
            let d = diversity(&risks, &a.labels)?;
            (Some(a.k), Some(a.silhouette), Some(d))
        }
        Err(MetricsError::TooFewPoints(_) | MetricsError::Degenerate) => (None, None, None),
        Err(e) => return Err(e.into()),
    };
    Ok(Aggregates {
        trs,
        clusters,
        silhouette,
        diversity: div,
        total_time_ms: records.iter().map(|r| r.elapsed_ms).sum(),
    })
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema: String,
    pub name: String,
    pub sampler: String,
    pub seed: u64,
    pub records: usize,
    pub delta: f64,
    pub w1: f64,
    pub w2: f64,
    pub spec_hash: String,
    pub variables: Vec<String>,
    pub aggregates: Aggregates,
}

pub fn spec_hash(spec: &CampaignSpec) -> String {
    hex::encode(Sha256::digest(format_spec(spec).as_bytes()))
}

pub fn summarize(result: &CampaignResult) -> Summary {
    Summary {
        schema: SUMMARY_SCHEMA.into(),
        name: result.spec.name.clone(),
        sampler: result.spec.sampler.kind.as_str().into(),
        seed: result.spec.seed,
        records: result.records.len(),
        delta: result.delta,
        w1: result.spec.w1,
        w2: result.spec.w2,
        spec_hash: spec_hash(&result.spec),
        variables: result.spec.space.names().map(String::from).collect(),
        aggregates: result.aggregates.clone(),
    }
}

pub fn records_csv(records: &[IterationRecord], space: &SceneSpace) -> String {
    let mut out = String::from("iteration");
    for name in space.names() {
        out.push(',');
        out.push_str(name);
    }
    out.push_str(",rs,is,s_risk,high_risk,elapsed_ms\n");
    for r in records {
        let _ = write!(out, "{}", r.iteration);
        for (v, &x) in space.vars().iter().zip(&r.values) {
            let _ = write!(out, ",{}", format_value(v.kind, x));
        }
        let _ = writeln!(
            out,
            ",{},{},{},{},{}",
            fmt_num(r.rs),
            fmt_num(r.is),
            fmt_num(r.s_risk),
            r.high_risk,
            fmt_num(r.elapsed_ms)
        );
    }
    out
}

pub fn write_results(result: &CampaignResult, dir: &Path) -> Result<(), CampaignError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let space = &result.spec.space;
    write_text(&dir.join("records.csv"), &records_csv(&result.records, space))?;
    let mut summary = serde_json::to_string_pretty(&summarize(result)).expect("summary serializes");
    summary.push('\n');
    write_text(&dir.join("summary.json"), &summary)?;
    write_text(&dir.join("spec.campaign"), &format_spec(&result.spec))?;
    let mut scenes = String::new();
    for r in &result.records {
        let artifact = emit_scene_artifact(&Scene::new(r.iteration, r.values.clone()), &result.spec)
            .map_err(|e| CampaignError::Iteration {
                iteration: r.iteration,
                message: e.to_string(),
            })?;
        scenes.push_str(&artifact);
        scenes.push('\n');
    }
    write_text(&dir.join("scenes.txt"), &scenes)
}

/// Reads `records.csv`, checking its header against `space`.
pub fn read_records(path: &Path, space: &SceneSpace) -> Result<Vec<IterationRecord>, CampaignError> {
    let text = read_text(path)?;
    let bad = |message: String| CampaignError::Format {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let mut expected = vec!["iteration".to_string()];
    expected.extend(space.names().map(String::from));
    expected.extend(["rs", "is", "s_risk", "high_risk", "elapsed_ms"].map(String::from));
    if header != expected {
        return Err(bad(format!("header {header:?} does not match the variables of the campaign")));
    }
    let d = space.len();
    let mut out = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| -> Result<f64, CampaignError> {
            row[i]
                .parse::<f64>()
                .map_err(|_| bad(format!("row {}: `{}` is not a number", line + 2, &row[i])))
        };
        let iteration = row[0]
            .parse::<u64>()
            .map_err(|_| bad(format!("row {}: bad iteration `{}`", line + 2, &row[0])))?;
        let values = (1..=d).map(num).collect::<Result<Vec<_>, _>>()?;
        let high_risk = match &row[d + 4] {
            "true" => true,
            "false" => false,
            other => return Err(bad(format!("row {}: bad high_risk `{other}`", line + 2))),
        };
        out.push(IterationRecord {
            iteration,
            values,
            rs: num(d + 1)?,
            is: num(d + 2)?,
            s_risk: num(d + 3)?,
            high_risk,
            elapsed_ms: num(d + 5)?,
            origin: None,
        });
    }
    Ok(out)
}

pub fn read_summary(dir: &Path) -> Result<Summary, CampaignError> {
    let path = dir.join("summary.json");
    let summary: Summary = serde_json::from_str(&read_text(&path)?).map_err(|e| CampaignError::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    if summary.schema != SUMMARY_SCHEMA {
        return Err(CampaignError::Schema(format!(
            "{} has schema `{}`, expected `{SUMMARY_SCHEMA}`",
            path.display(),
            summary.schema
        )));
    }
    Ok(summary)
}

/// Recomputes the aggregates of a result directory from its records.
pub fn recompute(dir: &Path) -> Result<(Summary, Aggregates), CampaignError> {
    let summary = read_summary(dir)?;
    let spec = load_spec(&dir.join("spec.campaign"))?;
    let records = read_records(&dir.join("records.csv"), &spec.space)?;
    for r in &records {
        let expect = is_high_risk(r.s_risk, summary.delta);
        if r.high_risk != expect {
            return Err(CampaignError::Format {
                path: dir.join("records.csv").display().to_string(),
                message: format!("iteration {}: high_risk flag disagrees with s_risk and delta", r.iteration),
            });
        }
    }
    let aggregates = compute_aggregates(&records, &spec.space, summary.delta, summary.seed)?;
    Ok((summary, aggregates))
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub rank: usize,
    pub path: String,
    pub name: String,
    pub sampler: String,
    pub seed: u64,
    pub trs: f64,
    /// Number, or the string "n/a" when clustering is undefined.
    pub clusters: serde_json::Value,
    pub silhouette: serde_json::Value,
    pub diversity: serde_json::Value,
    pub total_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema: String,
    pub rows: Vec<ComparisonRow>,
}

fn or_na<T: Serialize>(v: Option<T>) -> serde_json::Value {
    v.map_or_else(|| "n/a".into(), |x| serde_json::to_value(x).expect("plain number"))
}

/// Ranks result directories by TRS, highest first; equal TRS keeps the
/// given order.
pub fn compare(dirs: &[PathBuf]) -> Result<ComparisonReport, CampaignError> {
    if dirs.len() < 2 {
        return Err(CampaignError::Invalid("compare needs at least two result directories".into()));
    }
    let summaries = dirs.iter().map(|d| read_summary(d)).collect::<Result<Vec<_>, _>>()?;
    for (d, s) in dirs.iter().zip(&summaries).skip(1) {
        if s.variables != summaries[0].variables {
            return Err(CampaignError::Schema(format!(
                "{} samples variables {:?}, but {} samples {:?}",
                d.display(),
                s.variables,
                dirs[0].display(),
                summaries[0].variables
            )));
        }
    }
    let mut order: Vec<usize> = (0..dirs.len()).collect();
    order.sort_by(|&a, &b| summaries[b].aggregates.trs.total_cmp(&summaries[a].aggregates.trs));
    let rows = order
        .into_iter()
        .enumerate()
        .map(|(rank, i)| {
            let s = &summaries[i];
            ComparisonRow {
                rank: rank + 1,
                path: dirs[i].display().to_string(),
                name: s.name.clone(),
                sampler: s.sampler.clone(),
                seed: s.seed,
                trs: s.aggregates.trs,
                clusters: or_na(s.aggregates.clusters),
                silhouette: or_na(s.aggregates.silhouette),
                diversity: or_na(s.aggregates.diversity),
                total_time_ms: s.aggregates.total_time_ms,
            }
        })
        .collect();
    Ok(ComparisonReport {
        schema: "riskscout.compare/1".into(),
        rows,
    })
}

fn cell(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format!("{x:.4}"),
            _ => n.to_string(),
        },
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn format_comparison(report: &ComparisonReport) -> String {
    let mut out = format!(
        "{:<4} {:<8} {:>6} {:>8} {:>8} {:>10} {:>10} {:>12}  {}\n",
        "rank", "sampler", "seed", "trs", "clusters", "silhouette", "diversity", "time_ms", "path"
    );
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{:<4} {:<8} {:>6} {:>8.2} {:>8} {:>10} {:>10} {:>12.1}  {}",
            r.rank,
            r.sampler,
            r.seed,
            r.trs,
            cell(&r.clusters),
            cell(&r.silhouette),
            cell(&r.diversity),
            r.total_time_ms,
            r.path
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Multi-seed sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sampler: String,
    pub seeds: Vec<u64>,
    pub trs: Vec<f64>,
    pub mean_trs: f64,
    /// Sample standard deviation; 0 for a single seed.
    pub stddev_trs: f64,
    /// Mean over the seeds where diversity is defined.
    pub mean_diversity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema: String,
    pub name: String,
    pub rows: Vec<SweepRow>,
    /// Samplers left out, with the reason.
    pub skipped: Vec<(String, String)>,
}

pub fn mean_and_stddev(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every sampler over seeds `spec.seed .. spec.seed + seeds`
/// concurrently. Grid is skipped when a variable lacks a grid step.
/// Runs of a sweep, grouped by sampler.
pub type SweepRuns = Vec<(SamplerKind, Vec<CampaignResult>)>;

/// Results come back grouped by sampler in the canonical sampler order.
pub fn sweep(
    spec: &CampaignSpec,
    base: Option<&Path>,
    seeds: u64,
    options: RunOptions,
) -> Result<(SweepRuns, Vec<(String, String)>), CampaignError> {
    let mut skipped = Vec::new();
    let mut jobs = Vec::new();
    for kind in SamplerKind::ALL {
        if kind == SamplerKind::Grid {
            if let Err(e) = grid_enumerate(&spec.space) {
                skipped.push((kind.as_str().to_string(), e.to_string()));
                continue;
            }
        }
        for i in 0..seeds {
            let mut s = spec.clone();
            s.sampler.kind = kind;
            s.seed = spec.seed.wrapping_add(i);
            jobs.push((kind, s));
        }
    }
    let results = jobs
        .into_par_iter()
        .map(|(kind, s)| {
            let prepared = prepare(s, base)?;
            Ok((kind, run_campaign(&prepared, options, &mut |_| {})?))
        })
        .collect::<Result<Vec<_>, CampaignError>>()?;
    let mut grouped: Vec<(SamplerKind, Vec<CampaignResult>)> = Vec::new();
    for (kind, r) in results {
        match grouped.last_mut() {
            Some((k, v)) if *k == kind => v.push(r),
            _ => grouped.push((kind, vec![r])),
        }
    }
    Ok((grouped, skipped))
}

pub fn sweep_report(name: &str, grouped: &[(SamplerKind, Vec<CampaignResult>)], skipped: Vec<(String, String)>) -> SweepReport {
    let rows = grouped
        .iter()
        .map(|(kind, runs)| {
            let trs: Vec<f64> = runs.iter().map(|r| r.aggregates.trs).collect();
            let (mean_trs, stddev_trs) = mean_and_stddev(&trs);
            let divs: Vec<f64> = runs.iter().filter_map(|r| r.aggregates.diversity).collect();
            SweepRow {
                sampler: kind.as_str().into(),
                seeds: runs.iter().map(|r| r.spec.seed).collect(),
                trs,
                mean_trs,
                stddev_trs,
                mean_diversity: (!divs.is_empty()).then(|| mean_and_stddev(&divs).0),
            }
        })
        .collect();
    SweepReport {
        schema: "riskscout.sweep/1".into(),
        name: name.into(),
        rows,
        skipped,
    }
}

/// Writes every run under `DIR/<sampler>/seed_<s>/` and the report as
/// `DIR/sweep.json`.
pub fn write_sweep(
    dir: &Path,
    grouped: &[(SamplerKind, Vec<CampaignResult>)],
    report: &SweepReport,
) -> Result<(), CampaignError> {
    for (kind, runs) in grouped {
        for r in runs {
            write_results(r, &dir.join(kind.as_str()).join(format!("seed_{}", r.spec.seed)))?;
        }
    }
    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    write_text(&dir.join("sweep.json"), &json)
}
