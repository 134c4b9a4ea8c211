//! End-to-end runs: prime scheduling, persistence, resumption and reports.
//!
//! Primes are processed in batches of `checkpoint_every`. Inside a batch the
//! worker pool takes the largest primes first; results are merged on the
//! calling thread in ascending order, so every artifact is independent of
//! the worker count. A checkpoint is committed only after its whole batch
//! has been merged and flushed.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::census::{census_for_prime, stability_verdict, CensusOptions, CensusReport, Crosscheck, Stability};
use crate::error::{Error, Result};
use crate::estimate::{
    dirichlet_residue, rank_estimate, EstimateMode, GridValue, PrimeRecord, DEFAULT_GRID_A, DEFAULT_GRID_B,
    MIN_RESIDUE_PRIMES,
};
use crate::family::{corpus_family, parse_family, HyperellipticFamily};
use crate::primes::sieve_primes;
use crate::trace::{fibral_averages, PrimeSummary, TraceOptions, DEFAULT_B_MAX};
use crate::Series;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const PRIMES_CSV: &str = "primes.csv";
pub const CENSUS_CSV: &str = "census.csv";
pub const CHECKPOINT_JSON: &str = "checkpoint.json";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const PRIMES_HEADER: &str = "p,n_delta,A_num,B_num,elapsed_ms";
pub const CENSUS_HEADER: &str = "p,n_delta,singular_total,inferred_trace,rounded,crosscheck_pass";
/// Relative disagreement above which a recomputation is reported.
pub const RECOMPUTE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Path to a family config, or the name of a built-in family.
    pub family: String,
    pub x_max: u64,
    /// Defaults to elliptic for genus 1 and combined for genus 2.
    pub mode: Option<EstimateMode>,
    pub b_max: u64,
    pub workers: usize,
    pub checkpoint_every: usize,
    pub out_dir: PathBuf,
    pub census: bool,
    pub crosscheck_cutoff: u64,
    /// Write measured per-prime times into the CSV. Off by default so the
    /// CSV stays byte-identical across runs.
    #[serde(default)]
    pub record_timings: bool,
    /// Stop after this many checkpoints, as if the process were killed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_after_checkpoints: Option<usize>,
}

impl RunConfig {
    pub fn new(family: impl Into<String>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            family: family.into(),
            x_max: 10_000,
            mode: None,
            b_max: DEFAULT_B_MAX,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            checkpoint_every: 500,
            out_dir: out_dir.into(),
            census: false,
            crosscheck_cutoff: crate::census::DEFAULT_CROSSCHECK_CUTOFF,
            record_timings: false,
            stop_after_checkpoints: None,
        }
    }

    fn validate(&mut self) -> Result<()> {
        if self.x_max < 11 {
            return Err(Error::InvalidConfig(format!("x_max = {} must be at least 11", self.x_max)));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::InvalidConfig("checkpoint_every must be at least 1".into()));
        }
        self.b_max = self.b_max.min(self.x_max);
        Ok(())
    }
}

/// Loads a family from a config path, falling back to the built-in corpus
/// by name or by file stem (`legendre.ini` -> `legendre`).
pub fn load_family(name_or_path: &str) -> Result<HyperellipticFamily> {
    let path = Path::new(name_or_path);
    if path.is_file() {
        return parse_family(&fs::read_to_string(path)?);
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(name_or_path);
    corpus_family(name_or_path)
        .or_else(|| corpus_family(stem))
        .ok_or_else(|| Error::MalformedConfig(format!("no family file or built-in family named `{name_or_path}`")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusSummary {
    pub primes: usize,
    pub crosschecked: usize,
    pub max_abs_inferred: f64,
    pub verdict: Stability,
}

/// Persisted state at a checkpoint; the final checkpoint is the run's report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointDoc {
    pub family: String,
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub theta: f64,
    #[serde(rename = "resA_grid")]
    pub res_a_grid: Vec<GridValue<f64>>,
    #[serde(rename = "resB_grid")]
    pub res_b_grid: Vec<GridValue<f64>>,
    #[serde(rename = "resA_est")]
    pub res_a_est: Option<f64>,
    #[serde(rename = "resB_est")]
    pub res_b_est: Option<f64>,
    pub raw: Option<f64>,
    pub rounded: Option<i64>,
    pub gap: Option<f64>,
    pub mode: EstimateMode,
    pub complete: bool,
    pub last_p: u64,
    pub primes_committed: usize,
    /// `T` only includes primes below this bound (genus-2 B-pass cutoff).
    pub b_cutoff: Option<u64>,
    pub trace_trivial_asserted: bool,
    pub ns_ak_rank_asserted: u32,
    pub hasse_weil_violations: u64,
    pub weil_b_violations: u64,
    pub max_abs_a_over_bound: f64,
    pub census: Option<CensusSummary>,
    pub notes: Vec<String>,
    pub fingerprint: String,
    pub version: String,
    pub config: RunConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub trace_ms: u64,
    pub census_ms: u64,
    pub merge_ms: u64,
    pub total_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub fingerprint: String,
    pub version: String,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub timings: StageTimings,
    pub primes: usize,
    pub fibers: u64,
    pub fibers_per_second: f64,
    pub resumed: bool,
}

/// True when `current` processes fibers more than `factor` times slower than `baseline`.
pub fn throughput_regressed(baseline: &RunManifest, current: &RunManifest, factor: f64) -> bool {
    current.fibers_per_second * factor < baseline.fibers_per_second
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub checkpoint: CheckpointDoc,
    pub manifest: RunManifest,
    /// Per-prime summaries computed by this invocation (not those restored on resume).
    pub summaries: Vec<PrimeSummary>,
    pub census: Vec<CensusReport>,
}

fn unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

fn primes_row(s: &PrimeSummary, timings: bool) -> String {
    let b = s.b_num.map(|b| b.to_string()).unwrap_or_default();
    let ms = if timings { s.elapsed.as_millis() } else { 0 };
    format!("{},{},{},{},{}\n", s.p, s.n_delta, s.a_num, b, ms)
}

fn census_row(r: &CensusReport) -> String {
    let pass = match r.crosscheck {
        Crosscheck::Pass => "true",
        Crosscheck::Skipped => "skipped",
    };
    format!(
        "{},{},{},{},{},{}\n",
        r.p, r.n_delta, r.singular_total, r.inferred_trace, r.rounded, pass
    )
}

/// Writes `contents` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn corrupt(path: &Path, reason: impl Into<String>) -> Error {
    Error::CorruptArtifact {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Reads a per-prime CSV back into records, rejecting truncated or malformed rows.
pub fn read_primes_csv(path: &Path) -> Result<Vec<PrimeRecord>> {
    let text = fs::read_to_string(path)?;
    if !text.is_empty() && !text.ends_with('\n') {
        return Err(corrupt(path, "file does not end with a complete row"));
    }
    let mut lines = text.lines();
    if lines.next() != Some(PRIMES_HEADER) {
        return Err(corrupt(path, "missing or unexpected header"));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| corrupt(path, format!("row {}: {e}", i + 1)))?;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let bad = |what: &str| corrupt(path, format!("row {}: bad {what}", i + 1));
        let p = field(0).parse().map_err(|_| bad("p"))?;
        let n_delta = field(1).parse().map_err(|_| bad("n_delta"))?;
        let a_num = field(2).parse().map_err(|_| bad("A_num"))?;
        let b_num = match field(3) {
            "" => None,
            v => Some(v.parse().map_err(|_| bad("B_num"))?),
        };
        field(4).parse::<u64>().map_err(|_| bad("elapsed_ms"))?;
        out.push(PrimeRecord { p, n_delta, a_num, b_num });
    }
    Ok(out)
}

fn read_census_csv(path: &Path) -> Result<Vec<CensusReport>> {
    let text = fs::read_to_string(path)?;
    if !text.is_empty() && !text.ends_with('\n') {
        return Err(corrupt(path, "file does not end with a complete row"));
    }
    if text.lines().next() != Some(CENSUS_HEADER) {
        return Err(corrupt(path, "missing or unexpected header"));
    }
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| corrupt(path, format!("row {}: {e}", i + 1)))?;
        let bad = || corrupt(path, format!("row {}: malformed", i + 1));
        let crosscheck = match &rec[5] {
            "true" => Crosscheck::Pass,
            "skipped" => Crosscheck::Skipped,
            _ => return Err(bad()),
        };
        out.push(CensusReport {
            p: rec[0].parse().map_err(|_| bad())?,
            n_delta: rec[1].parse().map_err(|_| bad())?,
            singular_total: rec[2].parse().map_err(|_| bad())?,
            inferred_trace: rec[3].parse().map_err(|_| bad())?,
            rounded: rec[4].parse().map_err(|_| bad())?,
            total_fiberwise: None,
            total_direct: None,
            crosscheck,
        });
    }
    Ok(out)
}

struct RunState {
    config: RunConfig,
    family: HyperellipticFamily,
    mode: EstimateMode,
    series: Series,
    census: Vec<CensusReport>,
    hw_violations: u64,
    weil_b_violations: u64,
    max_a_ratio: f64,
    notes: Vec<String>,
    timings: StageTimings,
    trace_time: Duration,
    census_time: Duration,
    fibers: u64,
    resumed: bool,
    started: u64,
}

fn default_mode(family: &HyperellipticFamily) -> EstimateMode {
    if family.genus == 1 {
        EstimateMode::Elliptic
    } else {
        EstimateMode::Combined
    }
}

impl RunState {
    fn new(config: RunConfig, family: HyperellipticFamily, resumed: bool) -> Self {
        let mode = config.mode.unwrap_or_else(|| default_mode(&family));
        let mut notes = vec!["finite-X tolerances are empirical; no convergence rate is known".to_string()];
        if config.census && family.genus != 1 {
            notes.push("census skipped: it requires a genus-1 family".into());
        }
        if family.genus == 2 && config.b_max < config.x_max {
            notes.push(format!("B-term restricted to p <= {}; T is normalized by that cutoff", config.b_max));
        }
        Self {
            config,
            family,
            mode,
            series: Series::new(),
            census: Vec::new(),
            hw_violations: 0,
            weil_b_violations: 0,
            max_a_ratio: 0.0,
            notes,
            timings: StageTimings::default(),
            trace_time: Duration::ZERO,
            census_time: Duration::ZERO,
            fibers: 0,
            resumed,
            started: unix_ms(),
        }
    }

    fn census_enabled(&self) -> bool {
        self.config.census && self.family.genus == 1
    }

    fn dir(&self) -> &Path {
        &self.config.out_dir
    }

    fn checkpoint_doc(&self, x: f64, complete: bool) -> CheckpointDoc {
        let pt = self.series.at(x);
        let residues = (self.series.len() >= MIN_RESIDUE_PRIMES)
            .then(|| dirichlet_residue::<f64>(self.series.records(), &DEFAULT_GRID_A, &DEFAULT_GRID_B).ok())
            .flatten();
        let estimate = rank_estimate(&pt, &self.family, self.mode).ok();
        let census = self.census_enabled().then(|| CensusSummary {
            primes: self.census.len(),
            crosschecked: self.census.iter().filter(|r| r.crosscheck == Crosscheck::Pass).count(),
            max_abs_inferred: self.census.iter().map(|r| r.inferred_trace.abs()).fold(0.0, f64::max),
            verdict: stability_verdict(&self.census),
        });
        let mut notes = self.notes.clone();
        if !self.family.trace_trivial_asserted {
            notes.push("no rank estimate: the trivial-trace hypothesis is not asserted".into());
        }
        CheckpointDoc {
            family: self.family.name.clone(),
            x,
            s: pt.s,
            t: pt.t,
            theta: pt.theta,
            res_a_grid: residues.as_ref().map(|r| r.grid_a.clone()).unwrap_or_default(),
            res_b_grid: residues.as_ref().map(|r| r.grid_b.clone()).unwrap_or_default(),
            res_a_est: residues.as_ref().map(|r| r.res_a),
            res_b_est: residues.as_ref().and_then(|r| r.res_b),
            raw: estimate.map(|e| e.raw),
            rounded: estimate.map(|e| e.rounded),
            gap: estimate.map(|e| e.gap),
            mode: self.mode,
            complete,
            last_p: self.series.last_prime().unwrap_or(0),
            primes_committed: self.series.len(),
            b_cutoff: self.series.b_cutoff(),
            trace_trivial_asserted: self.family.trace_trivial_asserted,
            ns_ak_rank_asserted: self.family.ns_ak_rank_asserted,
            hasse_weil_violations: self.hw_violations,
            weil_b_violations: self.weil_b_violations,
            max_abs_a_over_bound: self.max_a_ratio,
            census,
            notes,
            fingerprint: self.family.fingerprint(),
            version: VERSION.to_string(),
            config: self.config.clone(),
        }
    }

    fn manifest(&self) -> RunManifest {
        let secs = self.trace_time.as_secs_f64();
        RunManifest {
            config: self.config.clone(),
            fingerprint: self.family.fingerprint(),
            version: VERSION.to_string(),
            started_unix_ms: self.started,
            finished_unix_ms: unix_ms(),
            timings: self.timings.clone(),
            primes: self.series.len(),
            fibers: self.fibers,
            fibers_per_second: if secs > 0.0 { self.fibers as f64 / secs } else { 0.0 },
            resumed: self.resumed,
        }
    }
}

fn process_prime(
    family: &HyperellipticFamily,
    p: u64,
    trace_opts: &TraceOptions,
    census_opts: Option<&CensusOptions>,
) -> Result<(PrimeSummary, Option<CensusReport>, Duration)> {
    let fam = family.reduce_mod_p(p)?;
    let summary = fibral_averages(&fam, trace_opts)?;
    let start = Instant::now();
    let census = census_opts
        .map(|opts| census_for_prime(&fam, &summary, opts))
        .transpose()?;
    Ok((summary, census, start.elapsed()))
}

fn drive(mut state: RunState, pending: &[u64]) -> Result<RunOutcome> {
    let run_start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(state.config.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let trace_opts = TraceOptions { b_max: state.config.b_max };
    let census_opts = CensusOptions {
        crosscheck_cutoff: state.config.crosscheck_cutoff,
    };
    let census_on = state.census_enabled();
    let dir = state.dir().to_path_buf();
    let mut primes_out = BufWriter::new(fs::OpenOptions::new().append(true).open(dir.join(PRIMES_CSV))?);
    let mut census_out = if census_on {
        Some(BufWriter::new(fs::OpenOptions::new().append(true).open(dir.join(CENSUS_CSV))?))
    } else {
        None
    };
    let mut summaries = Vec::new();
    let mut new_census = Vec::new();
    let mut checkpoints_written = 0usize;
    let batch_size = state.config.checkpoint_every;
    // batches stay aligned with a fresh run so resumed runs checkpoint at the same primes
    let head_len = match state.series.len() % batch_size {
        0 => 0,
        offset => (batch_size - offset).min(pending.len()),
    };
    let (head, tail) = pending.split_at(head_len);
    let mut chunks: Vec<&[u64]> = Vec::new();
    if !head.is_empty() {
        chunks.push(head);
    }
    chunks.extend(tail.chunks(batch_size));

    for (i, batch) in chunks.iter().enumerate() {
        let family = &state.family;
        let mut results: Vec<_> = pool.install(|| {
            batch
                .par_iter()
                .rev()
                .map(|&p| process_prime(family, p, &trace_opts, census_on.then_some(&census_opts)))
                .collect::<Result<Vec<_>>>()
        })?;
        results.reverse();

        let merge_start = Instant::now();
        let genus = state.family.genus;
        for (summary, census, census_time) in results {
            state.series.cesaro_update(&summary)?;
            primes_out.write_all(primes_row(&summary, state.config.record_timings).as_bytes())?;
            state.hw_violations += summary.hasse_weil_violations as u64;
            state.weil_b_violations += summary.weil_b_violations as u64;
            let bound = crate::trace::hasse_weil_bound(genus, summary.p).max(1) as f64;
            state.max_a_ratio = state.max_a_ratio.max(summary.max_abs_a as f64 / bound);
            state.fibers += (summary.n_ns + summary.n_delta) as u64;
            state.trace_time += summary.elapsed;
            state.census_time += census_time;
            state.timings.trace_ms = state.trace_time.as_millis() as u64;
            state.timings.census_ms = state.census_time.as_millis() as u64;
            if let (Some(r), Some(out)) = (census, census_out.as_mut()) {
                out.write_all(census_row(&r).as_bytes())?;
                state.census.push(r.clone());
                new_census.push(r);
            }
            summaries.push(summary);
        }
        primes_out.flush()?;
        if let Some(out) = census_out.as_mut() {
            out.flush()?;
        }
        let last = i + 1 == chunks.len();
        let x = if last {
            state.config.x_max as f64
        } else {
            state.series.last_prime().unwrap_or(0) as f64
        };
        state.series.checkpoint(x);
        let doc = state.checkpoint_doc(x, last);
        write_atomic(&dir.join(CHECKPOINT_JSON), &serde_json::to_vec_pretty(&doc)?)?;
        state.timings.merge_ms += merge_start.elapsed().as_millis() as u64;
        checkpoints_written += 1;
        if !last && state.config.stop_after_checkpoints == Some(checkpoints_written) {
            state.timings.total_ms += run_start.elapsed().as_millis() as u64;
            let manifest = state.manifest();
            write_atomic(&dir.join(MANIFEST_JSON), &serde_json::to_vec_pretty(&manifest)?)?;
            return Ok(RunOutcome {
                checkpoint: doc,
                manifest,
                summaries,
                census: new_census,
            });
        }
    }

    let x = state.config.x_max as f64;
    if chunks.is_empty() {
        state.series.checkpoint(x);
    }
    let doc = state.checkpoint_doc(x, true);
    write_atomic(&dir.join(CHECKPOINT_JSON), &serde_json::to_vec_pretty(&doc)?)?;
    state.timings.total_ms += run_start.elapsed().as_millis() as u64;
    let manifest = state.manifest();
    write_atomic(&dir.join(MANIFEST_JSON), &serde_json::to_vec_pretty(&manifest)?)?;
    Ok(RunOutcome {
        checkpoint: doc,
        manifest,
        summaries,
        census: new_census,
    })
}

fn good_primes(family: &HyperellipticFamily, x_max: u64) -> Vec<u64> {
    let bad = family.bad_primes(x_max);
    sieve_primes(x_max).into_iter().filter(|p| !bad.contains(p)).collect()
}

/// Runs a family from scratch, overwriting any artifacts in `out_dir`.
pub fn run(mut config: RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let family = load_family(&config.family)?;
    fs::create_dir_all(&config.out_dir)?;
    fs::write(config.out_dir.join(PRIMES_CSV), format!("{PRIMES_HEADER}\n"))?;
    let state = RunState::new(config, family, false);
    if state.census_enabled() {
        fs::write(state.dir().join(CENSUS_CSV), format!("{CENSUS_HEADER}\n"))?;
    }
    let primes = good_primes(&state.family, state.config.x_max);
    drive(state, &primes)
}

fn rewrite_prefix(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    let mut text = format!("{header}\n");
    for r in rows {
        text.push_str(&r);
    }
    write_atomic(path, text.as_bytes())
}

/// Continues an interrupted run from its last committed checkpoint.
///
/// Rows written after that checkpoint (including a torn final row) are
/// discarded and recomputed.
pub fn resume(checkpoint_path: &Path) -> Result<RunOutcome> {
    let doc: CheckpointDoc = serde_json::from_slice(&fs::read(checkpoint_path)?)
        .map_err(|e| corrupt(checkpoint_path, e.to_string()))?;
    let mut config = doc.config.clone();
    config.stop_after_checkpoints = None;
    if let Some(parent) = checkpoint_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        config.out_dir = parent.to_path_buf();
    }
    config.validate()?;
    let family = load_family(&config.family)?;
    if family.fingerprint() != doc.fingerprint {
        return Err(corrupt(checkpoint_path, "family config changed since the checkpoint was written"));
    }
    let dir = config.out_dir.clone();
    let primes_path = dir.join(PRIMES_CSV);
    let text = fs::read_to_string(&primes_path)?;
    // keep only complete rows up to the committed prime
    let mut kept = Vec::new();
    for line in text.split_inclusive('\n').skip(1) {
        if !line.ends_with('\n') {
            break;
        }
        match line.split(',').next().and_then(|p| p.parse::<u64>().ok()) {
            Some(p) if p <= doc.last_p => kept.push(line.to_string()),
            _ => break,
        }
    }
    if kept.len() != doc.primes_committed {
        return Err(corrupt(
            &primes_path,
            format!("expected {} committed rows, found {}", doc.primes_committed, kept.len()),
        ));
    }
    rewrite_prefix(&primes_path, PRIMES_HEADER, kept.into_iter())?;
    let records = read_primes_csv(&primes_path)?;

    let mut state = RunState::new(config, family, true);
    let batch = state.config.checkpoint_every;
    for (i, r) in records.iter().enumerate() {
        state.series.push_record(*r)?;
        if (i + 1) % batch == 0 {
            state.series.checkpoint(r.p as f64);
        }
    }
    if state.census_enabled() {
        let census_path = dir.join(CENSUS_CSV);
        let text = fs::read_to_string(&census_path).unwrap_or_default();
        let rows: Vec<String> = text
            .split_inclusive('\n')
            .skip(1)
            .take_while(|l| l.ends_with('\n'))
            .filter(|l| l.split(',').next().and_then(|p| p.parse::<u64>().ok()).is_some_and(|p| p <= doc.last_p))
            .map(str::to_string)
            .collect();
        rewrite_prefix(&census_path, CENSUS_HEADER, rows.into_iter())?;
        state.census = read_census_csv(&census_path)?;
    }
    state.hw_violations = doc.hasse_weil_violations;
    state.weil_b_violations = doc.weil_b_violations;
    state.max_a_ratio = doc.max_abs_a_over_bound;
    let pending: Vec<u64> = good_primes(&state.family, state.config.x_max)
        .into_iter()
        .filter(|&p| p > doc.last_p)
        .collect();
    drive(state, &pending)
}

fn relative_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Human-readable summary of a checkpoint or per-prime CSV.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub lines: Vec<String>,
    pub warnings: Vec<String>,
}

impl std::fmt::Display for Report {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for l in &self.lines {
            writeln!(f, "{l}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

pub fn headline(rounded: i64, gap: f64) -> String {
    format!("estimated rank {rounded} (gap {gap:.2})")
}

fn push_grid(lines: &mut Vec<String>, label: &str, grid: &[GridValue<f64>], est: Option<f64>) {
    if grid.is_empty() {
        return;
    }
    let mut s = format!("{label}:");
    for g in grid {
        let _ = write!(s, " s={:.2}:{:.4}", g.s, g.normalized);
    }
    if let Some(e) = est {
        let _ = write!(s, " -> {e:.4}");
    }
    lines.push(s);
}

/// Reports on a checkpoint (`.json`) or a per-prime CSV, recomputing the
/// sums from the CSV and warning where they disagree with the checkpoint.
pub fn report(path: &Path) -> Result<Report> {
    let mut rep = Report::default();
    let is_json = path.extension().is_some_and(|e| e == "json");
    if !is_json {
        let records = read_primes_csv(path)?;
        let series = Series::from_records(&records)?;
        let x = series.last_prime().unwrap_or(0) as f64;
        if x == 0.0 {
            return Err(corrupt(path, "no rows"));
        }
        let pt = series.at(x);
        rep.lines.push(format!("primes: {} (X = {x})", records.len()));
        rep.lines.push(format!("S(X) = {:.6}  T(X) = {:.6}  theta(X) = {:.6}", pt.s, pt.t, pt.theta));
        if let Ok(res) = dirichlet_residue::<f64>(&records, &DEFAULT_GRID_A, &DEFAULT_GRID_B) {
            push_grid(&mut rep.lines, "resA grid", &res.grid_a, Some(res.res_a));
            push_grid(&mut rep.lines, "resB grid", &res.grid_b, res.res_b);
        }
        let rounded = crate::estimate::round_ties_even(pt.s);
        rep.lines.push(format!("elliptic mode: {}", headline(rounded as i64, (pt.s - rounded).abs())));
        return Ok(rep);
    }

    let doc: CheckpointDoc =
        serde_json::from_slice(&fs::read(path)?).map_err(|e| corrupt(path, e.to_string()))?;
    rep.lines.push(format!(
        "family {} ({} mode), X = {}, {} primes{}",
        doc.family,
        doc.mode,
        doc.x,
        doc.primes_committed,
        if doc.complete { "" } else { ", incomplete" }
    ));
    rep.lines.push(format!("S(X) = {:.6}  T(X) = {:.6}  theta(X) = {:.6}", doc.s, doc.t, doc.theta));
    if let Some(c) = doc.b_cutoff {
        rep.lines.push(format!("T(X) covers primes below {c} only"));
    }
    push_grid(&mut rep.lines, "resA grid", &doc.res_a_grid, doc.res_a_est);
    push_grid(&mut rep.lines, "resB grid", &doc.res_b_grid, doc.res_b_est);
    match (doc.rounded, doc.gap) {
        (Some(r), Some(g)) => rep.lines.push(headline(r, g)),
        _ => rep.lines.push("no rank estimate (hypothesis not asserted)".into()),
    }
    rep.lines.push(format!(
        "hypotheses: trivial trace {}, rank NS(A/K) = {}",
        doc.trace_trivial_asserted, doc.ns_ak_rank_asserted
    ));
    if doc.hasse_weil_violations + doc.weil_b_violations > 0 {
        rep.warnings.push(format!(
            "{} Hasse-Weil and {} Weil-B violations recorded",
            doc.hasse_weil_violations, doc.weil_b_violations
        ));
    }
    if let Some(c) = &doc.census {
        rep.lines.push(format!(
            "census: {} primes, {} cross-checked, max |inferred| = {:.4}, verdict {:?}",
            c.primes, c.crosschecked, c.max_abs_inferred, c.verdict
        ));
    }
    for n in &doc.notes {
        rep.lines.push(format!("note: {n}"));
    }

    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let csv_path = dir.join(PRIMES_CSV);
    if csv_path.is_file() {
        let records: Vec<_> = read_primes_csv(&csv_path)?
            .into_iter()
            .filter(|r| r.p <= doc.last_p)
            .collect();
        let pt = Series::from_records(&records)?.at(doc.x);
        for (name, live, again) in [("S", doc.s, pt.s), ("T", doc.t, pt.t), ("theta", doc.theta, pt.theta)] {
            let d = relative_diff(live, again);
            if d > RECOMPUTE_TOLERANCE {
                rep.warnings.push(format!(
                    "{name}(X) recomputed from {} differs from the checkpoint by {d:.3e} (relative)",
                    csv_path.display()
                ));
            }
        }
    } else {
        rep.warnings.push(format!("{} not found; sums not re-verified", csv_path.display()));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_formats() {
        let s = PrimeSummary {
            p: 11,
            a_num: -3,
            b_num: None,
            n_delta: 2,
            n_ns: 9,
            elapsed: Duration::from_millis(12),
            max_abs_a: 3,
            max_abs_b: None,
            hasse_weil_violations: 0,
            weil_b_violations: 0,
        };
        assert_eq!(primes_row(&s, false), "11,2,-3,,0\n");
        assert_eq!(primes_row(&s, true), "11,2,-3,,12\n");
    }

    #[test]
    fn headline_format() {
        assert_eq!(headline(0, 0.04), "estimated rank 0 (gap 0.04)");
    }

    #[test]
    fn config_validation() {
        let mut c = RunConfig::new("legendre", "/tmp/x");
        c.x_max = 10;
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        let mut c = RunConfig::new("legendre", "/tmp/x");
        c.x_max = 100;
        c.validate().unwrap();
        assert_eq!(c.b_max, 100);
        c.workers = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn family_resolution() {
        assert_eq!(load_family("legendre").unwrap().name, "legendre");
        assert_eq!(load_family("some/dir/f1.ini").unwrap().name, "f1");
        assert!(matches!(load_family("nope"), Err(Error::MalformedConfig(_))));
    }

    #[test]
    fn throughput_regression_flag() {
        let mut m = RunManifest {
            config: RunConfig::new("f1", "/tmp"),
            fingerprint: String::new(),
            version: VERSION.into(),
            started_unix_ms: 0,
            finished_unix_ms: 0,
            timings: StageTimings::default(),
            primes: 0,
            fibers: 0,
            fibers_per_second: 1000.0,
            resumed: false,
        };
        let base = m.clone();
        m.fibers_per_second = 600.0;
        assert!(!throughput_regressed(&base, &m, 2.0));
        m.fibers_per_second = 400.0;
        assert!(throughput_regressed(&base, &m, 2.0));
    }
}
