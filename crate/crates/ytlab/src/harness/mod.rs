//! Experiment runner: binds word sampling, percolation functionals,
//! spectrum references and KS statistics into named experiments with
//! reproducible seeding and CSV/JSON output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::brownian::{
    d_k, d_k_grid_bias, l_k, sample_bundle, v1_limit_nonuniform, BundleMode,
    NonUniformLimitParams,
};
use crate::error::{Error, Result};
use crate::lpp::{gap_samples, lppk, WeightMatrix};
use crate::model::{
    equal_tail_distribution, nonuniform_distribution, sample_word, uniform_distribution,
    validate_schedule, DistSpec, GrowthSchedule, LetterDistribution, Theorem,
};
use crate::randmat::{
    fr_reference, make_traceless, sample_gue_spectrum, tw_reference, ReferenceDistribution,
    ReferenceMetadata,
};
use crate::rng::{domain, stream_rng};
use crate::rsk::{lis, theta_inv};
use crate::stats::{ks_two_sample, quantiles, EmpiricalDistribution};

/// Bit-exact raw CSV header.
pub const RAW_HEADER: &str = "experiment,n,m,k,sample_id,statistic,value";

/// Quantile grid reported for every statistic.
pub const QUANTILE_GRID: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Full configuration of one run. [`ExperimentConfig::new`] fills in the
/// per-experiment defaults; any field may be overridden afterwards.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub n: usize,
    /// Explicit alphabet size; wins over the schedule when set.
    pub m: Option<usize>,
    pub schedule: Option<GrowthSchedule>,
    pub dist: Option<DistSpec>,
    pub samples: usize,
    /// Marginals for vector statistics.
    pub r: usize,
    /// Chain length for the percolation experiments.
    pub k: usize,
    pub p_max: f64,
    pub m_ref: usize,
    pub ref_samples: usize,
    pub steps_per_unit: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    pub svg: bool,
    /// KS threshold override; `None` keeps the experiment default.
    pub threshold: Option<f64>,
}

impl ExperimentConfig {
    pub fn new(experiment: &str) -> Result<Self> {
        let info = catalog()
            .into_iter()
            .find(|e| e.name == experiment)
            .ok_or_else(|| Error::UnknownExperiment(experiment.to_string()))?;
        Ok(ExperimentConfig {
            experiment: experiment.to_string(),
            n: info.default_n,
            m: None,
            schedule: None,
            dist: None,
            samples: info.default_samples,
            r: 2,
            k: info.default_k,
            p_max: info.default_p_max,
            m_ref: 400,
            ref_samples: 10_000,
            steps_per_unit: info.default_steps,
            seed: 0,
            out_dir: PathBuf::from("out"),
            format: OutputFormat::Csv,
            svg: false,
            threshold: None,
        })
    }
}

/// One catalog entry.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentInfo {
    pub name: String,
    pub parameters: String,
    /// The limit statement the experiment probes.
    pub claim: String,
    pub default_threshold: f64,
    #[serde(skip)]
    default_n: usize,
    #[serde(skip)]
    default_samples: usize,
    #[serde(skip)]
    default_k: usize,
    #[serde(skip)]
    default_p_max: f64,
    #[serde(skip)]
    default_steps: usize,
}

fn entry(
    name: &str,
    parameters: &str,
    claim: &str,
    default_threshold: f64,
    defaults: (usize, usize, usize, f64, usize),
) -> ExperimentInfo {
    ExperimentInfo {
        name: name.into(),
        parameters: parameters.into(),
        claim: claim.into(),
        default_threshold,
        default_n: defaults.0,
        default_samples: defaults.1,
        default_k: defaults.2,
        default_p_max: defaults.3,
        default_steps: defaults.4,
    }
}

fn catalog() -> Vec<ExperimentInfo> {
    vec![
        entry(
            "corollary4",
            "n, schedule|m, samples, mref, seed",
            "uniform words, m = n^a with a < 3/10: (V_1 - n/m - 2 sqrt(n)) m^{2/3} / sqrt(n) \
             converges to the Tracy-Widom law",
            0.12,
            (100_000, 1000, 1, 0.0, 1000),
        ),
        entry(
            "theorem3",
            "n, schedule|m, samples, r, mref, seed",
            "uniform words, m = n^a with a < 3/10: the vector ((V_k - kn/m - 2k sqrt(n)) \
             m^{2/3} / sqrt(n))_{k<=r} converges to the partial sums of the joint top-r \
             GUE edge law",
            0.12,
            (100_000, 1000, 1, 0.0, 1000),
        ),
        entry(
            "theorem6",
            "n, dist (k, p_max, tail), samples, mref, seed",
            "non-uniform words with k maximal letters, k -> infinity and p_2nd^2 n^{11/10} \
             (log n)^{-1/5} = o(p_max): (V_1 - p_max n - 2 sqrt(k p_max n)) k^{2/3} / \
             sqrt(k p_max n) converges to the Tracy-Widom law",
            0.15,
            (100_000, 1000, 32, 0.03, 1000),
        ),
        entry(
            "gue0",
            "m, samples, seed",
            "traceless GUE spectrum plus an independent common N(0, 1/m) shift equals the \
             GUE spectrum in law",
            0.015,
            (0, 50_000, 1, 0.0, 1000),
        ),
        entry(
            "scaling1",
            "m, samples, steps, seed",
            "Brownian scaling: L_1(4, m) / 2 equals L_1(1, m) in law",
            0.05,
            (0, 4000, 1, 0.0, 1000),
        ),
        entry(
            "dk-limit",
            "k, samples, steps, mref, seed",
            "k^{1/6} (D_k - 2 sqrt(k)) converges to the Tracy-Widom law as k -> infinity",
            0.10,
            (0, 4000, 50, 0.0, 1000),
        ),
        entry(
            "lim2-k1",
            "n, p_max, samples, seed",
            "single maximal letter: (V_1 - p_max n) / sqrt(p_max n) converges to \
             sqrt(1 - p_max) N(0, 1)",
            0.05,
            (100_000, 2000, 1, 0.3, 64),
        ),
        entry(
            "lemma7-gap",
            "n (doubling grid base), k, p_max, samples, seed",
            "E[V_1 - V_1'] stays bounded relative to its analytic control as n doubles \
             (V_1' restricts the maximum to the most probable letters)",
            0.10,
            (500, 2000, 50, 0.01, 1000),
        ),
        entry(
            "spectrum-identity",
            "m, samples, steps, seed",
            "sqrt((m-1)/m) times the increments of (L_k(1, m))_k on exchangeable bundles \
             equals the traceless-GUE spectrum in law (first coordinate checked)",
            0.05,
            (0, 5000, 1, 0.0, 2000),
        ),
    ]
}

/// Names, parameters and the claims each experiment probes.
pub fn list_experiments() -> Vec<ExperimentInfo> {
    catalog()
}

/// One raw output record.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub experiment_name: String,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub sample_id: usize,
    pub statistic: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KsEntry {
    /// `"<sample statistic> vs <reference statistic>"`.
    pub statistic: String,
    pub k: usize,
    #[serde(rename = "D")]
    pub d: f64,
    pub p: f64,
    pub n1: usize,
    pub n2: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportSummary {
    pub experiment: String,
    pub params: Map<String, Value>,
    pub seed: u64,
    pub ks: Vec<KsEntry>,
    /// statistic -> quantile (as printed probability) -> value.
    pub quantiles: BTreeMap<String, BTreeMap<String, f64>>,
    pub wall_seconds: f64,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub summary: ReportSummary,
    pub rows: Vec<RawRow>,
    /// KS thresholds (or stability bounds) that were exceeded.
    pub failures: Vec<String>,
    pub raw_path: PathBuf,
    pub summary_path: PathBuf,
    pub svg_path: Option<PathBuf>,
}

struct ExpData {
    rows: Vec<RawRow>,
    ks: Vec<KsEntry>,
    params: Map<String, Value>,
    failures: Vec<String>,
}

/// Run one experiment end to end and write its raw and summary files.
/// Identical config and seed produce byte-identical raw output.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    let started = Instant::now();
    if config.samples == 0 {
        return Err(Error::InvalidParameter("samples must be >= 1".into()));
    }
    let data = match config.experiment.as_str() {
        "corollary4" => run_corollary4(config)?,
        "theorem3" => run_theorem3(config)?,
        "theorem6" => run_theorem6(config)?,
        "gue0" => run_gue0(config)?,
        "scaling1" => run_scaling1(config)?,
        "dk-limit" => run_dk_limit(config)?,
        "lim2-k1" => run_lim2_k1(config)?,
        "lemma7-gap" => run_lemma7_gap(config)?,
        "spectrum-identity" => run_spectrum_identity(config)?,
        other => return Err(Error::UnknownExperiment(other.to_string())),
    };
    let ExpData { rows, ks, mut params, failures } = data;
    params.insert("samples".into(), json!(config.samples));
    params.insert("failures".into(), json!(failures));

    let mut quantile_map = BTreeMap::new();
    for (statistic, values) in group_values(&rows) {
        let sample = EmpiricalDistribution::new(values)?;
        let qs = quantiles(&sample, &QUANTILE_GRID)?;
        let inner: BTreeMap<String, f64> =
            QUANTILE_GRID.iter().zip(qs).map(|(q, v)| (format!("{q}"), v)).collect();
        quantile_map.insert(statistic, inner);
    }

    let summary = ReportSummary {
        experiment: config.experiment.clone(),
        params,
        seed: config.seed,
        ks,
        quantiles: quantile_map,
        wall_seconds: started.elapsed().as_secs_f64(),
    };

    fs::create_dir_all(&config.out_dir)?;
    let raw_path = match config.format {
        OutputFormat::Csv => {
            let path = config.out_dir.join(format!("{}-raw.csv", config.experiment));
            fs::write(&path, rows_to_csv(&rows))?;
            path
        }
        OutputFormat::Json => {
            let path = config.out_dir.join(format!("{}-raw.json", config.experiment));
            let records: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "experiment": r.statistic_experiment(),
                        "n": r.n, "m": r.m, "k": r.k,
                        "sample_id": r.sample_id,
                        "statistic": r.statistic, "value": r.value,
                    })
                })
                .collect();
            fs::write(&path, serde_json::to_string_pretty(&records)?)?;
            path
        }
    };
    let summary_path = config.out_dir.join(format!("{}-summary.json", config.experiment));
    fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)?;

    let svg_path = if config.svg {
        let path = config.out_dir.join(format!("{}-hist.svg", config.experiment));
        if let Some((stat, values)) = group_values(&rows).into_iter().next() {
            fs::write(&path, histogram_svg(&stat, &values))?;
        }
        Some(path)
    } else {
        None
    };

    Ok(RunOutcome { summary, rows, failures, raw_path, summary_path, svg_path })
}

impl RawRow {
    fn statistic_experiment(&self) -> &str {
        // The experiment column is constant per file; stored once on the
        // row for CSV convenience.
        &self.experiment_name
    }
}

/// Serialize rows with the bit-exact header; floats printed as shortest
/// round-trip decimals.
pub fn rows_to_csv(rows: &[RawRow]) -> String {
    let mut out = String::with_capacity(64 + rows.len() * 48);
    out.push_str(RAW_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.experiment_name, r.n, r.m, r.k, r.sample_id, r.statistic, r.value
        ));
    }
    out
}

fn group_values(rows: &[RawRow]) -> Vec<(String, Vec<f64>)> {
    let mut order: Vec<String> = Vec::new();
    let mut map: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in rows {
        if !map.contains_key(&r.statistic) {
            order.push(r.statistic.clone());
        }
        map.entry(r.statistic.clone()).or_default().push(r.value);
    }
    order.into_iter().map(|s| (s.clone(), map.remove(&s).unwrap())).collect()
}

fn ks_entry(
    a_name: &str,
    a: &[f64],
    b_name: &str,
    b: &[f64],
    k: usize,
) -> Result<(KsEntry, f64)> {
    let ra = EmpiricalDistribution::new(a.to_vec())?;
    let rb = EmpiricalDistribution::new(b.to_vec())?;
    let ks = ks_two_sample(&ra, &rb)?;
    Ok((
        KsEntry {
            statistic: format!("{a_name} vs {b_name}"),
            k,
            d: ks.d,
            p: ks.p_approx,
            n1: ks.n1,
            n2: ks.n2,
        },
        ks.d,
    ))
}

fn default_threshold(experiment: &str) -> f64 {
    catalog()
        .into_iter()
        .find(|e| e.name == experiment)
        .map(|e| e.default_threshold)
        .unwrap_or(0.05)
}

fn threshold_of(config: &ExperimentConfig) -> f64 {
    config.threshold.unwrap_or_else(|| default_threshold(&config.experiment))
}

fn check_threshold(d: f64, threshold: f64, label: &str, failures: &mut Vec<String>) {
    if d > threshold {
        failures.push(format!("{label}: D = {d:.4} exceeds threshold {threshold}"));
    }
}

// ---- reference caching ----------------------------------------------------

fn cache_paths(config: &ExperimentConfig, statistic: &str, r: usize) -> (PathBuf, PathBuf) {
    let dir = config.out_dir.join("refcache");
    let stem = format!(
        "{statistic}-m{}-r{r}-N{}-seed{}",
        config.m_ref, config.ref_samples, config.seed
    );
    (dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.json")))
}

fn load_reference(csv: &Path, meta: &Path) -> Result<ReferenceDistribution> {
    let meta: ReferenceMetadata = serde_json::from_str(&fs::read_to_string(meta)?)?;
    let text = fs::read_to_string(csv)?;
    let mut lines = text.lines();
    if lines.next() != Some("sample_id,k,value") {
        return Err(Error::InvalidInput("bad reference CSV header".into()));
    }
    let mut rows: Vec<Vec<f64>> = vec![Vec::with_capacity(meta.r); meta.n];
    for line in lines {
        let mut parts = line.splitn(3, ',');
        let id: usize = parse_field(parts.next(), "sample_id")?;
        let _k: usize = parse_field(parts.next(), "k")?;
        let v: f64 = parse_field(parts.next(), "value")?;
        rows.get_mut(id)
            .ok_or_else(|| Error::InvalidInput(format!("sample_id {id} out of range")))?
            .push(v);
    }
    ReferenceDistribution::from_parts(meta, rows)
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, name: &str) -> Result<T> {
    field
        .ok_or_else(|| Error::InvalidInput(format!("missing CSV field {name}")))?
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad CSV field {name}")))
}

fn cached_reference(
    config: &ExperimentConfig,
    statistic: &str,
    r: usize,
    build: impl FnOnce() -> Result<ReferenceDistribution>,
) -> Result<ReferenceDistribution> {
    let (csv, meta) = cache_paths(config, statistic, r);
    if csv.exists() && meta.exists() {
        if let Ok(reference) = load_reference(&csv, &meta) {
            return Ok(reference);
        }
    }
    let reference = build()?;
    fs::create_dir_all(csv.parent().unwrap())?;
    let mut buf = Vec::new();
    reference.write_csv(&mut buf)?;
    fs::write(&csv, buf)?;
    fs::write(&meta, serde_json::to_string_pretty(&reference.metadata())?)?;
    Ok(reference)
}

fn cached_tw(config: &ExperimentConfig) -> Result<ReferenceDistribution> {
    cached_reference(config, "tw", 1, || {
        tw_reference(config.m_ref, config.ref_samples, config.seed, domain::REFERENCE)
    })
}

fn cached_fr(config: &ExperimentConfig, r: usize) -> Result<ReferenceDistribution> {
    cached_reference(config, "fr", r, || {
        fr_reference(config.m_ref, r, config.ref_samples, config.seed, domain::REFERENCE)
    })
}

fn reference_rows(
    experiment: &str,
    reference: &ReferenceDistribution,
    statistic: &str,
    coordinate: usize,
    k_column: usize,
) -> Vec<RawRow> {
    reference
        .rows()
        .iter()
        .enumerate()
        .map(|(id, row)| RawRow {
            experiment_name: experiment.to_string(),
            n: 0,
            m: reference.m_ref,
            k: k_column,
            sample_id: id,
            statistic: statistic.to_string(),
            value: row[coordinate],
        })
        .collect()
}

// ---- word-ensemble experiments -------------------------------------------

fn resolve_uniform_ensemble(config: &ExperimentConfig) -> Result<(usize, LetterDistribution)> {
    let m = match config.m {
        Some(m) => m,
        None => {
            let schedule =
                config.schedule.clone().unwrap_or_else(|| GrowthSchedule::power(0.25));
            let report = validate_schedule(&schedule, Theorem::Main)?;
            if let Some(fail) = report.first_failure() {
                return Err(Error::ScheduleRejected(format!("{}: {}", fail.name, fail.detail)));
            }
            schedule.m_of(config.n)
        }
    };
    Ok((m, uniform_distribution(m)?))
}

fn run_corollary4(config: &ExperimentConfig) -> Result<ExpData> {
    let (m, dist) = resolve_uniform_ensemble(config)?;
    let n = config.n;
    let scale = (m as f64).powf(2.0 / 3.0) / (n as f64).sqrt();
    let center = n as f64 / m as f64 + 2.0 * (n as f64).sqrt();
    let stats: Vec<f64> = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let word = sample_word(&dist, n, config.seed, domain::SAMPLES + i as u64);
            (lis(&word) as f64 - center) * scale
        })
        .collect();
    let reference = cached_tw(config)?;
    let mut rows: Vec<RawRow> = stats
        .iter()
        .enumerate()
        .map(|(id, &v)| RawRow {
            experiment_name: config.experiment.clone(),
            n,
            m,
            k: 1,
            sample_id: id,
            statistic: "v1-scaled".into(),
            value: v,
        })
        .collect();
    rows.extend(reference_rows(&config.experiment, &reference, "tw-ref", 0, 1));
    let ref_values: Vec<f64> = reference.rows().iter().map(|r| r[0]).collect();
    let (entry, d) = ks_entry("v1-scaled", &stats, "tw-ref", &ref_values, 1)?;
    let mut failures = Vec::new();
    check_threshold(d, threshold_of(config), "v1-scaled vs tw-ref", &mut failures);
    let mut params = Map::new();
    params.insert("n".into(), json!(n));
    params.insert("m".into(), json!(m));
    params.insert("m_ref".into(), json!(config.m_ref));
    params.insert("threshold".into(), json!(threshold_of(config)));
    Ok(ExpData { rows, ks: vec![entry], params, failures })
}

fn run_theorem3(config: &ExperimentConfig) -> Result<ExpData> {
    let (m, dist) = resolve_uniform_ensemble(config)?;
    let n = config.n;
    let r = config.r.max(1);
    if r > m {
        return Err(Error::InvalidParameter(format!("r = {r} exceeds m = {m}")));
    }
    let scale = (m as f64).powf(2.0 / 3.0) / (n as f64).sqrt();
    let vectors: Vec<Vec<f64>> = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let word = sample_word(&dist, n, config.seed, domain::SAMPLES + i as u64);
            let weights = occupancy_weights(&word, m);
            (1..=r)
                .map(|k| {
                    let vk = if k == 1 {
                        lis(&word) as f64
                    } else {
                        lppk(&weights, k).expect("guard sized at config time")
                    };
                    let center = k as f64 * (n as f64 / m as f64 + 2.0 * (n as f64).sqrt());
                    (vk - center) * scale
                })
                .collect()
        })
        .collect();
    let reference = cached_fr(config, r)?;
    let mut rows = Vec::new();
    for k in 1..=r {
        for (id, v) in vectors.iter().enumerate() {
            rows.push(RawRow {
                experiment_name: config.experiment.clone(),
                n,
                m,
                k,
                sample_id: id,
                statistic: format!("v{k}-scaled"),
                value: v[k - 1],
            });
        }
        rows.extend(reference_rows(
            &config.experiment,
            &reference,
            &format!("fr-ref-{k}"),
            k - 1,
            k,
        ));
    }
    let mut ks = Vec::new();
    let mut failures = Vec::new();
    for k in 1..=r {
        let stats: Vec<f64> = vectors.iter().map(|v| v[k - 1]).collect();
        let ref_values: Vec<f64> = reference.rows().iter().map(|row| row[k - 1]).collect();
        let (entry, d) =
            ks_entry(&format!("v{k}-scaled"), &stats, &format!("fr-ref-{k}"), &ref_values, k)?;
        check_threshold(
            d,
            threshold_of(config),
            &format!("v{k}-scaled vs fr-ref-{k}"),
            &mut failures,
        );
        ks.push(entry);
    }
    // Increment ordering: consecutive per-sample increments of the
    // partial-sum statistic should be non-increasing, as eigenvalue
    // increments are.
    let ordered = |rows: &[Vec<f64>]| -> f64 {
        if r < 2 {
            return 1.0;
        }
        let good = rows
            .iter()
            .filter(|v| {
                (2..r).all(|k| v[k] - v[k - 1] <= v[k - 1] - v[k - 2])
                    && (r < 2 || v[1] - v[0] <= v[0])
            })
            .count();
        good as f64 / rows.len() as f64
    };
    let sample_fraction = ordered(&vectors);
    let reference_fraction = ordered(reference.rows());
    if reference_fraction < 0.95 {
        failures.push(format!(
            "reference increment ordering fraction {reference_fraction} below 0.95"
        ));
    }
    let mut params = Map::new();
    params.insert("n".into(), json!(n));
    params.insert("m".into(), json!(m));
    params.insert("r".into(), json!(r));
    params.insert("m_ref".into(), json!(config.m_ref));
    params.insert("threshold".into(), json!(threshold_of(config)));
    params.insert("increment_ordering_samples".into(), json!(sample_fraction));
    params.insert("increment_ordering_reference".into(), json!(reference_fraction));
    Ok(ExpData { rows, ks, params, failures })
}

fn occupancy_weights(word: &crate::model::Word, m: usize) -> WeightMatrix {
    let n = word.n();
    let mut w = vec![0.0f64; n * m];
    for (i, &l) in word.letters.iter().enumerate() {
        w[i * m + l as usize] = 1.0;
    }
    WeightMatrix::new(n, m, w).expect("dimensions consistent")
}

fn theorem6_distribution(config: &ExperimentConfig) -> Result<LetterDistribution> {
    match &config.dist {
        Some(spec) => spec.build(),
        None => nonuniform_distribution(32, 0.03, &vec![4e-5; 1000]),
    }
}

fn condition2_margin(n: usize, p_max: f64, p_2nd: f64) -> f64 {
    let n = n as f64;
    let lhs = p_2nd * p_2nd * n.powf(1.1) / n.ln().powf(0.2);
    p_max / lhs
}

fn run_theorem6(config: &ExperimentConfig) -> Result<ExpData> {
    let dist = theorem6_distribution(config)?;
    let n = config.n;
    let p_max = dist.p_max();
    let k = dist.k();
    let p_2nd = dist.p_2nd().ok_or_else(|| {
        Error::DegenerateInput("theorem6 needs non-maximal letters (p_2nd undefined)".into())
    })?;
    if let Some(schedule) = &config.schedule {
        let report = validate_schedule(schedule, Theorem::NonUniform)?;
        if let Some(fail) = report.first_failure() {
            return Err(Error::ScheduleRejected(format!("{}: {}", fail.name, fail.detail)));
        }
    }
    let margin = condition2_margin(n, p_max, p_2nd);
    if margin < 10.0 {
        return Err(Error::ScheduleRejected(format!(
            "second-probability: p_2nd^2 n^1.1 (log n)^-0.2 must stay at least 10x below \
             p_max; margin is {margin:.2}"
        )));
    }
    let scale = (k as f64).powf(2.0 / 3.0) / (k as f64 * p_max * n as f64).sqrt();
    let center = p_max * n as f64 + 2.0 * (k as f64 * p_max * n as f64).sqrt();
    let stats: Vec<f64> = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let word = sample_word(&dist, n, config.seed, domain::SAMPLES + i as u64);
            (lis(&word) as f64 - center) * scale
        })
        .collect();
    let reference = cached_tw(config)?;
    let mut rows: Vec<RawRow> = stats
        .iter()
        .enumerate()
        .map(|(id, &v)| RawRow {
            experiment_name: config.experiment.clone(),
            n,
            m: dist.m(),
            k,
            sample_id: id,
            statistic: "v1-nonunif-scaled".into(),
            value: v,
        })
        .collect();
    rows.extend(reference_rows(&config.experiment, &reference, "tw-ref", 0, k));
    let ref_values: Vec<f64> = reference.rows().iter().map(|r| r[0]).collect();
    let (entry, d) = ks_entry("v1-nonunif-scaled", &stats, "tw-ref", &ref_values, k)?;
    let mut failures = Vec::new();
    check_threshold(d, threshold_of(config), "v1-nonunif-scaled vs tw-ref", &mut failures);
    let mut params = Map::new();
    params.insert("n".into(), json!(n));
    params.insert("m".into(), json!(dist.m()));
    params.insert("k".into(), json!(k));
    params.insert("p_max".into(), json!(p_max));
    params.insert("p_2nd".into(), json!(p_2nd));
    params.insert("condition2_margin".into(), json!(margin));
    params.insert("m_ref".into(), json!(config.m_ref));
    params.insert("threshold".into(), json!(threshold_of(config)));
    Ok(ExpData { rows, ks: vec![entry], params, failures })
}

// ---- spectrum and Brownian experiments -----------------------------------

fn run_gue0(config: &ExperimentConfig) -> Result<ExpData> {
    let m = config.m.unwrap_or(5);
    let z_scale = 1.0 / (m as f64).sqrt();
    let pairs: Vec<(f64, f64)> = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng_a = stream_rng(config.seed, domain::SAMPLES + i as u64);
            let direct = sample_gue_spectrum(m, &mut rng_a).expect("m >= 1");
            let mut rng_b = stream_rng(config.seed, domain::REFERENCE + i as u64);
            let traceless =
                make_traceless(sample_gue_spectrum(m, &mut rng_b).expect("m >= 1"));
            let mut rng_z = stream_rng(config.seed, domain::AUXILIARY + i as u64);
            let z: f64 =
                rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng_z);
            (direct.top(), traceless.top() + z * z_scale)
        })
        .collect();
    let direct: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let shifted: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut rows = Vec::with_capacity(2 * config.samples);
    for (name, values) in [("gue-top", &direct), ("gue0-shifted-top", &shifted)] {
        for (id, &v) in values.iter().enumerate() {
            rows.push(RawRow {
                experiment_name: config.experiment.clone(),
                n: 0,
                m,
                k: 1,
                sample_id: id,
                statistic: name.into(),
                value: v,
            });
        }
    }
    let (entry, d) = ks_entry("gue-top", &direct, "gue0-shifted-top", &shifted, 1)?;
    let mut failures = Vec::new();
    check_threshold(d, threshold_of(config), "gue-top vs gue0-shifted-top", &mut failures);
    let mut params = Map::new();
    params.insert("m".into(), json!(m));
    params.insert("threshold".into(), json!(threshold_of(config)));
    Ok(ExpData { rows, ks: vec![entry], params, failures })
}

fn run_scaling1(config: &ExperimentConfig) -> Result<ExpData> {
    let m = config.m.unwrap_or(4);
    let steps = config.steps_per_unit;
    let pairs: Vec<(f64, f64)> = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng_long = stream_rng(config.seed, domain::SAMPLES + i as u64);
            let long = sample_bundle(m, steps, 4.0, BundleMode::Independent, &mut rng_long)
                .and_then(|b| l_k(&b, 4.0, 1))
                .expect("valid bundle parameters");
            // The unit-horizon bundle gets the same total grid cardinality
            // (4 * steps points), so the two discretized laws are exactly
            // equal under Brownian scaling, not just in the limit.
            let mut rng_unit = stream_rng(config.seed, domain::AUXILIARY + i as u64);
            let unit = sample_bundle(m, 4 * steps, 1.0, BundleMode::Independent, &mut rng_unit)
                .and_then(|b| l_k(&b, 1.0, 1))
                .expect("valid bundle parameters");
            (long / 2.0, unit)
        })
        .collect();
    let long: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let unit: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut rows = Vec::with_capacity(2 * config.samples);
    for (name, values) in [("l1-long-half", &long), ("l1-unit", &unit)] {
        for (id, &v) in values.iter().enumerate() {
            rows.push(RawRow {
                experiment_name: config.experiment.clone(),
                n: steps,
                m,
                k: 1,
                sample_id: id,
                statistic: name.into(),
                value: v,
            });
        }
    }
    let (entry, d) = ks_entry("l1-long-half", &long, "l1-unit", &unit, 1)?;
    let mut failures = Vec::new();
    check_threshold(d, threshold_of(config), "l1-long-half vs l1-unit", &mut failures);
    let mut params = Map::new();
    params.insert("m".into(), json!(m));
    params.insert("steps_per_unit".into(), json!(steps));
    params.insert("threshold".into(), json!(threshold_of(config)));
    Ok(ExpData { rows, ks: vec![entry], params, failures })
}

fn run_dk_limit(config: &ExperimentConfig) -> Result<ExpData> {
    let k = config.k.max(1);
    let steps = config.steps_per_unit;
    let scale = (k as f64).powf(1.0 / 6.0);
    let edge = 2.0 * (k as f64).sqrt();
    let bias = d_k_grid_bias(k, steps);
    let stats: Vec<f64> = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(config.seed, domain::SAMPLES + i as u64);
            let v = d_k(k, steps, &mut rng).expect("k, steps >= 1") + bias;
            scale * (v - edge)
        })
        .collect();
    let reference = cached_tw(config)?;
    let mut rows: Vec<RawRow> = stats
        .iter()
        .enumerate()
        .map(|(id, &v)| RawRow {
            experiment_name: config.experiment.clone(),
            n: steps,
            m: 0,
            k,
            sample_id: id,
            statistic: "dk-scaled".into(),
            value: v,
        })
        .collect();
    rows.extend(reference_rows(&config.experiment, &reference, "tw-ref", 0, k));
    let ref_values: Vec<f64> = reference.rows().iter().map(|r| r[0]).collect();
    let (entry, d) = ks_entry("dk-scaled", &stats, "tw-ref", &ref_values, k)?;
    let mut failures = Vec::new();
    check_threshold(d, threshold_of(config), "dk-scaled vs tw-ref", &mut failures);
    let mut params = Map::new();
    params.insert("k".into(), json!(k));
    params.insert("steps".into(), json!(steps));
    params.insert("m_ref".into(), json!(config.m_ref));
    params.insert("threshold".into(), json!(threshold_of(config)));
    Ok(ExpData { rows, ks: vec![entry], params, failures })
}

fn run_lim2_k1(config: &ExperimentConfig) -> Result<ExpData> {
    let n = config.n;
    let p_max = config.p_max;
    let dist = match &config.dist {
        Some(spec) => spec.build()?,
        None => {
            // Default: the remaining mass spread over 1000 small letters.
            let tail_count = 1000;
            equal_tail_distribution(1, p_max, tail_count)?
        }
    };
    if dist.k() != 1 {
        return Err(Error::InvalidParameter(
            "lim2-k1 needs a single maximal letter".into(),
        ));
    }
    let limit = NonUniformLimitParams::new(1, dist.p_max())?;
    let sd = (dist.p_max() * n as f64).sqrt();
    let center = dist.p_max() * n as f64;
    let pairs: Vec<(f64, f64)> = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let word = sample_word(&dist, n, config.seed, domain::SAMPLES + i as u64);
            let stat = (lis(&word) as f64 - center) / sd;
            let mut rng = stream_rng(config.seed, domain::AUXILIARY + i as u64);
            let lim = v1_limit_nonuniform(&limit, config.steps_per_unit.max(1), &mut rng)
                .expect("steps >= 1");
            (stat, lim)
        })
        .collect();
    let stats: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let limits: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut rows = Vec::with_capacity(2 * config.samples);
    for (name, values, n_col) in
        [("v1-centered", &stats, n), ("v1-limit", &limits, 0usize)]
    {
        for (id, &v) in values.iter().enumerate() {
            rows.push(RawRow {
                experiment_name: config.experiment.clone(),
                n: n_col,
                m: dist.m(),
                k: 1,
                sample_id: id,
                statistic: name.into(),
                value: v,
            });
        }
    }
    let (entry, d) = ks_entry("v1-centered", &stats, "v1-limit", &limits, 1)?;
    let mut failures = Vec::new();
    check_threshold(d, threshold_of(config), "v1-centered vs v1-limit", &mut failures);
    let mut params = Map::new();
    params.insert("n".into(), json!(n));
    params.insert("p_max".into(), json!(dist.p_max()));
    params.insert("m".into(), json!(dist.m()));
    params.insert("threshold".into(), json!(threshold_of(config)));
    Ok(ExpData { rows, ks: vec![entry], params, failures })
}

fn run_lemma7_gap(config: &ExperimentConfig) -> Result<ExpData> {
    let k = config.k.max(1);
    let p_max = config.p_max;
    let p_2nd = 1e-4;
    let tail_mass = 1.0 - k as f64 * p_max;
    if tail_mass <= 0.0 {
        return Err(Error::InvalidParameter("k * p_max must be < 1".into()));
    }
    let tail_count = (tail_mass / p_2nd).round() as usize;
    let dist = nonuniform_distribution(k, p_max, &vec![tail_mass / tail_count as f64; tail_count])?;
    let p_2nd = dist.p_2nd().expect("tail present");
    let grid: Vec<usize> = (0..4).map(|g| config.n << g).collect();
    let mut rows = Vec::new();
    let mut means = Vec::new();
    let mut ratios = Vec::new();
    for (g, &n) in grid.iter().enumerate() {
        let gaps = gap_samples(
            &dist,
            n,
            config.samples,
            config.seed,
            (g as u64) * 1_000_000_000,
        )?;
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        means.push(mean);
        ratios.push(mean / (n as f64 * p_2nd));
        for (id, &v) in gaps.iter().enumerate() {
            rows.push(RawRow {
                experiment_name: config.experiment.clone(),
                n,
                m: dist.m(),
                k,
                sample_id: id,
                statistic: format!("gap-n{n}"),
                value: v,
            });
        }
    }
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let stability = threshold_of(config);
    let mut failures = Vec::new();
    if !(lo > 0.0 && lo.is_finite() && hi.is_finite()) {
        failures.push(format!("gap ratios not finite positive: {ratios:?}"));
    } else if hi / lo > 1.0 + stability {
        failures.push(format!(
            "gap ratio spread {:.3} exceeds {:.2} (ratios {ratios:?})",
            hi / lo,
            1.0 + stability
        ));
    }
    let mut params = Map::new();
    params.insert("n_grid".into(), json!(grid));
    params.insert("k".into(), json!(k));
    params.insert("p_max".into(), json!(p_max));
    params.insert("p_2nd".into(), json!(p_2nd));
    params.insert("means".into(), json!(means));
    params.insert("ratios".into(), json!(ratios));
    params.insert("stability".into(), json!(stability));
    Ok(ExpData { rows, ks: Vec::new(), params, failures })
}

fn run_spectrum_identity(config: &ExperimentConfig) -> Result<ExpData> {
    let m = config.m.unwrap_or(3);
    if m < 2 {
        return Err(Error::InvalidParameter("spectrum identity needs m >= 2".into()));
    }
    let steps = config.steps_per_unit;
    let factor = ((m as f64 - 1.0) / m as f64).sqrt();
    let pairs: Vec<(f64, f64)> = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(config.seed, domain::SAMPLES + i as u64);
            let bundle =
                sample_bundle(m, steps, 1.0, BundleMode::ExchangeableNegative, &mut rng)
                    .expect("m >= 2");
            let lks: Vec<f64> =
                (1..=m).map(|k| l_k(&bundle, 1.0, k).expect("k <= m")).collect();
            let first = factor * theta_inv(&lks)[0];
            let mut rng_ref = stream_rng(config.seed, domain::REFERENCE + i as u64);
            let spec = make_traceless(sample_gue_spectrum(m, &mut rng_ref).expect("m >= 1"));
            (first, spec.top())
        })
        .collect();
    let first: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let tops: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut rows = Vec::with_capacity(2 * config.samples);
    for (name, values) in [("theta-first", &first), ("traceless-top", &tops)] {
        for (id, &v) in values.iter().enumerate() {
            rows.push(RawRow {
                experiment_name: config.experiment.clone(),
                n: steps,
                m,
                k: 1,
                sample_id: id,
                statistic: name.into(),
                value: v,
            });
        }
    }
    let (entry, d) = ks_entry("theta-first", &first, "traceless-top", &tops, 1)?;
    let mut failures = Vec::new();
    check_threshold(d, threshold_of(config), "theta-first vs traceless-top", &mut failures);
    let mut params = Map::new();
    params.insert("m".into(), json!(m));
    params.insert("steps_per_unit".into(), json!(steps));
    params.insert("threshold".into(), json!(threshold_of(config)));
    Ok(ExpData { rows, ks: vec![entry], params, failures })
}

// ---- verify ---------------------------------------------------------------

/// Recompute KS and quantile entries from the raw CSV and confirm they
/// match the stored summary to 1e-12. Returns the recomputed summary.
pub fn verify(summary_path: &Path, raw_csv_path: &Path) -> Result<ReportSummary> {
    let summary: ReportSummary = serde_json::from_str(&fs::read_to_string(summary_path)?)?;
    let text = fs::read_to_string(raw_csv_path)?;
    let mut lines = text.lines();
    if lines.next() != Some(RAW_HEADER) {
        return Err(Error::InvalidInput(format!("raw CSV must start with `{RAW_HEADER}`")));
    }
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::InvalidInput(format!(
                "line {}: expected 7 CSV fields, found {}",
                lineno + 2,
                fields.len()
            )));
        }
        let value: f64 = fields[6].parse().map_err(|_| {
            Error::InvalidInput(format!("line {}: bad value field", lineno + 2))
        })?;
        groups.entry(fields[5].to_string()).or_default().push(value);
    }

    let mut recomputed = summary.clone();
    for entry in recomputed.ks.iter_mut() {
        let (a_name, b_name) = entry.statistic.split_once(" vs ").ok_or_else(|| {
            Error::Integrity(format!("ks statistic `{}` is not a pair", entry.statistic))
        })?;
        let a = groups.get(a_name).ok_or_else(|| {
            Error::Integrity(format!("statistic `{a_name}` missing from raw CSV"))
        })?;
        let b = groups.get(b_name).ok_or_else(|| {
            Error::Integrity(format!("statistic `{b_name}` missing from raw CSV"))
        })?;
        let ks = ks_two_sample(
            &EmpiricalDistribution::new(a.clone())?,
            &EmpiricalDistribution::new(b.clone())?,
        )?;
        if ks.n1 != entry.n1 || ks.n2 != entry.n2 {
            return Err(Error::Integrity(format!(
                "sample counts for `{}`: stored {}x{}, recomputed {}x{}",
                entry.statistic, entry.n1, entry.n2, ks.n1, ks.n2
            )));
        }
        if (ks.d - entry.d).abs() > 1e-12 {
            return Err(Error::Integrity(format!(
                "ks D for `{}`: stored {}, recomputed {}",
                entry.statistic, entry.d, ks.d
            )));
        }
        if (ks.p_approx - entry.p).abs() > 1e-12 {
            return Err(Error::Integrity(format!(
                "ks p for `{}`: stored {}, recomputed {}",
                entry.statistic, entry.p, ks.p_approx
            )));
        }
        entry.d = ks.d;
        entry.p = ks.p_approx;
    }
    for (statistic, stored) in recomputed.quantiles.iter_mut() {
        let values = groups.get(statistic).ok_or_else(|| {
            Error::Integrity(format!("statistic `{statistic}` missing from raw CSV"))
        })?;
        let sample = EmpiricalDistribution::new(values.clone())?;
        for (q_text, stored_value) in stored.iter_mut() {
            let q: f64 = q_text.parse().map_err(|_| {
                Error::Integrity(format!("bad quantile key `{q_text}`"))
            })?;
            let recomputed_value = quantiles(&sample, &[q])?[0];
            if (recomputed_value - *stored_value).abs() > 1e-12 {
                return Err(Error::Integrity(format!(
                    "quantile {q_text} of `{statistic}`: stored {stored_value}, \
                     recomputed {recomputed_value}"
                )));
            }
            *stored_value = recomputed_value;
        }
    }
    Ok(recomputed)
}

// ---- svg ------------------------------------------------------------------

fn histogram_svg(statistic: &str, values: &[f64]) -> String {
    let bins = 40usize;
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = 640.0;
    let height = 360.0;
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / span) * bins as f64) as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let peak = counts.iter().cloned().max().unwrap_or(1).max(1) as f64;
    let bar_w = width / bins as f64;
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{}\">\n",
        height + 40.0
    ));
    out.push_str(&format!(
        "<text x=\"8\" y=\"16\" font-family=\"monospace\" font-size=\"13\">{statistic} \
         ({} samples, range [{lo:.3}, {hi:.3}])</text>\n",
        values.len()
    ));
    for (b, &c) in counts.iter().enumerate() {
        let h = height * c as f64 / peak;
        out.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#4477aa\"/>\n",
            b as f64 * bar_w,
            40.0 + height - h,
            bar_w - 1.0,
            h
        ));
    }
    out.push_str("</svg>\n");
    out
}
