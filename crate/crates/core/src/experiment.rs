//! Monte Carlo sweeps of exact MAP recovery over a grid of `(n, p)` cells.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{converse_success_bound, union_bound_failure};
use crate::error::{Error, Result};
use crate::matching::{map_estimate, DEFAULT_MATCH_LIMIT, MAX_MATCH_N};
use crate::model::{
    apply_permutation, channel_to_joint, sample_pair_with, subsample_to_joint, Channel,
    JointEdgeDistribution, Permutation, SubsampleParams,
};
use crate::rng::stream;
use crate::structure::{automorphisms, intersect};

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;

pub const CSV_HEADER: &str = "n,p11,p10,p01,p00,q,trials,successes,rate,lo,hi,theory_ach,theory_conv";

/// One way of writing down an edge law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionSpec {
    Joint(JointEdgeDistribution),
    Subsample { r: f64, s_a: f64, s_b: f64 },
    Channel { r: f64, a: Channel, b: Channel },
}

impl DistributionSpec {
    pub fn resolve(&self) -> Result<JointEdgeDistribution> {
        match self {
            DistributionSpec::Joint(p) => JointEdgeDistribution::new(p.p11, p.p10, p.p01, p.p00),
            DistributionSpec::Subsample { r, s_a, s_b } => {
                subsample_to_joint(&SubsampleParams::new(*r, *s_a, *s_b)?)
            }
            DistributionSpec::Channel { r, a, b } => channel_to_joint(*r, a, b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessConvention {
    /// The tie set is exactly the true permutation.
    #[default]
    StrictTie,
    /// `1/|ties|` when the true permutation is among the ties.
    UniformTie,
}

fn default_trials() -> usize {
    100
}

fn default_limit() -> usize {
    DEFAULT_MATCH_LIMIT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub ns: Vec<usize>,
    pub distributions: Vec<DistributionSpec>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub slack: f64,
    #[serde(default = "default_limit")]
    pub matcher_limit: usize,
    #[serde(default)]
    pub success: SuccessConvention,
    /// Worker threads; `None` uses the global pool. Results do not depend on it.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Also record `|Aut(G_a ∩ G_b)|` per trial.
    #[serde(default)]
    pub compute_automorphisms: bool,
}

impl SweepConfig {
    pub fn new(ns: Vec<usize>, distributions: Vec<DistributionSpec>, trials: usize, base_seed: u64) -> Self {
        Self {
            ns,
            distributions,
            trials,
            base_seed,
            slack: 0.0,
            matcher_limit: DEFAULT_MATCH_LIMIT,
            success: SuccessConvention::StrictTie,
            workers: None,
            compute_automorphisms: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("sweep config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks everything except per-cell capacity, which is reported per cell.
    pub fn validate(&self) -> Result<Vec<JointEdgeDistribution>> {
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        if let Some(n) = self.ns.iter().find(|&&n| n == 0) {
            return Err(Error::InvalidInput(format!("n = {n} must be at least 1")));
        }
        if !(self.slack.is_finite() && self.slack >= 0.0) {
            return Err(Error::InvalidInput(format!("slack = {} must be >= 0", self.slack)));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidInput("workers must be at least 1".into()));
        }
        self.distributions.iter().map(DistributionSpec::resolve).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub cell: usize,
    pub trial: usize,
    /// Success under the configured convention, in `[0, 1]`.
    pub success: f64,
    pub strict_success: bool,
    pub uniform_success: f64,
    pub tie_count: usize,
    pub optimum_delta: usize,
    pub automorphisms: Option<u128>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    pub n: usize,
    pub p: JointEdgeDistribution,
    pub q: f64,
    pub trials: usize,
    /// Sum of per-trial successes under the configured convention.
    pub successes: f64,
    pub rate: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub strict_rate: Option<f64>,
    pub uniform_rate: Option<f64>,
    /// `1 - union_bound_failure(n, q)`.
    pub theory_ach: Option<f64>,
    /// Isolated-vertex ceiling on any deanonymizer (positive correlation).
    pub theory_conv: Option<f64>,
    /// Why the cell has no trials.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub cells: Vec<CellSummary>,
    pub records: Vec<TrialRecord>,
}

impl SweepResult {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("sweep result: {e}")))
    }
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: f64, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let centre = phat + z2 / (2.0 * n);
    let spread = WILSON_Z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    (((centre - spread) / denom).max(0.0), ((centre + spread) / denom).min(1.0))
}

struct Cell {
    n: usize,
    p: JointEdgeDistribution,
}

fn capacity_error(cfg: &SweepConfig, n: usize) -> Option<String> {
    let cap = cfg.matcher_limit.min(MAX_MATCH_N);
    (n > cap).then(|| {
        Error::CapacityExceeded {
            what: "exhaustive MAP search",
            size: n,
            limit: cap,
        }
        .to_string()
    })
}

fn run_trial(cfg: &SweepConfig, cell_id: usize, cell: &Cell, trial: usize) -> Result<TrialRecord> {
    let mut rng = stream(cfg.base_seed, cell_id as u64, trial as u64);
    let (ga, gb) = sample_pair_with(cell.n, &cell.p, &mut rng);
    let truth = Permutation::random(cell.n, &mut rng);
    let gc = apply_permutation(&ga, &truth)?;
    let map = map_estimate(&gc, &gb, &cell.p, cfg.matcher_limit)?;
    let strict = map.strict_success(&truth);
    let uniform = map.uniform_success(&truth);
    let automorphisms = if cfg.compute_automorphisms {
        Some(automorphisms(&intersect(&ga, &gb)?, cfg.matcher_limit.max(cell.n))?.count)
    } else {
        None
    };
    Ok(TrialRecord {
        cell: cell_id,
        trial,
        success: match cfg.success {
            SuccessConvention::StrictTie => f64::from(u8::from(strict)),
            SuccessConvention::UniformTie => uniform,
        },
        strict_success: strict,
        uniform_success: uniform,
        tie_count: map.tie_count(),
        optimum_delta: map.optimum_value,
        automorphisms,
    })
}

fn theory(n: usize, p: &JointEdgeDistribution) -> (Option<f64>, Option<f64>) {
    if n < 3 {
        return (None, None);
    }
    let ach = union_bound_failure(n, p.q().min(1.0)).ok().map(|f| 1.0 - f);
    let conv = if p.p11 * p.p00 > p.p01 * p.p10 {
        converse_success_bound(n, p.p11).ok()
    } else {
        None
    };
    (ach, conv)
}

fn summarize(cfg: &SweepConfig, cell_id: usize, cell: &Cell, records: &[TrialRecord]) -> CellSummary {
    let (theory_ach, theory_conv) = theory(cell.n, &cell.p);
    let mut summary = CellSummary {
        cell: cell_id,
        n: cell.n,
        p: cell.p,
        q: cell.p.q(),
        trials: records.len(),
        successes: 0.0,
        rate: None,
        lo: None,
        hi: None,
        strict_rate: None,
        uniform_rate: None,
        theory_ach,
        theory_conv,
        error: capacity_error(cfg, cell.n),
    };
    if records.is_empty() {
        return summary;
    }
    let t = records.len() as f64;
    summary.successes = records.iter().map(|r| r.success).sum();
    let (lo, hi) = wilson_interval(summary.successes, records.len());
    summary.rate = Some(summary.successes / t);
    summary.lo = Some(lo);
    summary.hi = Some(hi);
    summary.strict_rate = Some(records.iter().filter(|r| r.strict_success).count() as f64 / t);
    summary.uniform_rate = Some(records.iter().map(|r| r.uniform_success).sum::<f64>() / t);
    summary
}

/// Runs every `(cell, trial)` task; cells are ordered `n`-major, then by
/// distribution. Output depends only on the config, never on scheduling.
pub fn run_trials(cfg: &SweepConfig) -> Result<SweepResult> {
    let laws = cfg.validate()?;
    let cells: Vec<Cell> = cfg
        .ns
        .iter()
        .flat_map(|&n| laws.iter().map(move |&p| Cell { n, p }))
        .collect();
    let tasks: Vec<(usize, usize)> = cells
        .iter()
        .enumerate()
        .filter(|(_, c)| capacity_error(cfg, c.n).is_none())
        .flat_map(|(id, _)| (0..cfg.trials).map(move |t| (id, t)))
        .collect();

    let work = || {
        tasks
            .par_iter()
            .map(|&(id, t)| run_trial(cfg, id, &cells[id], t))
            .collect::<Result<Vec<_>>>()
    };
    let records = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };

    let summaries = cells
        .iter()
        .enumerate()
        .map(|(id, cell)| {
            let start = records.partition_point(|r| r.cell < id);
            let end = records.partition_point(|r| r.cell <= id);
            summarize(cfg, id, cell, &records[start..end])
        })
        .collect();
    Ok(SweepResult {
        config: cfg.clone(),
        cells: summaries,
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidInput(format!("unknown format {other:?} (csv or json)"))),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn to_csv(result: &SweepResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in &result.cells {
        let [p11, p10, p01, p00] = c.p.as_array();
        writeln!(
            out,
            "{},{p11},{p10},{p01},{p00},{},{},{},{},{},{},{},{}",
            c.n,
            c.q,
            c.trials,
            c.successes,
            opt(c.rate),
            opt(c.lo),
            opt(c.hi),
            opt(c.theory_ach),
            opt(c.theory_conv)
        )
        .expect("writing to a String");
    }
    out
}

pub fn emit(result: &SweepResult, format: Format) -> String {
    match format {
        Format::Csv => to_csv(result),
        Format::Json => serde_json::to_string_pretty(result).expect("sweep result serializes"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn joint(p11: f64, p10: f64, p01: f64, p00: f64) -> DistributionSpec {
        DistributionSpec::Joint(JointEdgeDistribution::new(p11, p10, p01, p00).unwrap())
    }

    #[test]
    fn config_json_forms() {
        let text = r#"{
            "ns": [4, 6],
            "distributions": [
                {"joint": {"p11": 0.3, "p10": 0.1, "p01": 0.1, "p00": 0.5}},
                {"subsample": {"r": 0.5, "s_a": 1.0, "s_b": 1.0}},
                {"channel": {"r": 0.5, "a": [[1, 0], [0, 1]], "b": [[0.9, 0.1], [0.2, 0.8]]}}
            ],
            "trials": 5,
            "base_seed": 11,
            "success": "uniform_tie"
        }"#;
        let cfg = SweepConfig::from_json(text).unwrap();
        assert_eq!(cfg.matcher_limit, DEFAULT_MATCH_LIMIT);
        assert_eq!(cfg.success, SuccessConvention::UniformTie);
        let laws = cfg.validate().unwrap();
        assert_eq!(laws[1].as_array(), [0.5, 0.0, 0.0, 0.5]);
        assert!((laws[2].p11 - 0.4).abs() < 1e-15 && (laws[2].p01 - 0.05).abs() < 1e-15);
        assert_eq!(SweepConfig::from_json(&cfg.to_json()).unwrap(), cfg);

        assert!(SweepConfig::from_json(r#"{"ns": [4], "distributions": [], "bogus": 1}"#).is_err());
        let bad = r#"{"ns": [4], "distributions": [{"joint": {"p11": 0.5, "p10": 0.5, "p01": 0.5, "p00": 0}}]}"#;
        assert!(SweepConfig::from_json(bad).is_err());
        let mut zero = cfg.clone();
        zero.trials = 0;
        assert!(run_trials(&zero).is_err());
    }

    #[test]
    fn complete_graphs_never_strictly_succeed() {
        let cfg = SweepConfig::new(vec![1, 2, 5, 8], vec![joint(1.0, 0.0, 0.0, 0.0)], 20, 3);
        let res = run_trials(&cfg).unwrap();
        assert_eq!(res.cells[0].rate, Some(1.0));
        for c in &res.cells[1..] {
            assert_eq!(c.rate, Some(0.0), "n={}", c.n);
        }
        assert!(res.records.iter().all(|r| r.tie_count >= 1));
    }

    #[test]
    fn identical_graphs_succeed_iff_asymmetric() {
        let mut cfg = SweepConfig::new(vec![8], vec![joint(0.5, 0.0, 0.0, 0.5)], 40, 21);
        cfg.compute_automorphisms = true;
        let res = run_trials(&cfg).unwrap();
        for r in &res.records {
            let aut = r.automorphisms.unwrap();
            assert_eq!(r.strict_success, aut == 1, "trial {}", r.trial);
            // every automorphism of G is an optimal relabeling
            assert_eq!(r.tie_count as u128, aut);
            assert_eq!(r.optimum_delta, 0);
        }
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let mut cfg = SweepConfig::new(
            vec![4, 6],
            vec![joint(0.3, 0.1, 0.1, 0.5), joint(0.05, 0.45, 0.35, 0.15)],
            30,
            77,
        );
        cfg.workers = Some(1);
        let one = to_csv(&run_trials(&cfg).unwrap());
        cfg.workers = Some(4);
        let four = to_csv(&run_trials(&cfg).unwrap());
        cfg.workers = None;
        let global = to_csv(&run_trials(&cfg).unwrap());
        assert_eq!(one, four);
        assert_eq!(one, global);
        cfg.base_seed = 78;
        assert_ne!(one, to_csv(&run_trials(&cfg).unwrap()));
    }

    #[test]
    fn trial_streams_are_distinct() {
        let cfg = SweepConfig::new(vec![5], vec![joint(0.25, 0.25, 0.25, 0.25)], 1, 5);
        let mut draws = HashSet::new();
        for cell in 0..20u64 {
            for trial in 0..50u64 {
                let mut rng = stream(cfg.base_seed, cell, trial);
                assert!(draws.insert(rand::Rng::gen::<u64>(&mut rng)));
            }
        }
    }

    #[test]
    fn emit_shapes() {
        let empty = run_trials(&SweepConfig::new(vec![], vec![], 5, 0)).unwrap();
        assert_eq!(emit(&empty, Format::Csv), format!("{CSV_HEADER}\n"));

        let mut cfg = SweepConfig::new(vec![5], vec![joint(0.3, 0.1, 0.1, 0.5)], 7, 9);
        cfg.success = SuccessConvention::UniformTie;
        let res = run_trials(&cfg).unwrap();
        let csv = emit(&res, Format::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields.len(), CSV_HEADER.split(',').count());
        let successes: f64 = fields[7].parse().unwrap();
        let rate: f64 = fields[8].parse().unwrap();
        assert!((rate - successes / 7.0).abs() < 1e-10);
        let (lo, hi): (f64, f64) = (fields[9].parse().unwrap(), fields[10].parse().unwrap());
        assert!(lo <= rate && rate <= hi);

        let json = emit(&res, Format::Json);
        let back = SweepResult::from_json(&json).unwrap();
        assert_eq!(back, res);
        assert_eq!(emit(&back, Format::Csv), csv);
    }

    #[test]
    fn capacity_is_reported_per_cell() {
        let mut cfg = SweepConfig::new(vec![4, 9], vec![joint(0.3, 0.1, 0.1, 0.5)], 3, 1);
        cfg.matcher_limit = 8;
        let res = run_trials(&cfg).unwrap();
        assert!(res.cells[0].error.is_none());
        assert_eq!(res.cells[0].trials, 3);
        let big = &res.cells[1];
        assert_eq!((big.n, big.trials, big.rate), (9, 0, None));
        assert!(big.error.as_deref().unwrap().contains("exceeds capacity 8"));
        let row = to_csv(&res).lines().nth(2).unwrap().to_string();
        assert!(row.starts_with("9,") && row.contains(",0,0,,,,"), "{row}");
    }

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(0.0, 10);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.277_532_799_862_386_9).abs() < 1e-12);
        let (lo, hi) = wilson_interval(50.0, 100);
        assert!((lo - 0.403_831_1).abs() < 1e-6 && (hi - 0.596_168_9).abs() < 1e-6);
        assert_eq!(wilson_interval(0.0, 0), (0.0, 1.0));
    }
}
