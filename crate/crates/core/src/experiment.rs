//! Experiment driver: seeded scaling sweeps over instance sizes,
//! log-log exponent fitting, and CSV / table / SVG emission. Runs are
//! deterministic functions of the config; independent (size, trial)
//! cells may execute on a small thread pool capped by QMITM_THREADS.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attacks::{run_attack, Algorithm, AttackError};
use crate::cost::{gain_table, ke2_quantum_cost, ke4_quantum_cost, CostError, GainRow};
use crate::oracle::{generate_family, plant_instance, OracleError, QueryLedger};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error("csv parse error: {0}")]
    CsvParse(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Rule deriving the block space from the key count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MRule {
    /// M = N
    N,
    /// M = N^2
    NSquared,
    /// M = N^3
    NCubed,
    Fixed(usize),
}

impl MRule {
    pub fn block_space(self, n: usize) -> Option<usize> {
        match self {
            MRule::N => Some(n),
            MRule::NSquared => n.checked_mul(n),
            MRule::NCubed => n.checked_mul(n)?.checked_mul(n),
            MRule::Fixed(m) => Some(m),
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "n" => Some(MRule::N),
            "n2" => Some(MRule::NSquared),
            "n3" => Some(MRule::NCubed),
            other => other
                .strip_prefix("fixed:")
                .and_then(|v| v.parse().ok())
                .map(MRule::Fixed),
        }
    }
}

/// What a scaling sweep runs: a real attack or a closed-form model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingAlgorithm {
    Exhaustive,
    Mitm2,
    Mitm4,
    Dissect4,
    Ke2Cost,
    Ke4Cost,
}

impl ScalingAlgorithm {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "exhaustive" => Some(Self::Exhaustive),
            "mitm2" => Some(Self::Mitm2),
            "mitm4" => Some(Self::Mitm4),
            "dissect4" => Some(Self::Dissect4),
            "ke2_cost" => Some(Self::Ke2Cost),
            "ke4_cost" => Some(Self::Ke4Cost),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Exhaustive => "exhaustive",
            Self::Mitm2 => "mitm2",
            Self::Mitm4 => "mitm4",
            Self::Dissect4 => "dissect4",
            Self::Ke2Cost => "ke2_cost",
            Self::Ke4Cost => "ke4_cost",
        }
    }

    fn as_attack(self) -> Option<Algorithm> {
        match self {
            Self::Exhaustive => Some(Algorithm::Exhaustive),
            Self::Mitm2 => Some(Algorithm::Mitm2),
            Self::Mitm4 => Some(Algorithm::Mitm4),
            Self::Dissect4 => Some(Algorithm::Dissect4),
            _ => None,
        }
    }
}

/// A seeded, self-describing sweep definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub seed: u64,
    pub algorithm: ScalingAlgorithm,
    pub sizes: Vec<usize>,
    #[serde(default = "default_m_rule")]
    pub m_rule: MRule,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
}

fn default_schema_version() -> u32 {
    CONFIG_SCHEMA_VERSION
}

fn default_m_rule() -> MRule {
    MRule::N
}

fn default_trials() -> usize {
    3
}

fn default_pairs() -> usize {
    4
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(ExperimentError::BadConfig(format!(
                "schema_version {} unsupported (expected {})",
                self.schema_version, CONFIG_SCHEMA_VERSION
            )));
        }
        if self.sizes.is_empty() {
            return Err(ExperimentError::BadConfig("sizes must be non-empty".into()));
        }
        if !self.sizes.windows(2).all(|w| w[0] < w[1]) {
            return Err(ExperimentError::BadConfig(
                "sizes must be strictly increasing".into(),
            ));
        }
        if self.trials < 1 {
            return Err(ExperimentError::BadConfig("trials must be >= 1".into()));
        }
        if self.pairs < 1 {
            return Err(ExperimentError::BadConfig("pairs must be >= 1".into()));
        }
        Ok(())
    }
}

/// Measured points of one resource against N with the fitted power law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSeries {
    pub measure: String,
    pub points: Vec<(usize, f64)>,
    /// Slope of the least-squares line on (log N, log cost); absent
    /// when some point is non-positive (nothing to fit in log space).
    pub fitted_exponent: Option<f64>,
    pub r_squared: Option<f64>,
}

/// Full outcome of a sweep: per-measure series keyed by measure name.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    pub config: ExperimentConfig,
    pub series: BTreeMap<String, ScalingSeries>,
}

impl ScalingReport {
    pub fn series_named(&self, measure: &str) -> Option<&ScalingSeries> {
        self.series.get(measure)
    }
}

/// Least-squares fit of log(cost) = e * log(n) + b; returns the
/// exponent e and r^2.
pub fn fit_power_law(points: &[(usize, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 || points.iter().any(|&(n, c)| n == 0 || c <= 0.0) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|&(n, c)| ((n as f64).ln(), c.ln()))
        .collect();
    let count = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = logs
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let ss_tot: f64 = logs.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Some((slope, r_squared))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Stateless per-cell seed: decorrelates (seed, size, trial) cells.
fn cell_seed(seed: u64, n: usize, trial: usize) -> u64 {
    let mut x = seed
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add((n as u64) << 32)
        .wrapping_add(trial as u64 + 1);
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Plants a fresh instance for one cell and runs the attack on it.
/// The key-extraction problems promise a unique solution; a sampled
/// instance that happens to admit a second consistent tuple (likely at
/// M = N and depth 4, where the expected number of impostors is
/// (N/M)^4) is not a valid problem instance, so the cell resamples
/// with a salted seed until the promise holds.
pub fn run_attack_cell(
    algo: Algorithm,
    n: usize,
    m: usize,
    pairs: usize,
    seed: u64,
) -> Result<QueryLedger, ExperimentError> {
    let depth = algo.depth();
    let pairs = if depth == 4 { 4 } else { pairs };
    let mut last_ambiguous = None;
    for retry in 0..64u64 {
        let attempt_seed = seed ^ retry.wrapping_mul(0xa076_1d64_78bd_642f);
        let family = generate_family(attempt_seed, n, m)?;
        let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed ^ 0x5eed);
        let keys: Vec<usize> = (0..depth).map(|_| rng.gen_range(0..n)).collect();
        let mut plaintexts = Vec::with_capacity(pairs);
        while plaintexts.len() < pairs {
            let p = rng.gen_range(0..m as u32);
            if !plaintexts.contains(&p) {
                plaintexts.push(p);
            }
        }
        let instance = plant_instance(family, depth, &keys, &plaintexts)?;
        match run_attack(&instance, algo) {
            Ok(result) => return Ok(result.ledger),
            Err(AttackError::AmbiguousKey) => {
                last_ambiguous = Some(AttackError::AmbiguousKey);
                continue;
            }
            Err(other) => return Err(other.into()),
        }
    }
    Err(last_ambiguous.unwrap_or(AttackError::NoKeyFound).into())
}

fn thread_budget() -> usize {
    std::env::var("QMITM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|v| v.get())
                .unwrap_or(1)
        })
}

/// Executes the sweep: real attacks record ledger medians over trials,
/// cost models evaluate their closed forms; each measure is fitted on
/// (log N, log cost).
pub fn run_scaling(config: &ExperimentConfig) -> Result<ScalingReport, ExperimentError> {
    config.validate()?;
    let measures = ["queries", "time_units", "peak_memory_units"];

    let per_size: Vec<Vec<(f64, f64, f64)>> = match config.algorithm.as_attack() {
        Some(algo) => {
            let cells: Vec<(usize, usize)> = config
                .sizes
                .iter()
                .flat_map(|&n| (0..config.trials).map(move |t| (n, t)))
                .collect();
            let results: Vec<Option<Result<(usize, QueryLedger), ExperimentError>>> =
                (0..cells.len()).map(|_| None).collect();
            let results = Mutex::new(results);
            let next = AtomicUsize::new(0);
            let workers = thread_budget().min(cells.len()).max(1);

            std::thread::scope(|scope| {
                for _ in 0..workers {
                    scope.spawn(|| loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= cells.len() {
                            break;
                        }
                        let (n, trial) = cells[i];
                        let outcome = config
                            .m_rule
                            .block_space(n)
                            .ok_or_else(|| {
                                ExperimentError::BadConfig("block space overflow".into())
                            })
                            .and_then(|m| {
                                run_attack_cell(
                                    algo,
                                    n,
                                    m,
                                    config.pairs,
                                    cell_seed(config.seed, n, trial),
                                )
                            })
                            .map(|ledger| (n, ledger));
                        results.lock().unwrap()[i] = Some(outcome);
                    });
                }
            });

            let results = results.into_inner().unwrap();
            let mut by_size: BTreeMap<usize, Vec<(f64, f64, f64)>> = BTreeMap::new();
            for slot in results {
                let (n, ledger) = slot.expect("cell not executed")?;
                by_size.entry(n).or_default().push((
                    ledger.total_queries() as f64,
                    ledger.time_units as f64,
                    ledger.peak_memory_units as f64,
                ));
            }
            config
                .sizes
                .iter()
                .map(|n| by_size.remove(n).unwrap_or_default())
                .collect()
        }
        None => {
            let mut all = Vec::with_capacity(config.sizes.len());
            for &n in &config.sizes {
                let m = config
                    .m_rule
                    .block_space(n)
                    .ok_or_else(|| ExperimentError::BadConfig("block space overflow".into()))?;
                let est = match config.algorithm {
                    ScalingAlgorithm::Ke2Cost => ke2_quantum_cost(n)?,
                    ScalingAlgorithm::Ke4Cost => ke4_quantum_cost(n, m)?,
                    _ => unreachable!(),
                };
                all.push(vec![(est.queries, est.time_units, est.memory_units)]);
            }
            all
        }
    };

    let mut series = BTreeMap::new();
    for (idx, name) in measures.iter().enumerate() {
        let points: Vec<(usize, f64)> = config
            .sizes
            .iter()
            .zip(&per_size)
            .map(|(&n, trials)| {
                let mut values: Vec<f64> = trials
                    .iter()
                    .map(|t| match idx {
                        0 => t.0,
                        1 => t.1,
                        _ => t.2,
                    })
                    .collect();
                (n, median(&mut values))
            })
            .collect();
        let fit = fit_power_law(&points);
        series.insert(
            name.to_string(),
            ScalingSeries {
                measure: name.to_string(),
                points,
                fitted_exponent: fit.map(|f| f.0),
                r_squared: fit.map(|f| f.1),
            },
        );
    }
    Ok(ScalingReport {
        config: config.clone(),
        series,
    })
}

// --- emission --------------------------------------------------------------

/// CSV of the measured medians, one row per size.
pub fn scaling_to_csv(report: &ScalingReport) -> String {
    let mut out = String::from("n,queries,time_units,peak_memory_units\n");
    let queries = &report.series["queries"].points;
    let time = &report.series["time_units"].points;
    let memory = &report.series["peak_memory_units"].points;
    for i in 0..queries.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            queries[i].0, queries[i].1, time[i].1, memory[i].1
        ));
    }
    out
}

/// Parses the output of [`scaling_to_csv`] back into per-measure points.
#[allow(clippy::type_complexity)]
pub fn scaling_from_csv(
    text: &str,
) -> Result<Vec<(usize, f64, f64, f64)>, ExperimentError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| ExperimentError::CsvParse("empty csv".into()))?;
    if header != "n,queries,time_units,peak_memory_units" {
        return Err(ExperimentError::CsvParse(format!(
            "unexpected header `{}`",
            header
        )));
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(ExperimentError::CsvParse(format!("bad row `{}`", line)));
        }
        rows.push((
            fields[0]
                .parse()
                .map_err(|e| ExperimentError::CsvParse(format!("{}", e)))?,
            fields[1]
                .parse()
                .map_err(|e| ExperimentError::CsvParse(format!("{}", e)))?,
            fields[2]
                .parse()
                .map_err(|e| ExperimentError::CsvParse(format!("{}", e)))?,
            fields[3]
                .parse()
                .map_err(|e| ExperimentError::CsvParse(format!("{}", e)))?,
        ));
    }
    Ok(rows)
}

/// Human-readable summary with the fitted exponents.
pub fn scaling_to_table(report: &ScalingReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "algorithm: {}   seed: {}   trials: {}\n",
        report.config.algorithm.name(),
        report.config.seed,
        report.config.trials
    ));
    out.push_str(&scaling_to_csv(report).replace(',', "\t"));
    for series in report.series.values() {
        match (series.fitted_exponent, series.r_squared) {
            (Some(e), Some(r2)) => out.push_str(&format!(
                "{}: exponent {:.4} (r^2 = {:.6})\n",
                series.measure, e, r2
            )),
            _ => out.push_str(&format!("{}: no positive data to fit\n", series.measure)),
        }
    }
    out
}

/// CSV of a gain table, exponents and gains as exact rationals.
pub fn gains_to_csv(rows: &[GainRow]) -> String {
    let mut out = String::from(
        "attack,classical_time_exp,quantum_time_exp,time_gain,classical_ts_exp,quantum_ts_exp,ts_gain\n",
    );
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.attack_name,
            row.classical_time_exp,
            row.quantum_time_exp,
            row.time_gain,
            row.classical_ts_exp,
            row.quantum_ts_exp,
            row.ts_gain
        ));
    }
    out
}

/// Fixed-width gain table matching the published layout.
pub fn gains_to_table(rows: &[GainRow]) -> String {
    let mut out = format!("{:<24} {:>10} {:>12}\n", "Attack", "Time", "Time-space");
    for row in rows {
        out.push_str(&format!(
            "{:<24} {:>10} {:>12}\n",
            row.attack_name,
            row.time_gain.to_string(),
            row.ts_gain.to_string()
        ));
    }
    out
}

/// Convenience wrapper: the gain table for a depth in either format.
pub fn emit_gains(depth: usize, csv: bool) -> Result<String, ExperimentError> {
    let rows = gain_table(depth)?;
    Ok(if csv {
        gains_to_csv(&rows)
    } else {
        gains_to_table(&rows)
    })
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Self-contained log-log SVG scatter plot with the fitted line.
pub fn scaling_to_svg(report: &ScalingReport, measure: &str) -> Option<String> {
    let series = report.series.get(measure)?;
    let positive: Vec<(f64, f64)> = series
        .points
        .iter()
        .filter(|&&(_, c)| c > 0.0)
        .map(|&(n, c)| ((n as f64).ln(), c.ln()))
        .collect();
    if positive.len() < 2 {
        return None;
    }
    let (width, height, margin) = (640.0, 480.0, 60.0);
    let min_x = positive.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let max_x = positive.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let min_y = positive.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max_y = positive.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
    let sx = (width - 2.0 * margin) / span(min_x, max_x);
    let sy = (height - 2.0 * margin) / span(min_y, max_y);
    let map = |x: f64, y: f64| {
        (
            margin + (x - min_x) * sx,
            height - margin - (y - min_y) * sy,
        )
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
        w = width,
        h = height
    ));
    svg.push_str(&format!(
        "<title>{} vs N ({})</title>\n",
        xml_escape(measure),
        xml_escape(report.config.algorithm.name())
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
        width, height
    ));
    // axes
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = margin,
        b = height - margin,
        r = width - margin,
        t = margin
    ));
    // fitted line across the x range
    if let (Some(exp), Some(_)) = (series.fitted_exponent, series.r_squared) {
        let mean_x = positive.iter().map(|p| p.0).sum::<f64>() / positive.len() as f64;
        let mean_y = positive.iter().map(|p| p.1).sum::<f64>() / positive.len() as f64;
        let intercept = mean_y - exp * mean_x;
        let (x1, y1) = map(min_x, exp * min_x + intercept);
        let (x2, y2) = map(max_x, exp * max_x + intercept);
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"steelblue\" stroke-width=\"2\"/>\n",
            x1, y1, x2, y2
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"14\">slope {:.4}</text>\n",
            margin + 10.0,
            margin + 20.0,
            exp
        ));
    }
    for &(x, y) in &positive {
        let (px, py) = map(x, y);
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"crimson\"/>\n",
            px, py
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"14\">log N</text>\n",
        width / 2.0,
        height - margin / 3.0
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"14\" transform=\"rotate(-90 {x} {y})\">log {}</text>\n",
        margin / 3.0,
        height / 2.0,
        xml_escape(measure),
        x = margin / 3.0,
        y = height / 2.0
    ));
    svg.push_str("</svg>\n");
    Some(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_is_recovered() {
        let points: Vec<(usize, f64)> = (6..=12)
            .map(|log_n| {
                let n = 1usize << log_n;
                (n, (n as f64).powf(2.0 / 3.0))
            })
            .collect();
        let (exp, r2) = fit_power_law(&points).unwrap();
        assert!((exp - 2.0 / 3.0).abs() < 1e-6, "exponent {}", exp);
        assert!((r2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_fits_are_rejected() {
        assert!(fit_power_law(&[(4, 1.0)]).is_none());
        assert!(fit_power_law(&[(4, 0.0), (8, 1.0)]).is_none());
        assert!(fit_power_law(&[(4, 1.0), (4, 2.0)]).is_none());
    }

    fn quick_config(algorithm: ScalingAlgorithm, sizes: &[usize]) -> ExperimentConfig {
        ExperimentConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            seed: 11,
            algorithm,
            sizes: sizes.to_vec(),
            m_rule: MRule::N,
            trials: 2,
            pairs: 4,
        }
    }

    #[test]
    fn config_validation() {
        let mut config = quick_config(ScalingAlgorithm::Mitm2, &[8, 16]);
        assert!(config.validate().is_ok());
        config.sizes = vec![16, 8];
        assert!(config.validate().is_err());
        config.sizes = vec![8, 16];
        config.trials = 0;
        assert!(config.validate().is_err());
        config.trials = 1;
        config.schema_version = 99;
        assert!(config.validate().is_err());
    }

    #[test]
    fn mitm2_sweep_fits_linear_exponent() {
        let config = quick_config(ScalingAlgorithm::Mitm2, &[64, 128, 256, 512]);
        let report = run_scaling(&config).unwrap();
        let queries = report.series_named("queries").unwrap();
        let exp = queries.fitted_exponent.unwrap();
        assert!((exp - 1.0).abs() < 0.05, "exponent {}", exp);
        let memory = report.series_named("peak_memory_units").unwrap();
        let mem_exp = memory.fitted_exponent.unwrap();
        assert!((mem_exp - 1.0).abs() < 0.05, "memory exponent {}", mem_exp);
    }

    #[test]
    fn cost_model_sweep_hits_paper_exponent() {
        let sizes: Vec<usize> = (8..=16).map(|l| 1usize << l).collect();
        let config = ExperimentConfig {
            m_rule: MRule::N,
            trials: 1,
            ..quick_config(ScalingAlgorithm::Ke4Cost, &sizes)
        };
        let report = run_scaling(&config).unwrap();
        let exp = report
            .series_named("time_units")
            .unwrap()
            .fitted_exponent
            .unwrap();
        assert!((exp - 7.0 / 6.0).abs() < 0.05, "exponent {}", exp);
    }

    #[test]
    fn sweep_is_deterministic() {
        let config = quick_config(ScalingAlgorithm::Dissect4, &[8, 16]);
        let a = scaling_to_csv(&run_scaling(&config).unwrap());
        let b = scaling_to_csv(&run_scaling(&config).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip() {
        let config = quick_config(ScalingAlgorithm::Exhaustive, &[8, 16, 32]);
        let report = run_scaling(&config).unwrap();
        let csv = scaling_to_csv(&report);
        let rows = scaling_from_csv(&csv).unwrap();
        assert_eq!(rows.len(), 3);
        for (row, &n) in rows.iter().zip(&config.sizes) {
            assert_eq!(row.0, n);
            assert_eq!(row.1, report.series["queries"].points[rows.iter().position(|r| r.0 == n).unwrap()].1);
        }
        // re-emit is byte-identical
        let mut again = String::from("n,queries,time_units,peak_memory_units\n");
        for row in &rows {
            again.push_str(&format!("{},{},{},{}\n", row.0, row.1, row.2, row.3));
        }
        assert_eq!(csv, again);
    }

    #[test]
    fn gain_emission_formats() {
        let csv = emit_gains(4, true).unwrap();
        assert!(csv.starts_with(
            "attack,classical_time_exp,quantum_time_exp,time_gain,classical_ts_exp,quantum_ts_exp,ts_gain\n"
        ));
        assert!(csv.contains("Dissection,2,7/6,12/7,3,11/6,18/11"));

        let table = emit_gains(2, false).unwrap();
        assert!(table.contains("MITM"));
        assert!(table.contains("3/2"));
    }

    #[test]
    fn svg_is_emitted_for_positive_series() {
        let config = quick_config(ScalingAlgorithm::Mitm2, &[16, 32, 64]);
        let report = run_scaling(&config).unwrap();
        let svg = scaling_to_svg(&report, "queries").unwrap();
        assert!(svg.starts_with("<?xml"));
        assert!(svg.contains("<svg"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
