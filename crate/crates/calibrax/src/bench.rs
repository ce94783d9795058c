//! Benchmark harness: metric-vs-exact-TCE sweeps, curve-recovery EAD
//! comparisons against a histogram-binning baseline, and the Wilcoxon
//! signed-rank test used to compare arms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibrators::fit_histogram_binning;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimator::{estimate_curve, EstimatorConfig};
use crate::metrics::{
    ece_bin, ece_debiased, ece_sweep, ks_error, tce_bpm, tce_exact, MetricConfig,
};
use crate::numeric::normal_cdf;
use crate::prior::TrueDistributionSpec;
use crate::rng::mix_seed;
use crate::simulator::{simulate, SimulationRequest};
use crate::Real;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Histogram-binning bin range averaged into the baseline curve arm.
pub const HB_BIN_RANGE: std::ops::RangeInclusive<usize> = 10..=50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricName {
    TceBpm,
    EceBin,
    EceDebiased,
    EceSweep,
    Ks,
}

impl MetricName {
    pub fn all() -> [MetricName; 5] {
        [
            MetricName::TceBpm,
            MetricName::EceBin,
            MetricName::EceDebiased,
            MetricName::EceSweep,
            MetricName::Ks,
        ]
    }

    pub fn parse(name: &str) -> Option<MetricName> {
        match name {
            "tce-bpm" | "tce_bpm" | "tce" => Some(MetricName::TceBpm),
            "ece-bin" | "ece_bin" | "ece" => Some(MetricName::EceBin),
            "ece-debiased" | "ece_debiased" => Some(MetricName::EceDebiased),
            "ece-sweep" | "ece_sweep" => Some(MetricName::EceSweep),
            "ks" => Some(MetricName::Ks),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub specs: Vec<(String, TrueDistributionSpec)>,
    pub sizes: Vec<usize>,
    pub runs: usize,
    pub base_seed: u64,
    pub metrics: Vec<MetricName>,
    pub baseline_bins: usize,
}

impl BenchmarkConfig {
    pub fn new(specs: Vec<(String, TrueDistributionSpec)>) -> Self {
        BenchmarkConfig {
            specs,
            sizes: (1..=10).map(|i| i * 500).collect(),
            runs: 100,
            base_seed: 0,
            metrics: MetricName::all().to_vec(),
            baseline_bins: 15,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.specs.is_empty() || self.sizes.is_empty() || self.metrics.is_empty() {
            return Err(Error::InvalidParameter(
                "benchmark needs at least one spec, size and metric".into(),
            ));
        }
        if self.runs == 0 {
            return Err(Error::InvalidParameter("runs must be >= 1".into()));
        }
        Ok(())
    }
}

/// Seed for one trial, independent of execution order.
pub fn trial_seed(base: u64, spec_index: usize, size_index: usize, run: usize) -> u64 {
    mix_seed(&[base, spec_index as u64, size_index as u64, run as u64])
}

/// Outcomes of the `runs` trials of one cell: successful values ordered by
/// run index, plus the runs that failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmStats {
    pub values: Vec<Real>,
    pub failed_runs: Vec<usize>,
    pub mean: Real,
    pub std: Real,
}

impl ArmStats {
    fn from_trials(trials: &[(usize, Result<Real>)]) -> ArmStats {
        let mut values = Vec::new();
        let mut failed_runs = Vec::new();
        for (run, r) in trials {
            match r {
                Ok(v) => values.push(*v),
                Err(_) => failed_runs.push(*run),
            }
        }
        let (mean, std) = mean_std(&values);
        ArmStats {
            values,
            failed_runs,
            mean,
            std,
        }
    }
}

fn mean_std(values: &[Real]) -> (Real, Real) {
    if values.is_empty() {
        return (Real::NAN, Real::NAN);
    }
    let n = values.len() as Real;
    let mean = values.iter().sum::<Real>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<Real>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCell {
    pub spec: String,
    pub size: usize,
    pub metric: MetricName,
    pub stats: ArmStats,
    /// Exact TCE of the generating spec.
    pub tce_reference: Real,
    /// |mean - tce_reference|.
    pub gap: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum PValue {
    Value { p: Real },
    AllZeroDifferences,
    InsufficientN { nonzero: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EadCell {
    pub spec: String,
    pub size: usize,
    pub ours: ArmStats,
    pub histogram: ArmStats,
    pub p_value: PValue,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub kind: String,
    pub config: BenchmarkConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub metric_cells: Vec<MetricCell>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ead_cells: Vec<EadCell>,
}

fn compute_metric(
    metric: MetricName,
    dataset: &Dataset,
    metric_config: &MetricConfig,
    est_config: &EstimatorConfig,
) -> Result<Real> {
    match metric {
        MetricName::TceBpm => tce_bpm(dataset, est_config, metric_config),
        MetricName::EceBin => ece_bin(dataset, metric_config),
        MetricName::EceDebiased => ece_debiased(dataset, metric_config),
        MetricName::EceSweep => ece_sweep(dataset, metric_config.p),
        MetricName::Ks => ks_error(dataset),
    }
}

/// Metric-accuracy protocol: per (spec, size, metric), mean/std over seeded
/// runs plus the gap to the spec's exact TCE.
pub fn run_metric_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    config.validate()?;
    let metric_config = MetricConfig {
        bins: config.baseline_bins,
        ..MetricConfig::default()
    };
    let est_config = EstimatorConfig::default();
    let mut cells = Vec::new();
    for (si, (name, spec)) in config.specs.iter().enumerate() {
        let tce_reference = tce_exact(spec, metric_config.p, metric_config.quadrature_points)?;
        for (zi, &size) in config.sizes.iter().enumerate() {
            // one simulation per run, every metric computed on it
            let per_run: Vec<(usize, Vec<Result<Real>>)> = (0..config.runs)
                .into_par_iter()
                .map(|run| {
                    let seed = trial_seed(config.base_seed, si, zi, run);
                    let values = match simulate(&SimulationRequest { spec: *spec, n: size, seed }) {
                        Ok(d) => config
                            .metrics
                            .iter()
                            .map(|&m| compute_metric(m, &d, &metric_config, &est_config))
                            .collect(),
                        Err(e) => {
                            let msg = e.to_string();
                            config
                                .metrics
                                .iter()
                                .map(|_| Err(Error::InvalidParameter(msg.clone())))
                                .collect()
                        }
                    };
                    (run, values)
                })
                .collect();
            for (mi, &metric) in config.metrics.iter().enumerate() {
                let trials: Vec<(usize, Result<Real>)> = per_run
                    .iter()
                    .map(|(run, values)| {
                        (
                            *run,
                            values[mi]
                                .as_ref()
                                .map(|&v| v)
                                .map_err(|e| Error::InvalidParameter(e.to_string())),
                        )
                    })
                    .collect();
                let stats = ArmStats::from_trials(&trials);
                let gap = (stats.mean - tce_reference).abs();
                cells.push(MetricCell {
                    spec: name.clone(),
                    size,
                    metric,
                    stats,
                    tce_reference,
                    gap,
                });
            }
        }
    }
    Ok(BenchmarkReport {
        schema_version: REPORT_SCHEMA_VERSION,
        kind: "metrics".into(),
        config: config.clone(),
        metric_cells: cells,
        ead_cells: Vec::new(),
    })
}

/// EAD on the evaluation grid between the true curve and the pointwise mean
/// of histogram-binning step curves over the 10..=50 bin range.
pub fn histogram_mean_curve_ead(dataset: &Dataset, spec: &TrueDistributionSpec) -> Result<Real> {
    let mut grid_sum = vec![0.0; 1001];
    let mut arms = 0usize;
    for bins in HB_BIN_RANGE {
        if bins > dataset.len() {
            break;
        }
        let map = fit_histogram_binning(dataset, bins)?;
        for (i, acc) in grid_sum.iter_mut().enumerate() {
            *acc += map.eval(i as Real / 1000.0)?;
        }
        arms += 1;
    }
    if arms == 0 {
        return Err(Error::InsufficientData(
            "dataset smaller than the smallest histogram bin count".into(),
        ));
    }
    let mut total = 0.0;
    for (i, &sum) in grid_sum.iter().enumerate() {
        let s = i as Real / 1000.0;
        total += (sum / arms as Real - spec.curve_value(s)?).abs();
    }
    Ok(total / 1000.0)
}

/// Curve-recovery protocol: EAD of the estimator vs the
/// histogram-binning mean curve, with a Wilcoxon signed-rank comparison.
pub fn run_ead_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    config.validate()?;
    let est_config = EstimatorConfig::default();
    let mut cells = Vec::new();
    for (si, (name, spec)) in config.specs.iter().enumerate() {
        for (zi, &size) in config.sizes.iter().enumerate() {
            let per_run: Vec<(usize, Result<Real>, Result<Real>)> = (0..config.runs)
                .into_par_iter()
                .map(|run| {
                    let seed = trial_seed(config.base_seed, si, zi, run);
                    match simulate(&SimulationRequest { spec: *spec, n: size, seed }) {
                        Ok(d) => {
                            let ours = estimate_curve(&d, &est_config)
                                .and_then(|est| crate::metrics::ead_to_spec(&est.params, spec));
                            let hb = histogram_mean_curve_ead(&d, spec);
                            (run, ours, hb)
                        }
                        Err(e) => {
                            let msg = e.to_string();
                            (
                                run,
                                Err(Error::InvalidParameter(msg.clone())),
                                Err(Error::InvalidParameter(msg)),
                            )
                        }
                    }
                })
                .collect();
            let ours_trials: Vec<(usize, Result<Real>)> = per_run
                .iter()
                .map(|(run, o, _)| (*run, o.as_ref().map(|&v| v).map_err(clone_err)))
                .collect();
            let hb_trials: Vec<(usize, Result<Real>)> = per_run
                .iter()
                .map(|(run, _, h)| (*run, h.as_ref().map(|&v| v).map_err(clone_err)))
                .collect();
            // paired p-value over runs where both arms succeeded
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (_, o, h) in &per_run {
                if let (Ok(a), Ok(b)) = (o, h) {
                    xs.push(*a);
                    ys.push(*b);
                }
            }
            let p_value = match wilcoxon_signed_rank(&xs, &ys) {
                Ok(p) => PValue::Value { p },
                Err(Error::AllZeroDifferences) => PValue::AllZeroDifferences,
                Err(Error::InsufficientData(_)) => PValue::InsufficientN {
                    nonzero: xs
                        .iter()
                        .zip(&ys)
                        .filter(|(a, b)| a != b)
                        .count(),
                },
                Err(e) => return Err(e),
            };
            cells.push(EadCell {
                spec: name.clone(),
                size,
                ours: ArmStats::from_trials(&ours_trials),
                histogram: ArmStats::from_trials(&hb_trials),
                p_value,
            });
        }
    }
    Ok(BenchmarkReport {
        schema_version: REPORT_SCHEMA_VERSION,
        kind: "ead".into(),
        config: config.clone(),
        metric_cells: Vec::new(),
        ead_cells: cells,
    })
}

fn clone_err(e: &Error) -> Error {
    Error::InvalidParameter(e.to_string())
}

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped; needs at least 5 nonzero pairs. Exact enumeration over sign
/// assignments for n <= 12, normal approximation with tie and continuity
/// corrections above.
pub fn wilcoxon_signed_rank(xs: &[Real], ys: &[Real]) -> Result<Real> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParameter(format!(
            "paired samples of unequal length: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    let diffs: Vec<Real> = xs
        .iter()
        .zip(ys)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Err(Error::AllZeroDifferences);
    }
    if diffs.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "wilcoxon needs >= 5 nonzero differences, got {}",
            diffs.len()
        )));
    }
    let n = diffs.len();
    // average ranks of |d|
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diffs[a].abs().partial_cmp(&diffs[b].abs()).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        let avg = (i + j) as Real / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    let w_plus: Real = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total: Real = ranks.iter().sum();
    let w_small = w_plus.min(total - w_plus);

    if n <= 12 {
        // exact: enumerate all sign assignments of the ranks
        let mut extreme = 0u64;
        for mask in 0u64..(1 << n) {
            let mut wp = 0.0;
            for (k, &r) in ranks.iter().enumerate() {
                if (mask >> k) & 1 == 1 {
                    wp += r;
                }
            }
            if wp.min(total - wp) <= w_small + 1e-9 {
                extreme += 1;
            }
        }
        return Ok((extreme as Real / (1u64 << n) as Real).min(1.0));
    }

    let nf = n as Real;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0;
    // tie correction: subtract (t^3 - t)/48 per tie group
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        let t = (j - i + 1) as Real;
        var -= (t * t * t - t) / 48.0;
        i = j + 1;
    }
    if var <= 0.0 {
        return Err(Error::NonFinite("wilcoxon variance collapsed".into()));
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    Ok((2.0 * (1.0 - normal_cdf(z))).clamp(Real::MIN_POSITIVE, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::BetaParams;

    fn small_config(names: &[&str], sizes: &[usize], runs: usize) -> BenchmarkConfig {
        let specs = names
            .iter()
            .map(|&n| (n.to_string(), TrueDistributionSpec::builtin(n).unwrap()))
            .collect();
        BenchmarkConfig {
            sizes: sizes.to_vec(),
            runs,
            base_seed: 11,
            ..BenchmarkConfig::new(specs)
        }
    }

    #[test]
    fn metric_benchmark_accounting_single_trial() {
        let mut config = small_config(&["D1"], &[500], 1);
        config.metrics = vec![MetricName::EceBin, MetricName::Ks];
        let report = run_metric_benchmark(&config).unwrap();
        assert_eq!(report.metric_cells.len(), 2);
        for cell in &report.metric_cells {
            assert_eq!(cell.stats.values.len() + cell.stats.failed_runs.len(), 1);
            assert_eq!(cell.stats.values.len(), 1);
            assert_eq!(cell.stats.std, 0.0);
        }
        assert_eq!(report.schema_version, REPORT_SCHEMA_VERSION);
    }

    #[test]
    fn metric_benchmark_calibrated_null() {
        let spec = TrueDistributionSpec::identity(BetaParams::new(2.0, 2.0).unwrap());
        let mut config = BenchmarkConfig::new(vec![("identity".into(), spec)]);
        config.sizes = vec![5000];
        config.runs = 5;
        config.base_seed = 3;
        let report = run_metric_benchmark(&config).unwrap();
        for cell in &report.metric_cells {
            assert!(cell.stats.failed_runs.is_empty(), "{:?}", cell.metric);
            assert!(cell.stats.mean <= 0.02, "{:?}: {}", cell.metric, cell.stats.mean);
        }
    }

    #[test]
    fn aggregates_recompute_from_trials() {
        let config = small_config(&["D3"], &[600], 4);
        let report = run_metric_benchmark(&config).unwrap();
        for cell in &report.metric_cells {
            let (mean, std) = mean_std(&cell.stats.values);
            assert_eq!(mean.to_bits(), cell.stats.mean.to_bits());
            assert_eq!(std.to_bits(), cell.stats.std.to_bits());
        }
    }

    #[test]
    fn parallel_matches_fresh_run() {
        // determinism across invocations (rayon scheduling must not matter)
        let config = small_config(&["D2"], &[700], 6);
        let a = run_ead_benchmark(&config).unwrap();
        let b = run_ead_benchmark(&config).unwrap();
        assert_eq!(a.ead_cells, b.ead_cells);
        let c = run_metric_benchmark(&config).unwrap();
        let d = run_metric_benchmark(&config).unwrap();
        assert_eq!(c.metric_cells, d.metric_cells);
    }

    #[test]
    fn trial_seed_order_independent() {
        let s1 = trial_seed(9, 0, 1, 2);
        let s2 = trial_seed(9, 1, 0, 2);
        let s3 = trial_seed(9, 0, 1, 3);
        assert_ne!(s1, s2);
        assert_ne!(s1, s3);
        assert_eq!(s1, trial_seed(9, 0, 1, 2));
    }

    #[test]
    fn ead_benchmark_identical_arms_flagged() {
        // feeding the same values to both arms must not produce a p-value
        let xs = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        assert!(matches!(
            wilcoxon_signed_rank(&xs, &xs),
            Err(Error::AllZeroDifferences)
        ));
    }

    #[test]
    fn ead_benchmark_few_runs_insufficient() {
        let config = small_config(&["D1"], &[500], 2);
        let report = run_ead_benchmark(&config).unwrap();
        assert!(matches!(
            report.ead_cells[0].p_value,
            PValue::InsufficientN { .. }
        ));
    }

    #[test]
    fn ead_benchmark_estimator_beats_histogram_d1() {
        let config = small_config(&["D1"], &[2000], 8);
        let report = run_ead_benchmark(&config).unwrap();
        let cell = &report.ead_cells[0];
        assert!(cell.ours.failed_runs.is_empty());
        assert!(
            cell.ours.mean < cell.histogram.mean,
            "ours={} hb={}",
            cell.ours.mean,
            cell.histogram.mean
        );
    }

    #[test]
    fn wilcoxon_exact_matches_enumeration_oracle() {
        // n=6 hand case, no ties: diffs 1..6 all positive except one
        let xs = vec![1.1, 2.2, 3.3, 4.4, 5.5, 6.0];
        let ys = vec![0.1, 1.2, 2.3, 3.4, 4.5, 6.6];
        // diffs: +1,+1,+1,+1,+1,-0.6 -> |d| ranks: the -0.6 is smallest
        let p = wilcoxon_signed_rank(&xs, &ys).unwrap();
        // independent enumeration with scalar ranks
        let diffs = [1.0, 1.0, 1.0, 1.0, 1.0, -0.6f64];
        let mut abs: Vec<Real> = diffs.iter().map(|d| d.abs()).collect();
        abs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // ranks: 0.6 -> 1; five ties at 1.0 -> average rank (2+6)/2 = 4
        let ranks = [4.0, 4.0, 4.0, 4.0, 4.0, 1.0];
        let w_plus: Real = 20.0; // five positive diffs at rank 4
        let total = 21.0;
        let w_small = w_plus.min(total - w_plus);
        let mut extreme = 0;
        for mask in 0u32..64 {
            let wp: Real = (0..6).filter(|k| (mask >> k) & 1 == 1).map(|k| ranks[k]).sum();
            if wp.min(total - wp) <= w_small + 1e-9 {
                extreme += 1;
            }
        }
        assert!((p - extreme as Real / 64.0).abs() < 1e-12, "p={p}");
    }

    #[test]
    fn wilcoxon_normal_approx_strong_signal() {
        let xs: Vec<Real> = (0..30).map(|i| 0.5 + i as Real * 1e-4).collect();
        let ys: Vec<Real> = xs.iter().map(|v| v + 0.01).collect();
        let p = wilcoxon_signed_rank(&xs, &ys).unwrap();
        assert!(p < 0.001, "p={p}");
    }

    #[test]
    fn wilcoxon_guards() {
        assert!(wilcoxon_signed_rank(&[1.0], &[1.0, 2.0]).is_err());
        assert!(matches!(
            wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0], &[1.1, 2.1, 3.1, 4.1]),
            Err(Error::InsufficientData(_))
        ));
        // balanced case: p near 1
        let xs = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let ys = vec![1.5, 1.5, 3.5, 3.5, 5.5, 5.5];
        let p = wilcoxon_signed_rank(&xs, &ys).unwrap();
        assert!(p > 0.5, "p={p}");
    }

    #[test]
    fn report_json_round_trip() {
        let config = small_config(&["D4"], &[500], 1);
        let report = run_ead_benchmark(&config).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: BenchmarkReport = serde_json::from_str(&json).unwrap();
        assert_eq!(report.ead_cells, back.ead_cells);
        assert_eq!(back.schema_version, REPORT_SCHEMA_VERSION);
    }
}
