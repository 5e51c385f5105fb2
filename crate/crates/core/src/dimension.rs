//! The dimension bound `−h/λ` and an independent local-dimension estimate of
//! the measure it bounds.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::chain::{empirical_measure, sample_trajectory, ChainConfig};
use crate::error::{Error, Result};
use crate::estimators::{extrapolate, EstimateTable, EstimatorOptions, Extrapolation, DEFAULT_DELTAS};
use crate::measure::EmpiricalMeasure;
use crate::system::IfsSystem;

pub const DEFAULT_QUANTILE: f64 = 0.1;
pub const DEFAULT_TOLERANCE: f64 = 0.05;
pub const DEFAULT_SAMPLE_COUNT: usize = 100_000;
pub const DEFAULT_N_MAX: usize = 5;

/// Radii `3^{-2}, …, 3^{-8}`.
pub fn default_radii() -> Vec<f64> {
    (2..=8).map(|k| 3f64.powi(-k)).collect()
}

/// The right-hand side of `dim_H(μ) ≤ −h/λ`, when it is defined.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundValue {
    Finite(f64),
    NotApplicable(String),
}

impl BoundValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            BoundValue::Finite(v) => Some(*v),
            BoundValue::NotApplicable(_) => None,
        }
    }
}

impl fmt::Display for BoundValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundValue::Finite(v) => write!(f, "{v:?}"),
            BoundValue::NotApplicable(reason) => write!(f, "not applicable ({reason})"),
        }
    }
}

/// `−h/λ`; zero when `λ = −∞`; not applicable when `λ ≥ 0` or `h < 0`.
pub fn dimension_bound(h: f64, lambda: f64) -> Result<BoundValue> {
    if h.is_nan() || lambda.is_nan() {
        return Err(Error::param(format!("bound inputs must not be NaN (h = {h}, lambda = {lambda})")));
    }
    if !h.is_finite() {
        return Ok(BoundValue::NotApplicable(format!("entropy h = {h} is not finite")));
    }
    if h < 0.0 {
        return Ok(BoundValue::NotApplicable(format!("entropy h = {h} is negative")));
    }
    if lambda >= 0.0 {
        return Ok(BoundValue::NotApplicable(format!(
            "Lyapunov exponent lambda = {lambda} is not negative"
        )));
    }
    if lambda == f64::NEG_INFINITY {
        return Ok(BoundValue::Finite(0.0));
    }
    Ok(BoundValue::Finite(-h / lambda))
}

/// Least-squares slopes of `log μ(B(x,r))` against `log r`, one per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDimension {
    /// The weighted lower `quantile` of the slopes.
    pub estimate: f64,
    pub median: f64,
    pub quantile: f64,
    /// `(x, slope)` for every atom that was not skipped.
    pub slopes: Vec<(f64, f64)>,
    pub skipped: usize,
}

impl LocalDimension {
    /// Columns `x,slope`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,slope")?;
        for (x, s) in &self.slopes {
            writeln!(out, "{x:?},{s:?}")?;
        }
        Ok(())
    }
}

fn weighted_quantile(sorted: &[(f64, f64)], q: f64) -> f64 {
    let total: f64 = sorted.iter().map(|(_, w)| w).sum();
    let target = q * total;
    let mut acc = 0.0;
    for &(v, w) in sorted {
        acc += w;
        if acc >= target {
            return v;
        }
    }
    sorted.last().expect("non-empty").0
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (num, den) = xs.iter().zip(ys).fold((0.0, 0.0), |(num, den), (x, y)| {
        (num + (x - mx) * (y - my), den + (x - mx) * (x - mx))
    });
    num / den
}

/// Fits the local-dimension slope at every atom of `mu` and summarises the
/// distribution by its weighted lower `quantile` (and median).
///
/// Atoms whose ball at the largest radius has zero mass are skipped; more
/// than half skipped is an error.
pub fn local_dimension_estimate(mu: &EmpiricalMeasure, radii: &[f64], quantile: f64) -> Result<LocalDimension> {
    if radii.len() < 3 {
        return Err(Error::param("at least three radii are required"));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::param("radii must be positive and finite"));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("radii must be strictly decreasing"));
    }
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(Error::param(format!("quantile {quantile} must lie in (0, 1]")));
    }
    if mu.is_empty() {
        return Err(Error::param("measure has no atoms"));
    }

    // Prefix sums make each closed-ball mass two binary searches.
    let support = mu.support();
    let mut cumulative = Vec::with_capacity(support.len() + 1);
    cumulative.push(0.0);
    for w in mu.weights() {
        cumulative.push(cumulative.last().unwrap() + w);
    }
    let ball = |x: f64, r: f64| {
        let lo = support.partition_point(|&y| y < x - r);
        let hi = support.partition_point(|&y| y <= x + r);
        cumulative[hi] - cumulative[lo]
    };
    let log_r: Vec<f64> = radii.iter().map(|r| r.ln()).collect();

    let fits: Vec<Option<f64>> = support
        .par_iter()
        .map(|&x| {
            let masses: Vec<f64> = radii.iter().map(|&r| ball(x, r)).collect();
            if masses.iter().any(|&m| !(m > 0.0)) {
                return None;
            }
            let log_m: Vec<f64> = masses.iter().map(|m| m.ln()).collect();
            Some(least_squares_slope(&log_r, &log_m))
        })
        .collect();

    let skipped = fits.iter().filter(|f| f.is_none()).count();
    if 2 * skipped > fits.len() {
        return Err(Error::param(format!(
            "{skipped} of {} atoms have an empty ball; local dimension undefined",
            fits.len()
        )));
    }
    let mut weighted: Vec<(f64, f64)> = fits
        .iter()
        .zip(mu.weights())
        .filter_map(|(f, &w)| f.map(|s| (s, w)))
        .collect();
    weighted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let slopes = support
        .iter()
        .zip(&fits)
        .filter_map(|(&x, f)| f.map(|s| (x, s)))
        .collect();
    Ok(LocalDimension {
        estimate: weighted_quantile(&weighted, quantile),
        median: weighted_quantile(&weighted, 0.5),
        quantile,
        slopes,
        skipped,
    })
}

/// Inputs of the full sample → estimate → bound → verdict pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundConfig {
    pub chain: ChainConfig,
    pub n_max: usize,
    pub deltas: Vec<f64>,
    pub estimator: EstimatorOptions,
    pub radii: Vec<f64>,
    pub quantile: f64,
    /// Slack allowed in `empirical_dim ≤ bound + tolerance`.
    pub tolerance: f64,
}

impl BoundConfig {
    pub fn new(seed: u64) -> Self {
        BoundConfig {
            chain: ChainConfig::new(seed, DEFAULT_SAMPLE_COUNT),
            n_max: DEFAULT_N_MAX,
            deltas: DEFAULT_DELTAS.to_vec(),
            estimator: EstimatorOptions::default(),
            radii: default_radii(),
            quantile: DEFAULT_QUANTILE,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub seed: u64,
    pub sample_count: usize,
    pub h: f64,
    pub lambda: f64,
    pub bound: BoundValue,
    pub empirical_dim: f64,
    pub median_dim: f64,
    pub quantile: f64,
    pub radii_used: Vec<f64>,
    pub tolerance: f64,
    /// `empirical_dim ≤ bound + tolerance`; false when the bound is not applicable.
    pub verdict: bool,
    pub table: EstimateTable,
    pub extrapolation: Extrapolation,
    pub local: LocalDimension,
}

impl BoundReport {
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        let ex = &self.extrapolation;
        writeln!(out, "seed = {}", self.seed)?;
        writeln!(out, "samples = {}", self.sample_count)?;
        writeln!(out, "theta = {:?}", self.table.theta)?;
        writeln!(out, "delta = {:?}", ex.delta)?;
        writeln!(out)?;
        writeln!(out, "{:>3}  {:>22}  {:>22}", "N", "h_N/N", "lambda_N/N")?;
        for (k, (h, l)) in ex.h_per_n.iter().zip(&ex.lambda_per_n).enumerate() {
            writeln!(out, "{:>3}  {:>22.15}  {:>22.15}", k + 1, h, l)?;
        }
        writeln!(out, "{:>3}  {:>22.15}  {:>22.15}", "min", ex.h, ex.lambda)?;
        writeln!(out, "delta gap (last two radii): h {:.3e}, lambda {:.3e}", ex.h_delta_gap, ex.lambda_delta_gap)?;
        for (d, s) in &self.table.s_ratios {
            match s {
                Some(s) => writeln!(out, "s(delta = {d:?}) = {s:?}")?,
                None => writeln!(out, "s(delta = {d:?}) = not applicable")?,
            }
        }
        writeln!(out)?;
        writeln!(out, "h = {:?}", self.h)?;
        writeln!(out, "lambda = {:?}", self.lambda)?;
        writeln!(out, "bound = {}", self.bound)?;
        writeln!(
            out,
            "empirical_dim = {:?} (quantile {}; median {:?}; {} atoms skipped)",
            self.empirical_dim, self.quantile, self.median_dim, self.local.skipped
        )?;
        writeln!(out, "radii = {:?}", self.radii_used)?;
        writeln!(out, "tolerance = {:?}", self.tolerance)?;
        writeln!(out, "verdict = {}", if self.verdict { "pass" } else { "fail" })?;
        Ok(())
    }

    pub const CSV_HEADER: &'static str = "seed,samples,h,lambda,bound,empirical_dim,median_dim,quantile,tolerance,verdict";

    /// One row matching [`Self::CSV_HEADER`]; an inapplicable bound is written as `NaN`.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}",
            self.seed,
            self.sample_count,
            self.h,
            self.lambda,
            self.bound.value().unwrap_or(f64::NAN),
            self.empirical_dim,
            self.median_dim,
            self.quantile,
            self.tolerance,
            self.verdict
        )
    }
}

/// Samples the chain, estimates `h` and `λ`, evaluates the bound and compares
/// it with the local-dimension estimate of the same empirical measure.
pub fn verify_bound(sys: &IfsSystem, cfg: &BoundConfig) -> Result<BoundReport> {
    if !(cfg.tolerance >= 0.0) {
        return Err(Error::param(format!("tolerance {} must be nonnegative", cfg.tolerance)));
    }
    let length = sys.domain().length();
    if let Some(r) = cfg.radii.iter().find(|&&r| r >= length) {
        return Err(Error::param(format!("radius {r} is not below the domain length {length}")));
    }
    let steps = sample_trajectory(sys, &cfg.chain)?;
    let mu = empirical_measure(&steps)?;
    verify_bound_for_measure(sys, &mu, cfg)
}

/// [`verify_bound`] on a given measure instead of a fresh sample.
pub fn verify_bound_for_measure(sys: &IfsSystem, mu: &EmpiricalMeasure, cfg: &BoundConfig) -> Result<BoundReport> {
    let table = EstimateTable::compute(sys, mu, cfg.n_max, &cfg.deltas, cfg.estimator)?;
    let extrapolation = extrapolate(&table)?;
    let bound = dimension_bound(extrapolation.h, extrapolation.lambda)?;
    let local = local_dimension_estimate(mu, &cfg.radii, cfg.quantile)?;
    let verdict = bound
        .value()
        .is_some_and(|b| local.estimate <= b + cfg.tolerance);
    Ok(BoundReport {
        seed: cfg.chain.seed,
        sample_count: cfg.chain.sample_count,
        h: extrapolation.h,
        lambda: extrapolation.lambda,
        bound,
        empirical_dim: local.estimate,
        median_dim: local.median,
        quantile: cfg.quantile,
        radii_used: cfg.radii.clone(),
        tolerance: cfg.tolerance,
        verdict,
        table,
        extrapolation,
        local,
    })
}

/// Natural-log binary entropy `−p log p − (1−p) log(1−p)`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    term(p) + term(1.0 - p)
}
