//! Entropy and Lyapunov functionals over Bowen balls.
//!
//! For a word `w` of length `N`, the Bowen ball `B_N(x, w, δ)` holds every `y`
//! whose first `N` iterates along `w` stay strictly within `δ` of those of
//! `x`. The N-step quantities are
//!
//! ```text
//! h_N(μ,δ) = −∫ Σ_w p_w(x) inf_{y∈B_N} log p_w(y) μ(dx)
//! λ_N(μ,δ) =  ∫ Σ_w p_w(x) sup_{y∈B_N, y≠x} log(|S_w x − S_w y| / |x − y|) μ(dx)
//! ```
//!
//! Systems whose maps are all affine and whose probabilities are piecewise
//! constant take an exact path: the Bowen ball is an interval, its images are
//! intervals, and `inf log p_w` is bounded below by the sum of per-step infima
//! over those images (the value reported). Other systems are probed on an
//! equispaced grid of the ball.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interval::Span;
use crate::measure::EmpiricalMeasure;
use crate::system::{IfsSystem, Symbol, Word};

pub const DEFAULT_THETA: f64 = -20.0;
pub const DEFAULT_PROBES: usize = 256;
/// Largest number of words enumerated per atom and length.
pub const DEFAULT_WORD_BUDGET: u128 = 1 << 10;
pub const DEFAULT_DELTAS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    /// Truncation floor for log contraction ratios, per step.
    pub theta: f64,
    /// Probe count for systems without an exact path.
    pub probes: usize,
    pub word_budget: u128,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        EstimatorOptions {
            theta: DEFAULT_THETA,
            probes: DEFAULT_PROBES,
            word_budget: DEFAULT_WORD_BUDGET,
        }
    }
}

impl EstimatorOptions {
    pub fn with_theta(theta: f64) -> Self {
        EstimatorOptions {
            theta,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.theta < 0.0) {
            return Err(Error::param(format!("theta = {} must be negative", self.theta)));
        }
        if self.probes < 2 {
            return Err(Error::param("at least two probes are needed"));
        }
        Ok(())
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("delta = {delta} must be positive")))
    }
}

/// Whether `|S_{w^n}(y) − S_{w^n}(x)| < δ` for every prefix length `n = 0..=N`.
pub fn bowen_ball_contains(sys: &IfsSystem, x: f64, y: f64, w: &Word, delta: f64) -> Result<bool> {
    check_delta(delta)?;
    sys.domain().check(x)?;
    sys.domain().check(y)?;
    w.symbols().iter().try_for_each(|&s| sys.check_symbol(s))?;
    Ok(bowen_member(sys, x, y, w.symbols(), delta))
}

fn bowen_member(sys: &IfsSystem, mut x: f64, mut y: f64, symbols: &[Symbol], delta: f64) -> bool {
    if (y - x).abs() >= delta {
        return false;
    }
    for &s in symbols {
        x = sys.map(s, x);
        y = sys.map(s, y);
        if (y - x).abs() >= delta {
            return false;
        }
    }
    true
}

/// Equispaced points of `[x − δ, x + δ] ∩ domain`, endpoints included, plus `x`.
fn ball_probes(sys: &IfsSystem, x: f64, delta: f64, count: usize) -> Vec<f64> {
    let d = sys.domain();
    let lo = (x - delta).max(d.lo);
    let hi = (x + delta).min(d.hi);
    let mut probes: Vec<f64> = (0..count)
        .map(|k| {
            if k + 1 == count {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (count - 1) as f64
            }
        })
        .collect();
    probes.push(x);
    probes
}

/// `L_i(x) = max(sup_{y∈B(x,δ), y≠x} log(|S_i x − S_i y| / |x − y|), θ)`.
pub fn one_step_l(sys: &IfsSystem, i: Symbol, x: f64, delta: f64, theta: f64) -> Result<f64> {
    check_delta(delta)?;
    sys.check_symbol(i)?;
    sys.domain().check(x)?;
    if !(theta < 0.0) {
        return Err(Error::param(format!("theta = {theta} must be negative")));
    }
    Ok(one_step_l_unchecked(sys, i, x, delta, theta, DEFAULT_PROBES))
}

fn one_step_l_unchecked(sys: &IfsSystem, i: Symbol, x: f64, delta: f64, theta: f64, probes: usize) -> f64 {
    let sup = match sys.maps()[i].slope() {
        Some(slope) => slope.abs().ln(),
        None => {
            let fx = sys.map(i, x);
            ball_probes(sys, x, delta, probes)
                .into_iter()
                .filter(|&y| y != x)
                .map(|y| ((sys.map(i, y) - fx).abs() / (y - x).abs()).ln())
                .fold(f64::NEG_INFINITY, f64::max)
        }
    };
    sup.max(theta)
}

/// `H_i(x) = inf_{y∈B(x,δ)} log p_i(y)` over the closed ball.
pub fn one_step_h(sys: &IfsSystem, i: Symbol, x: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    sys.check_symbol(i)?;
    sys.domain().check(x)?;
    Ok(one_step_h_unchecked(sys, i, x, delta, DEFAULT_PROBES))
}

fn one_step_h_unchecked(sys: &IfsSystem, i: Symbol, x: f64, delta: f64, probes: usize) -> f64 {
    let ball = Span::closed(x - delta, x + delta)
        .intersect(&sys.domain().span())
        .expect("x lies in the domain");
    let inf = match sys.probabilities()[i].infimum_over(&ball) {
        Some(p) => p,
        None => ball_probes(sys, x, delta, probes)
            .into_iter()
            .map(|y| sys.prob(i, y))
            .fold(f64::INFINITY, f64::min),
    };
    inf.ln()
}

/// Neumaier summation: integrals over 10^5 atoms stay accurate to a few ulps.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    correction: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.correction += (self.sum - t) + v;
        } else {
            self.correction += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.correction
    }
}

/// Per-atom contributions for one word length and one radius.
#[derive(Debug, Clone, Copy, Default)]
struct WordSums {
    /// `Σ_w p_w(x) inf log p_w`, not yet negated.
    log_prob: f64,
    /// `Σ_w p_w(x) max(sup log ratio, N·θ)`.
    log_ratio: f64,
    /// Whether every word hit the `N·θ` floor.
    all_floored: bool,
}

struct Enumeration<'a> {
    sys: &'a IfsSystem,
    n_max: usize,
    deltas: &'a [f64],
    opts: EstimatorOptions,
    exact: bool,
    /// `sums[n - 1][k]` for word length `n` and radius `deltas[k]`.
    sums: Vec<Vec<WordSums>>,
    symbols: Vec<Symbol>,
    orbit: Vec<f64>,
    /// `scales[k] = Π_{j≤k} |slope_{w_j}|`, `scales[0] = 1`.
    scales: Vec<f64>,
}

impl<'a> Enumeration<'a> {
    fn run(sys: &'a IfsSystem, x: f64, n_max: usize, deltas: &'a [f64], opts: EstimatorOptions) -> Vec<Vec<WordSums>> {
        let mut e = Enumeration {
            sys,
            n_max,
            deltas,
            opts,
            exact: sys.is_exact_path(),
            sums: vec![
                vec![
                    WordSums {
                        all_floored: true,
                        ..Default::default()
                    };
                    deltas.len()
                ];
                n_max
            ],
            symbols: Vec::with_capacity(n_max),
            orbit: vec![x],
            scales: vec![1.0],
        };
        e.visit(1.0);
        e.sums
    }

    fn visit(&mut self, prob: f64) {
        let depth = self.symbols.len();
        if depth > 0 {
            self.record(prob);
        }
        if depth == self.n_max {
            return;
        }
        let x = *self.orbit.last().unwrap();
        let scale = *self.scales.last().unwrap();
        for i in 0..self.sys.alphabet_size() {
            let p = self.sys.prob(i, x);
            self.symbols.push(i);
            self.orbit.push(self.sys.map(i, x));
            if self.exact {
                let slope = self.sys.maps()[i].slope().expect("exact path").abs();
                self.scales.push(scale * slope);
            }
            self.visit(prob * p);
            self.symbols.pop();
            self.orbit.pop();
            if self.exact {
                self.scales.pop();
            }
        }
    }

    fn record(&mut self, prob: f64) {
        let n = self.symbols.len();
        let floor = n as f64 * self.opts.theta;
        for k in 0..self.deltas.len() {
            let delta = self.deltas[k];
            let (inf_log_prob, sup_ratio) = if self.exact {
                self.exact_word(delta)
            } else {
                self.probed_word(delta)
            };
            let floored = !(sup_ratio > floor);
            let slot = &mut self.sums[n - 1][k];
            slot.log_prob += prob * inf_log_prob;
            slot.log_ratio += prob * sup_ratio.max(floor);
            slot.all_floored &= floored;
        }
    }

    fn exact_word(&self, delta: f64) -> (f64, f64) {
        let n = self.symbols.len();
        let max_scale = self.scales.iter().copied().fold(0.0, f64::max);
        let radius = delta / max_scale;
        let x = self.orbit[0];
        let mut span = Span::open(x - radius, x + radius)
            .intersect(&self.sys.domain().span())
            .expect("x lies in the domain");
        let mut inf_log_prob = 0.0;
        for &s in &self.symbols {
            let p = self.sys.probabilities()[s]
                .infimum_over(&span)
                .expect("exact path");
            inf_log_prob += p.ln();
            let (slope, intercept) = match self.sys.maps()[s] {
                crate::system::IfsMap::Affine { slope, intercept } => (slope, intercept),
                _ => unreachable!("exact path"),
            };
            span = span.affine_image(slope, intercept);
        }
        // Affine maps: the ratio is the same for every y ≠ x in the ball.
        (inf_log_prob, self.scales[n].ln())
    }

    fn probed_word(&self, delta: f64) -> (f64, f64) {
        let x = self.orbit[0];
        let x_end = *self.orbit.last().unwrap();
        let mut inf_log_prob = f64::INFINITY;
        let mut sup_ratio = f64::NEG_INFINITY;
        for y in ball_probes(self.sys, x, delta, self.opts.probes) {
            if !bowen_member(self.sys, x, y, &self.symbols, delta) {
                continue;
            }
            let mut z = y;
            let mut log_prob = 0.0;
            for &s in &self.symbols {
                log_prob += self.sys.prob(s, z).ln();
                z = self.sys.map(s, z);
            }
            inf_log_prob = inf_log_prob.min(log_prob);
            if y != x {
                sup_ratio = sup_ratio.max(((z - x_end).abs() / (y - x).abs()).ln());
            }
        }
        (inf_log_prob, sup_ratio)
    }
}

/// `h_N` and `λ_N` at one word length and radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NStepEstimate {
    pub n: usize,
    pub delta: f64,
    pub h: f64,
    pub lambda: f64,
    /// Every word at every atom hit the `N·θ` floor.
    pub lambda_floored: bool,
}

fn check_budget(sys: &IfsSystem, n: usize, budget: u128) -> Result<()> {
    let words = (sys.alphabet_size() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if words > budget {
        return Err(Error::BudgetExceeded { words, budget });
    }
    Ok(())
}

/// Computes `h_N(μ,δ)` and `λ_N(μ,δ)` for `N = 1..=n_max` and every radius,
/// sharing one word enumeration per atom.
pub fn n_step_estimates(
    sys: &IfsSystem,
    mu: &EmpiricalMeasure,
    n_max: usize,
    deltas: &[f64],
    opts: EstimatorOptions,
) -> Result<Vec<NStepEstimate>> {
    if n_max == 0 {
        return Err(Error::param("word length N must be at least 1"));
    }
    if deltas.is_empty() {
        return Err(Error::param("at least one radius is required"));
    }
    deltas.iter().try_for_each(|&d| check_delta(d))?;
    opts.validate()?;
    check_budget(sys, n_max, opts.word_budget)?;
    if let Some(&x) = mu.support().iter().find(|&&x| !sys.domain().contains(x)) {
        sys.domain().check(x)?;
    }

    let per_atom: Vec<Vec<Vec<WordSums>>> = mu
        .support()
        .par_iter()
        .map(|&x| Enumeration::run(sys, x, n_max, deltas, opts))
        .collect();

    let mut out = Vec::with_capacity(n_max * deltas.len());
    for n in 1..=n_max {
        for (k, &delta) in deltas.iter().enumerate() {
            // Deterministic order: atoms in support order.
            let mut log_prob = CompensatedSum::default();
            let mut log_ratio = CompensatedSum::default();
            let mut all_floored = true;
            for (atom, w) in per_atom.iter().zip(mu.weights()) {
                let s = atom[n - 1][k];
                log_prob.add(w * s.log_prob);
                log_ratio.add(w * s.log_ratio);
                if *w > 0.0 {
                    all_floored &= s.all_floored;
                }
            }
            out.push(NStepEstimate {
                n,
                delta,
                h: -log_prob.value(),
                lambda: log_ratio.value(),
                lambda_floored: all_floored,
            });
        }
    }
    Ok(out)
}

/// `h_N(μ,δ)`.
pub fn h_n_estimate(sys: &IfsSystem, mu: &EmpiricalMeasure, n: usize, delta: f64) -> Result<f64> {
    single(sys, mu, n, delta, EstimatorOptions::default()).map(|e| e.h)
}

/// `λ_N(μ,δ)` with per-step truncation floor `θ`.
pub fn lambda_n_estimate(sys: &IfsSystem, mu: &EmpiricalMeasure, n: usize, delta: f64, theta: f64) -> Result<f64> {
    single(sys, mu, n, delta, EstimatorOptions::with_theta(theta)).map(|e| e.lambda)
}

fn single(sys: &IfsSystem, mu: &EmpiricalMeasure, n: usize, delta: f64, opts: EstimatorOptions) -> Result<NStepEstimate> {
    if n == 0 {
        return Err(Error::param("word length N must be at least 1"));
    }
    check_budget(sys, n, opts.word_budget)?;
    let all = n_step_estimates(sys, mu, n, &[delta], opts)?;
    Ok(*all.last().expect("n_max entries"))
}

/// `(I_H, I_L)`: the μ-integrals of `Σ_i p_i H_i` and `Σ_i p_i L_i`.
pub fn one_step_integrals(sys: &IfsSystem, mu: &EmpiricalMeasure, delta: f64, theta: f64) -> Result<(f64, f64)> {
    check_delta(delta)?;
    EstimatorOptions::with_theta(theta).validate()?;
    if let Some(&x) = mu.support().iter().find(|&&x| !sys.domain().contains(x)) {
        sys.domain().check(x)?;
    }
    let per_atom: Vec<(f64, f64)> = mu
        .support()
        .par_iter()
        .map(|&x| {
            (0..sys.alphabet_size()).fold((0.0, 0.0), |(h, l), i| {
                let p = sys.prob(i, x);
                (
                    h + p * one_step_h_unchecked(sys, i, x, delta, DEFAULT_PROBES),
                    l + p * one_step_l_unchecked(sys, i, x, delta, theta, DEFAULT_PROBES),
                )
            })
        })
        .collect();
    let mut i_h = CompensatedSum::default();
    let mut i_l = CompensatedSum::default();
    for ((h, l), w) in per_atom.iter().zip(mu.weights()) {
        i_h.add(w * h);
        i_l.add(w * l);
    }
    Ok((i_h.value(), i_l.value()))
}

/// `s(δ,θ) = I_H / I_L`, defined only when `I_L < 0`.
pub fn s_ratio(sys: &IfsSystem, mu: &EmpiricalMeasure, delta: f64, theta: f64) -> Result<f64> {
    let (i_h, i_l) = one_step_integrals(sys, mu, delta, theta)?;
    if !(i_l < 0.0) {
        return Err(Error::BoundNotApplicable(format!(
            "one-step Lyapunov integral I_L = {i_l} is not negative"
        )));
    }
    Ok(i_h / i_l)
}

/// `h_N`, `λ_N` over an `(N, δ)` grid plus the one-step ratio per radius.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateTable {
    pub theta: f64,
    pub n_max: usize,
    /// Radii in decreasing order.
    pub deltas: Vec<f64>,
    pub entries: Vec<NStepEstimate>,
    /// `(δ, s(δ,θ))`; `None` where the ratio is not applicable.
    pub s_ratios: Vec<(f64, Option<f64>)>,
}

impl EstimateTable {
    pub fn compute(
        sys: &IfsSystem,
        mu: &EmpiricalMeasure,
        n_max: usize,
        deltas: &[f64],
        opts: EstimatorOptions,
    ) -> Result<Self> {
        let mut deltas = deltas.to_vec();
        deltas.sort_by(|a, b| b.total_cmp(a));
        deltas.dedup();
        let entries = n_step_estimates(sys, mu, n_max, &deltas, opts)?;
        let s_ratios = deltas
            .iter()
            .map(|&d| match s_ratio(sys, mu, d, opts.theta) {
                Ok(s) => Ok((d, Some(s))),
                Err(Error::BoundNotApplicable(_)) => Ok((d, None)),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EstimateTable {
            theta: opts.theta,
            n_max,
            deltas,
            entries,
            s_ratios,
        })
    }

    pub fn get(&self, n: usize, delta: f64) -> Option<&NStepEstimate> {
        self.entries.iter().find(|e| e.n == n && e.delta == delta)
    }

    /// Columns `N,delta,h_value,lambda_value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "N,delta,h_value,lambda_value")?;
        for e in &self.entries {
            writeln!(out, "{},{:?},{:?},{:?}", e.n, e.delta, e.h, e.lambda)?;
        }
        Ok(())
    }
}

/// Limits `h(μ)`, `λ(μ)` read off an [`EstimateTable`].
#[derive(Debug, Clone, PartialEq)]
pub struct Extrapolation {
    pub h: f64,
    /// `f64::NEG_INFINITY` when the Lyapunov sums hit the θ floor on full mass.
    pub lambda: f64,
    /// The radius used as the δ → 0 proxy.
    pub delta: f64,
    /// `h_N/N` and `λ_N/N` at that radius, for `N = 1..=n_max`.
    pub h_per_n: Vec<f64>,
    pub lambda_per_n: Vec<f64>,
    /// Largest change of `h_N/N` (resp. `λ_N/N`) between the two smallest radii;
    /// zero when only one radius was evaluated.
    pub h_delta_gap: f64,
    pub lambda_delta_gap: f64,
}

impl Extrapolation {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "N,delta,h_over_n,lambda_over_n")?;
        for (k, (h, l)) in self.h_per_n.iter().zip(&self.lambda_per_n).enumerate() {
            writeln!(out, "{},{:?},{:?},{:?}", k + 1, self.delta, h, l)?;
        }
        writeln!(out, "min,{:?},{:?},{:?}", self.delta, self.h, self.lambda)?;
        Ok(())
    }
}

/// Takes the smallest radius as the δ-limit and, since both sequences are
/// subadditive in `N`, the minimum of `h_N/N` and `λ_N/N` as the `N`-limit.
pub fn extrapolate(table: &EstimateTable) -> Result<Extrapolation> {
    let delta = table.deltas.iter().copied().fold(f64::INFINITY, f64::min);
    if table.entries.is_empty() || !delta.is_finite() {
        return Err(Error::EmptyTable);
    }
    let column = |d: f64| -> Vec<&NStepEstimate> {
        let mut col: Vec<&NStepEstimate> = table.entries.iter().filter(|e| e.delta == d).collect();
        col.sort_by_key(|e| e.n);
        col
    };
    let at_delta = column(delta);
    if at_delta.is_empty() {
        return Err(Error::EmptyTable);
    }
    let h_per_n: Vec<f64> = at_delta.iter().map(|e| e.h / e.n as f64).collect();
    let lambda_per_n: Vec<f64> = at_delta.iter().map(|e| e.lambda / e.n as f64).collect();
    let h = h_per_n.iter().copied().fold(f64::INFINITY, f64::min);
    let lambda = if at_delta.iter().any(|e| e.lambda_floored) {
        f64::NEG_INFINITY
    } else {
        lambda_per_n.iter().copied().fold(f64::INFINITY, f64::min)
    };

    let next = table
        .deltas
        .iter()
        .copied()
        .filter(|&d| d > delta)
        .fold(f64::INFINITY, f64::min);
    let (h_delta_gap, lambda_delta_gap) = if next.is_finite() {
        let coarser = column(next);
        at_delta
            .iter()
            .zip(&coarser)
            .fold((0.0f64, 0.0f64), |(gh, gl), (a, b)| {
                let n = a.n as f64;
                (gh.max(((b.h - a.h) / n).abs()), gl.max(((b.lambda - a.lambda) / n).abs()))
            })
    } else {
        (0.0, 0.0)
    };

    Ok(Extrapolation {
        h,
        lambda,
        delta,
        h_per_n,
        lambda_per_n,
        h_delta_gap,
        lambda_delta_gap,
    })
}
