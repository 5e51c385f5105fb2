//! The Markov chain of a system: sampling, the Markov operator on measures,
//! and Cesàro (Krylov–Bogolyubov) averages of iterated push-forwards.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::EmpiricalMeasure;
use crate::system::{IfsSystem, Symbol};

pub const DEFAULT_BURN_IN: usize = 1_000;

/// Default Krylov–Bogolyubov grid: `2^20` cells across the domain.
pub const DEFAULT_GRID_LEVEL: u32 = 20;

/// The random stream used everywhere: ChaCha8, seeded from a `u64`.
pub type ChainRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> ChainRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialPoint {
    /// Drawn uniformly from the domain with one variate.
    Uniform,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub seed: u64,
    pub burn_in: usize,
    pub sample_count: usize,
    pub initial_point: InitialPoint,
}

impl ChainConfig {
    pub fn new(seed: u64, sample_count: usize) -> Self {
        ChainConfig {
            seed,
            burn_in: DEFAULT_BURN_IN,
            sample_count,
            initial_point: InitialPoint::Uniform,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::param("sample_count must be at least 1"));
        }
        Ok(())
    }
}

/// One recorded transition: the symbol drawn and the point it led to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub symbol: Symbol,
    pub point: f64,
}

/// Cumulative-inverse selection with symbols in ascending order. Rounding
/// slack past the last cumulative sum falls to the last symbol.
pub fn pick_symbol(probs: impl IntoIterator<Item = f64>, u: f64) -> Symbol {
    let mut cumulative = 0.0;
    let mut last = 0;
    for (i, p) in probs.into_iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return i;
        }
        last = i;
    }
    last
}

/// Draws `i` with probability `p_i(x)` using exactly one uniform variate and
/// returns `(i, S_i(x))`.
pub fn transition_sample<R: Rng + ?Sized>(sys: &IfsSystem, x: f64, rng: &mut R) -> Result<(Symbol, f64)> {
    sys.domain().check(x)?;
    Ok(step_unchecked(sys, x, rng))
}

#[inline]
pub(crate) fn step_unchecked<R: Rng + ?Sized>(sys: &IfsSystem, x: f64, rng: &mut R) -> (Symbol, f64) {
    let u: f64 = rng.random();
    let i = pick_symbol((0..sys.alphabet_size()).map(|i| sys.prob(i, x)), u);
    (i, sys.map(i, x))
}

pub(crate) fn initial_point<R: Rng + ?Sized>(sys: &IfsSystem, init: InitialPoint, rng: &mut R) -> Result<f64> {
    let domain = sys.domain();
    match init {
        InitialPoint::Uniform => {
            let u: f64 = rng.random();
            Ok(domain.lo + u * domain.length())
        }
        InitialPoint::Fixed(x) => {
            domain.check(x)?;
            Ok(x)
        }
    }
}

/// Runs the chain, discards `burn_in` transitions and records the next
/// `sample_count`.
pub fn sample_trajectory(sys: &IfsSystem, cfg: &ChainConfig) -> Result<Vec<Step>> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut x = initial_point(sys, cfg.initial_point, &mut rng)?;
    for _ in 0..cfg.burn_in {
        x = step_unchecked(sys, x, &mut rng).1;
    }
    let mut steps = Vec::with_capacity(cfg.sample_count);
    for _ in 0..cfg.sample_count {
        let (symbol, next) = step_unchecked(sys, x, &mut rng);
        steps.push(Step { symbol, point: next });
        x = next;
    }
    Ok(steps)
}

/// Independent trajectories; trajectory `k` uses seed `cfg.seed + k`.
pub fn sample_trajectories(sys: &IfsSystem, cfg: &ChainConfig, count: usize) -> Result<Vec<Vec<Step>>> {
    (0..count)
        .into_par_iter()
        .map(|k| {
            let cfg = ChainConfig {
                seed: cfg.seed.wrapping_add(k as u64),
                ..cfg.clone()
            };
            sample_trajectory(sys, &cfg)
        })
        .collect()
}

/// Uniform empirical measure on the visited points.
pub fn empirical_measure(steps: &[Step]) -> Result<EmpiricalMeasure> {
    EmpiricalMeasure::uniform(steps.iter().map(|s| s.point).collect())
}

pub fn write_trajectory_csv<W: Write>(steps: &[Step], mut out: W) -> Result<()> {
    writeln!(out, "step,symbol,point")?;
    for (k, s) in steps.iter().enumerate() {
        writeln!(out, "{k},{},{:?}", s.symbol, s.point)?;
    }
    Ok(())
}

/// The Markov operator: `μP = Σ_i S_{i*}(p_i μ)`, computed exactly.
pub fn push_forward(sys: &IfsSystem, mu: &EmpiricalMeasure) -> EmpiricalMeasure {
    let n = sys.alphabet_size();
    let mut points = Vec::with_capacity(mu.len() * n);
    let mut weights = Vec::with_capacity(mu.len() * n);
    for (x, w) in mu.atoms() {
        for i in 0..n {
            points.push(sys.map(i, x));
            weights.push(w * sys.prob(i, x));
        }
    }
    EmpiricalMeasure::new(points, weights).expect("images of finite atoms are finite")
}

/// `μ P^n`.
pub fn push_forward_n(sys: &IfsSystem, mu: &EmpiricalMeasure, n: usize) -> EmpiricalMeasure {
    (0..n).fold(mu.clone(), |acc, _| push_forward(sys, &acc))
}

/// Cell width of the grid that Krylov–Bogolyubov supports are snapped to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolution {
    pub cell_width: f64,
}

impl Resolution {
    pub fn new(cell_width: f64) -> Result<Self> {
        if !(cell_width > 0.0 && cell_width.is_finite()) {
            return Err(Error::param(format!("cell width {cell_width} must be positive")));
        }
        Ok(Resolution { cell_width })
    }

    /// `2^level` cells across the domain of `sys`.
    pub fn dyadic(sys: &IfsSystem, level: u32) -> Self {
        Resolution {
            cell_width: sys.domain().length() / 2f64.powi(level as i32),
        }
    }

    fn apply(&self, sys: &IfsSystem, mu: &EmpiricalMeasure) -> EmpiricalMeasure {
        let d = sys.domain();
        mu.coarsen(d.lo, d.hi, self.cell_width)
    }
}

/// `μ_n = (1/n) Σ_{m<n} μ_0 P^m`, snapping supports to `coarsen` after every
/// application of `P` when given.
pub fn krylov_bogolyubov(
    sys: &IfsSystem,
    mu0: &EmpiricalMeasure,
    n: usize,
    coarsen: Option<Resolution>,
) -> Result<EmpiricalMeasure> {
    let mut averages = krylov_bogolyubov_sequence(sys, mu0, &[n], coarsen)?;
    Ok(averages.pop().expect("one requested average").1)
}

/// Cesàro averages at each requested `n`, from a single pass over
/// `μ_0, μ_0 P, …` up to the largest `n`.
pub fn krylov_bogolyubov_sequence(
    sys: &IfsSystem,
    mu0: &EmpiricalMeasure,
    ns: &[usize],
    coarsen: Option<Resolution>,
) -> Result<Vec<(usize, EmpiricalMeasure)>> {
    if ns.is_empty() {
        return Err(Error::param("at least one averaging length is required"));
    }
    if let Some(&bad) = ns.iter().find(|&&n| n == 0) {
        return Err(Error::param(format!("averaging length {bad} must be at least 1")));
    }
    if let Some(res) = coarsen {
        if res.cell_width > sys.domain().length() {
            return Err(Error::param(format!(
                "cell width {} is coarser than the domain",
                res.cell_width
            )));
        }
    }
    if let Some(x) = mu0.support().iter().find(|x| !sys.domain().contains(**x)) {
        return Err(Error::OutsideDomain {
            x: *x,
            lo: sys.domain().lo,
            hi: sys.domain().hi,
        });
    }
    let snap = |mu: EmpiricalMeasure| match coarsen {
        Some(res) => res.apply(sys, &mu),
        None => mu,
    };

    let n_max = *ns.iter().max().unwrap();
    let mut current = snap(mu0.clone());
    let mut sum = current.clone();
    let mut out = Vec::with_capacity(ns.len());
    for m in 1..=n_max {
        // `sum` holds Σ_{k<m} μ_0 P^k.
        for &n in ns.iter().filter(|&&n| n == m) {
            out.push((n, sum.scaled(1.0 / n as f64)));
        }
        if m == n_max {
            break;
        }
        current = snap(push_forward(sys, &current));
        sum = EmpiricalMeasure::combine([(1.0, &sum), (1.0, &current)]);
    }
    // Report in the caller's order.
    out.sort_by_key(|(n, _)| ns.iter().position(|m| m == n));
    Ok(out)
}
