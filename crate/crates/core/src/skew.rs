//! The skew product `(x, ω) ↦ (S_{ω_1}(x), σω)`, Birkhoff averages along its
//! orbits, and an empirical ergodicity diagnostic.
//!
//! The symbol sequence `ω` is realised lazily: each symbol is drawn when it is
//! needed, with the place-dependent law `p_i(current point)`, so the first `n`
//! symbols from `(x, ·)` occur with probability `p_{ω^n}(x)`.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::chain::{pick_symbol, rng_from_seed, ChainRng};
use crate::error::{Error, Result};
use crate::system::{IfsSystem, Symbol};

pub const DEFAULT_SPREAD_TOLERANCE: f64 = 0.05;

/// A lazily realised symbol sequence.
pub trait SymbolSource {
    /// The next symbol, given the current point of the orbit.
    fn next_symbol(&mut self, sys: &IfsSystem, x: f64) -> Symbol;
}

/// Draws each symbol with the place-dependent law, one uniform variate per
/// symbol, exactly as the Markov chain does.
#[derive(Debug, Clone)]
pub struct PlaceDependentSource {
    rng: ChainRng,
}

impl PlaceDependentSource {
    pub fn new(seed: u64) -> Self {
        PlaceDependentSource {
            rng: rng_from_seed(seed),
        }
    }
}

impl SymbolSource for PlaceDependentSource {
    fn next_symbol(&mut self, sys: &IfsSystem, x: f64) -> Symbol {
        use rand::Rng;
        let u: f64 = self.rng.random();
        pick_symbol((0..sys.alphabet_size()).map(|i| sys.prob(i, x)), u)
    }
}

/// A fixed sequence repeated periodically, ignoring the point.
#[derive(Debug, Clone)]
pub struct CyclicSource {
    symbols: Vec<Symbol>,
    position: usize,
}

impl CyclicSource {
    pub fn new(symbols: Vec<Symbol>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::param("a cyclic source needs at least one symbol"));
        }
        Ok(CyclicSource { symbols, position: 0 })
    }
}

impl SymbolSource for CyclicSource {
    fn next_symbol(&mut self, _sys: &IfsSystem, _x: f64) -> Symbol {
        let s = self.symbols[self.position];
        self.position = (self.position + 1) % self.symbols.len();
        s
    }
}

/// A point of `X × Σ` with the unread part of `ω` held by `source`.
#[derive(Debug, Clone)]
pub struct SkewState<S> {
    pub x: f64,
    pub source: S,
    pub step_count: u64,
}

impl<S: SymbolSource> SkewState<S> {
    pub fn new(sys: &IfsSystem, x: f64, source: S) -> Result<Self> {
        sys.domain().check(x)?;
        Ok(SkewState {
            x,
            source,
            step_count: 0,
        })
    }

    /// Advances one step in place and returns the symbol consumed.
    pub fn advance(&mut self, sys: &IfsSystem) -> Result<Symbol> {
        let symbol = self.source.next_symbol(sys, self.x);
        sys.check_symbol(symbol)?;
        self.x = sys.map(symbol, self.x);
        self.step_count += 1;
        Ok(symbol)
    }
}

/// `(x, ω) ↦ (S_{ω_1}(x), σω)`.
pub fn skew_step<S: SymbolSource>(sys: &IfsSystem, mut state: SkewState<S>) -> Result<SkewState<S>> {
    state.advance(sys)?;
    Ok(state)
}

/// `(1/m) Σ_{k<m} f(x_k, ω_{k+1})` along the skew orbit of `state`.
pub fn birkhoff_average<S: SymbolSource>(
    sys: &IfsSystem,
    state: &mut SkewState<S>,
    observable: impl Fn(f64, Symbol) -> f64,
    m: usize,
) -> Result<f64> {
    if m == 0 {
        return Err(Error::param("Birkhoff average needs m >= 1"));
    }
    let mut sum = 0.0;
    for _ in 0..m {
        let x = state.x;
        let symbol = state.advance(sys)?;
        sum += observable(x, symbol);
    }
    Ok(sum / m as f64)
}

/// One orbit record: step `k`, symbol `ω_{k+1}` and the point `x_k` it was drawn at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitPoint {
    pub step: u64,
    pub symbol: Symbol,
    pub x: f64,
}

pub fn skew_orbit<S: SymbolSource>(sys: &IfsSystem, state: &mut SkewState<S>, m: usize) -> Result<Vec<OrbitPoint>> {
    (0..m)
        .map(|_| {
            let (step, x) = (state.step_count, state.x);
            state.advance(sys).map(|symbol| OrbitPoint { step, symbol, x })
        })
        .collect()
}

/// Columns `step,symbol,x`.
pub fn write_orbit_csv<W: Write>(orbit: &[OrbitPoint], mut out: W) -> Result<()> {
    writeln!(out, "step,symbol,x")?;
    for p in orbit {
        writeln!(out, "{},{},{:?}", p.step, p.symbol, p.x)?;
    }
    Ok(())
}

type ObservableFn = Arc<dyn Fn(f64, Symbol) -> f64 + Send + Sync>;

/// A named function of `(x_k, ω_{k+1})`.
#[derive(Clone)]
pub struct Observable {
    pub name: String,
    f: ObservableFn,
}

impl Observable {
    pub fn new(name: impl Into<String>, f: impl Fn(f64, Symbol) -> f64 + Send + Sync + 'static) -> Self {
        Observable {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, x: f64, symbol: Symbol) -> f64 {
        (self.f)(x, symbol)
    }

    pub fn position() -> Self {
        Observable::new("x", |x, _| x)
    }

    pub fn position_squared() -> Self {
        Observable::new("x^2", |x, _| x * x)
    }

    /// `log p_{ω_{k+1}}(x_k)`, whose average is the entropy rate with sign flipped.
    pub fn log_probability(sys: &IfsSystem) -> Self {
        let sys = sys.clone();
        Observable::new("log p", move |x, i| sys.prob(i, x).ln())
    }

    /// `x`, `x²` and `log p` along the orbit.
    pub fn standard_set(sys: &IfsSystem) -> Vec<Self> {
        vec![Observable::log_probability(sys), Observable::position(), Observable::position_squared()]
    }
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable").field("name", &self.name).finish()
    }
}

/// Birkhoff averages from several starts and their spread per observable.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicityReport {
    pub observables: Vec<String>,
    pub starts: Vec<f64>,
    /// `averages[j][k]`: start `j`, observable `k`.
    pub averages: Vec<Vec<f64>>,
    /// Largest pairwise difference across starts, per observable.
    pub spreads: Vec<f64>,
    pub tolerance: f64,
    /// Every spread within tolerance. This can refute ergodicity, never prove it.
    pub consistent: bool,
}

impl ErgodicityReport {
    pub fn max_spread(&self) -> f64 {
        self.spreads.iter().copied().fold(0.0, f64::max)
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "{:>22}", "start")?;
        for name in &self.observables {
            write!(out, "  {name:>20}")?;
        }
        writeln!(out)?;
        for (x, avg) in self.starts.iter().zip(&self.averages) {
            write!(out, "{x:>22.15}")?;
            for a in avg {
                write!(out, "  {a:>20.12}")?;
            }
            writeln!(out)?;
        }
        write!(out, "{:>22}", "spread")?;
        for s in &self.spreads {
            write!(out, "  {s:>20.3e}")?;
        }
        writeln!(out)?;
        writeln!(
            out,
            "ergodicity {} (tolerance {:?})",
            if self.consistent { "consistent" } else { "refuted" },
            self.tolerance
        )?;
        Ok(())
    }
}

/// Runs `m` skew steps from each start (start `j` seeded with `seed + j`) and
/// compares the Birkhoff averages of every observable.
pub fn ergodicity_diagnostic(
    sys: &IfsSystem,
    observables: &[Observable],
    starts: &[f64],
    m: usize,
    seed: u64,
    tolerance: f64,
) -> Result<ErgodicityReport> {
    if starts.len() < 2 {
        return Err(Error::param(format!("need at least 2 starting points, got {}", starts.len())));
    }
    if observables.is_empty() {
        return Err(Error::param("at least one observable is required"));
    }
    if m == 0 {
        return Err(Error::param("Birkhoff average needs m >= 1"));
    }
    if !(tolerance >= 0.0) {
        return Err(Error::param(format!("tolerance {tolerance} must be nonnegative")));
    }
    starts.iter().try_for_each(|&x| sys.domain().check(x))?;

    let averages: Vec<Vec<f64>> = starts
        .par_iter()
        .enumerate()
        .map(|(j, &x)| {
            let mut state = SkewState::new(sys, x, PlaceDependentSource::new(seed.wrapping_add(j as u64)))?;
            let mut sums = vec![0.0; observables.len()];
            for _ in 0..m {
                let x = state.x;
                let symbol = state.advance(sys)?;
                for (sum, obs) in sums.iter_mut().zip(observables) {
                    *sum += obs.eval(x, symbol);
                }
            }
            Ok(sums.into_iter().map(|s| s / m as f64).collect())
        })
        .collect::<Result<_>>()?;

    let spreads: Vec<f64> = (0..observables.len())
        .map(|k| {
            let (lo, hi) = averages
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| (lo.min(a[k]), hi.max(a[k])));
            hi - lo
        })
        .collect();
    let consistent = spreads.iter().all(|&s| s <= tolerance);
    Ok(ErgodicityReport {
        observables: observables.iter().map(|o| o.name.clone()).collect(),
        starts: starts.to_vec(),
        averages,
        spreads,
        tolerance,
        consistent,
    })
}

/// `k` starts spread evenly over the domain, endpoints included.
pub fn even_starts(sys: &IfsSystem, k: usize) -> Vec<f64> {
    sys.domain().grid(k).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{empirical_measure, sample_trajectory, ChainConfig, InitialPoint};
    use crate::estimators::{one_step_h, one_step_integrals, one_step_l};
    use crate::measure::fortet_mourier;
    use crate::system::{default_a_set, example1_system, two_component_system, word_probability, Word};
    use approx::assert_abs_diff_eq;

    fn ex1(p: f64) -> IfsSystem {
        example1_system(p, default_a_set()).unwrap()
    }

    #[test]
    fn mock_stream_orbit() {
        let sys = ex1(0.3);
        let mut s = SkewState::new(&sys, 1.0, CyclicSource::new(vec![0]).unwrap()).unwrap();
        let mut expected = 1.0;
        for k in 1..=10 {
            s = skew_step(&sys, s).unwrap();
            expected /= 3.0;
            assert_abs_diff_eq!(s.x, expected, epsilon = 1e-15);
            assert_eq!(s.step_count, k);
        }
        let bad = SkewState::new(&sys, 0.5, CyclicSource::new(vec![2]).unwrap()).unwrap();
        assert!(skew_step(&sys, bad).is_err());
        assert!(SkewState::new(&sys, 1.5, PlaceDependentSource::new(0)).is_err());
        assert!(CyclicSource::new(vec![]).is_err());
    }

    #[test]
    fn first_symbol_frequency() {
        let p = 0.3;
        let sys = ex1(p);
        let restarts = 100_000;
        let mut rng_seed = 0u64;
        let hits = (0..restarts)
            .filter(|_| {
                rng_seed += 1;
                let mut s = SkewState::new(&sys, 0.2, PlaceDependentSource::new(rng_seed)).unwrap();
                s.advance(&sys).unwrap() == 0
            })
            .count();
        let freq = hits as f64 / restarts as f64;
        let sigma = (p * (1.0 - p) / restarts as f64).sqrt();
        assert!((freq - p).abs() < 4.0 * sigma, "{freq}");
    }

    #[test]
    fn cylinder_frequencies_match_word_probabilities() {
        let sys = ex1(0.3);
        let x = 0.45;
        let restarts = 100_000u64;
        let mut counts = [0usize; 8];
        for r in 0..restarts {
            let mut s = SkewState::new(&sys, x, PlaceDependentSource::new(1_000_000 + r)).unwrap();
            let idx = (0..3).fold(0, |acc, _| acc * 2 + s.advance(&sys).unwrap());
            counts[idx] += 1;
        }
        for (idx, &c) in counts.iter().enumerate() {
            let w = Word::from_index(idx as u128, 2, 3);
            let prob = word_probability(&sys, &w, x).unwrap();
            let freq = c as f64 / restarts as f64;
            let sigma = (prob * (1.0 - prob) / restarts as f64).sqrt();
            assert!((freq - prob).abs() < 4.5 * sigma, "word {w:?}: {freq} vs {prob}");
        }
    }

    #[test]
    fn birkhoff_examples() {
        let sys = ex1(0.3);
        let mut s = SkewState::new(&sys, 0.7, PlaceDependentSource::new(1)).unwrap();
        assert_eq!(birkhoff_average(&sys, &mut s, |_, _| 2.5, 100).unwrap(), 2.5);
        assert_eq!(s.step_count, 100);
        let l = birkhoff_average(&sys, &mut s, |x, i| one_step_l(&sys, i, x, 1e-3, -10.0).unwrap(), 1000).unwrap();
        assert_abs_diff_eq!(l, -(3f64.ln()), epsilon = 1e-12);
        assert!(birkhoff_average(&sys, &mut s, |_, _| 0.0, 0).is_err());
    }

    #[test]
    fn birkhoff_of_log_p_matches_integral() {
        let p: f64 = 0.3;
        let sys = ex1(p);
        let m = 100_000;
        let mut s = SkewState::new(&sys, 0.1, PlaceDependentSource::new(5)).unwrap();
        let avg = birkhoff_average(&sys, &mut s, |x, i| sys.prob(i, x).ln(), m).unwrap();
        let closed = p * p.ln() + (1.0 - p) * (1.0 - p).ln();
        assert!((avg - closed).abs() < 0.02, "{avg} vs {closed}");

        let mut s = SkewState::new(&sys, 0.1, PlaceDependentSource::new(6)).unwrap();
        let h_avg = birkhoff_average(&sys, &mut s, |x, i| one_step_h(&sys, i, x, 1e-3).unwrap(), m).unwrap();
        let steps = sample_trajectory(&sys, &ChainConfig::new(6, m)).unwrap();
        let (i_h, _) = one_step_integrals(&sys, &empirical_measure(&steps).unwrap(), 1e-3, -10.0).unwrap();
        assert!((h_avg - i_h).abs() < 0.02, "{h_avg} vs {i_h}");
    }

    #[test]
    fn skew_marginal_matches_chain() {
        let sys = ex1(0.3);
        let m = 100_000;
        let cfg = ChainConfig {
            burn_in: 0,
            initial_point: InitialPoint::Fixed(0.25),
            ..ChainConfig::new(11, m)
        };
        let chain = empirical_measure(&sample_trajectory(&sys, &cfg).unwrap()).unwrap();
        let mut state = SkewState::new(&sys, 0.25, PlaceDependentSource::new(99)).unwrap();
        let orbit: Vec<f64> = (0..m)
            .map(|_| {
                state.advance(&sys).unwrap();
                state.x
            })
            .collect();
        let skew = crate::EmpiricalMeasure::uniform(orbit).unwrap();
        assert!(fortet_mourier(&chain, &skew) <= 0.02);
    }

    #[test]
    fn diagnostic_accepts_example_and_refutes_mock() {
        let sys = ex1(0.3);
        let report = ergodicity_diagnostic(&sys, &Observable::standard_set(&sys), &even_starts(&sys, 4), 20_000, 3, 0.05).unwrap();
        assert!(report.consistent, "{report:?}");

        let mock = two_component_system();
        let report =
            ergodicity_diagnostic(&mock, &Observable::standard_set(&mock), &even_starts(&mock, 4), 20_000, 3, 0.05).unwrap();
        assert!(!report.consistent);
        assert!(report.spreads[1] > 0.5);
        let mut text = Vec::new();
        report.write_text(&mut text).unwrap();
        assert!(String::from_utf8(text).unwrap().contains("refuted"));

        assert!(ergodicity_diagnostic(&sys, &Observable::standard_set(&sys), &[0.5], 10, 0, 0.05).is_err());
    }

    #[test]
    fn orbit_csv() {
        let sys = ex1(0.3);
        let mut s = SkewState::new(&sys, 1.0, CyclicSource::new(vec![0, 1]).unwrap()).unwrap();
        let orbit = skew_orbit(&sys, &mut s, 3).unwrap();
        let mut buf = Vec::new();
        write_orbit_csv(&orbit, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("step,symbol,x"));
        assert_eq!(text.lines().nth(1), Some("0,0,1.0"));
        assert_eq!(text.lines().count(), 4);
    }
}
