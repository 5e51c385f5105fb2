//! Place-dependent iterated function systems on a closed real interval.
//!
//! A system is a finite family of maps `S_i` together with probability
//! functions `p_i` that sum to one at every point. Words are applied left to
//! right: the first symbol acts first, so `compose_map(w, x)` is
//! `S_{w_n}(…S_{w_1}(x)…)`. Symbols are zero-based indices into the alphabet.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interval::{IntervalSet, Span};

pub type Symbol = usize;

/// Probe resolution used when validating systems.
pub const DEFAULT_PROBE_POINTS: usize = 10_000;

const SUM_TOLERANCE: f64 = 1e-12;

/// Closed interval `[lo, hi]` with the metric `|x - y|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::InvalidSystem(format!(
                "domain [{lo}, {hi}] must be a finite interval of positive length"
            )));
        }
        Ok(Domain { lo, hi })
    }

    pub fn unit() -> Self {
        Domain { lo: 0.0, hi: 1.0 }
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn span(&self) -> Span {
        Span::closed(self.lo, self.hi)
    }

    pub fn check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideDomain {
                x,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }

    /// `count` equispaced points including both endpoints.
    pub fn grid(&self, count: usize) -> impl Iterator<Item = f64> + '_ {
        let count = count.max(2);
        let step = self.length() / (count - 1) as f64;
        (0..count).map(move |k| {
            if k + 1 == count {
                self.hi
            } else {
                self.lo + k as f64 * step
            }
        })
    }
}

/// One affine branch `slope·x + intercept` on `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinePiece {
    pub start: f64,
    pub end: f64,
    pub slope: f64,
    pub intercept: f64,
}

type PointFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A map of the domain into itself.
#[derive(Clone)]
pub enum IfsMap {
    /// `x ↦ slope·x + intercept`; the only kind with exact Bowen-ball estimates.
    Affine { slope: f64, intercept: f64 },
    /// Piecewise affine; the last piece also owns its right endpoint.
    PiecewiseAffine(Vec<AffinePiece>),
    Custom(PointFn),
}

impl IfsMap {
    pub fn affine(slope: f64, intercept: f64) -> Self {
        IfsMap::Affine { slope, intercept }
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        IfsMap::Custom(Arc::new(f))
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            IfsMap::Affine { slope, intercept } => slope * x + intercept,
            IfsMap::PiecewiseAffine(pieces) => pieces
                .iter()
                .find(|p| p.start <= x && x < p.end)
                .or_else(|| pieces.iter().rev().find(|p| p.end == x))
                .map_or(f64::NAN, |p| p.slope * x + p.intercept),
            IfsMap::Custom(f) => f(x),
        }
    }

    /// Global slope, when the map is affine.
    pub fn slope(&self) -> Option<f64> {
        match self {
            IfsMap::Affine { slope, .. } => Some(*slope),
            _ => None,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            IfsMap::PiecewiseAffine(pieces) => {
                pieces.iter().flat_map(|p| [p.start, p.end]).collect()
            }
            _ => Vec::new(),
        }
    }
}

impl fmt::Debug for IfsMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IfsMap::Affine { slope, intercept } => f
                .debug_struct("Affine")
                .field("slope", slope)
                .field("intercept", intercept)
                .finish(),
            IfsMap::PiecewiseAffine(pieces) => f.debug_tuple("PiecewiseAffine").field(pieces).finish(),
            IfsMap::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// A probability function `p_i : X → [0, 1]`.
#[derive(Clone)]
pub enum ProbabilityFn {
    Constant(f64),
    /// `value` on each interval of `set`, `default` elsewhere.
    Piecewise(Vec<PiecewisePiece>, f64),
    Custom(PointFn),
}

/// A piece of a piecewise-constant probability.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePiece {
    pub set: IntervalSet,
    pub value: f64,
}

impl ProbabilityFn {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ProbabilityFn::Custom(Arc::new(f))
    }

    /// `inside` on `set`, `outside` on its complement.
    pub fn indicator(set: IntervalSet, inside: f64, outside: f64) -> Self {
        ProbabilityFn::Piecewise(vec![PiecewisePiece { set, value: inside }], outside)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ProbabilityFn::Constant(c) => *c,
            ProbabilityFn::Piecewise(pieces, default) => pieces
                .iter()
                .find(|piece| piece.set.contains(x))
                .map_or(*default, |piece| piece.value),
            ProbabilityFn::Custom(f) => f(x),
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, ProbabilityFn::Custom(_))
    }

    /// Exact infimum over `span`, or `None` for custom functions.
    pub fn infimum_over(&self, span: &Span) -> Option<f64> {
        match self {
            ProbabilityFn::Constant(c) => Some(*c),
            ProbabilityFn::Piecewise(pieces, default) => {
                let mut inf = pieces
                    .iter()
                    .filter(|piece| piece.set.meets(span))
                    .map(|piece| piece.value)
                    .fold(f64::INFINITY, f64::min);
                // The default applies unless the pieces jointly cover the span.
                if !union_covers(pieces, span) {
                    inf = inf.min(*default);
                }
                Some(inf)
            }
            ProbabilityFn::Custom(_) => None,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            ProbabilityFn::Piecewise(pieces, _) => {
                pieces.iter().flat_map(|p| p.set.endpoints()).collect()
            }
            _ => Vec::new(),
        }
    }
}

fn union_covers(pieces: &[PiecewisePiece], span: &Span) -> bool {
    if pieces.iter().any(|piece| piece.set.covers(span)) {
        return true;
    }
    if pieces.len() < 2 {
        return false;
    }
    IntervalSet::new(
        pieces
            .iter()
            .flat_map(|p| p.set.intervals().iter().map(|iv| (iv.start, iv.end))),
    )
    .is_ok_and(|union| union.covers(span))
}

impl fmt::Debug for ProbabilityFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbabilityFn::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            ProbabilityFn::Piecewise(pieces, default) => f
                .debug_struct("Piecewise")
                .field("pieces", pieces)
                .field("default", default)
                .finish(),
            ProbabilityFn::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Finite word over the alphabet. The empty word acts as the identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn new(symbols: impl Into<Vec<Symbol>>) -> Self {
        Word(symbols.into())
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut symbols = self.0.clone();
        symbols.extend_from_slice(&other.0);
        Word(symbols)
    }

    /// Decodes `index` as a base-`alphabet_size` numeral of `len` digits,
    /// most significant digit first.
    pub fn from_index(mut index: u128, alphabet_size: usize, len: usize) -> Word {
        let mut symbols = vec![0; len];
        for slot in symbols.iter_mut().rev() {
            *slot = (index % alphabet_size as u128) as usize;
            index /= alphabet_size as u128;
        }
        Word(symbols)
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(symbols: Vec<Symbol>) -> Self {
        Word(symbols)
    }
}

/// A validated place-dependent IFS.
#[derive(Debug, Clone)]
pub struct IfsSystem {
    maps: Vec<IfsMap>,
    probabilities: Vec<ProbabilityFn>,
    domain: Domain,
    p_min: f64,
}

impl IfsSystem {
    pub fn new(
        domain: Domain,
        maps: Vec<IfsMap>,
        probabilities: Vec<ProbabilityFn>,
        p_min: f64,
    ) -> Result<Self> {
        Self::with_probe_points(domain, maps, probabilities, p_min, DEFAULT_PROBE_POINTS)
    }

    /// Validates on `probe_points` equispaced points plus every breakpoint.
    pub fn with_probe_points(
        domain: Domain,
        maps: Vec<IfsMap>,
        probabilities: Vec<ProbabilityFn>,
        p_min: f64,
        probe_points: usize,
    ) -> Result<Self> {
        if maps.len() < 2 {
            return Err(Error::InvalidSystem(format!(
                "alphabet needs at least 2 symbols, got {}",
                maps.len()
            )));
        }
        if maps.len() != probabilities.len() {
            return Err(Error::InvalidSystem(format!(
                "{} maps but {} probability functions",
                maps.len(),
                probabilities.len()
            )));
        }
        if !(p_min > 0.0 && p_min <= 1.0 / maps.len() as f64) {
            return Err(Error::InvalidSystem(format!(
                "p_min = {p_min} must lie in (0, 1/{}]",
                maps.len()
            )));
        }
        let sys = IfsSystem {
            maps,
            probabilities,
            domain,
            p_min,
        };
        sys.validate(probe_points)?;
        Ok(sys)
    }

    fn validate(&self, probe_points: usize) -> Result<()> {
        let mut probes: Vec<f64> = self.domain.grid(probe_points).collect();
        for bp in self
            .maps
            .iter()
            .flat_map(IfsMap::breakpoints)
            .chain(self.probabilities.iter().flat_map(ProbabilityFn::breakpoints))
        {
            for x in [bp, bp - 1e-12, bp.next_down()] {
                if self.domain.contains(x) {
                    probes.push(x);
                }
            }
        }
        for &x in &probes {
            let mut sum = 0.0;
            for (i, p) in self.probabilities.iter().enumerate() {
                let value = p.eval(x);
                if !(value >= self.p_min) || value > 1.0 {
                    return Err(Error::InvalidSystem(format!(
                        "p_{i}({x}) = {value} violates p_min = {}",
                        self.p_min
                    )));
                }
                sum += value;
            }
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::InvalidSystem(format!(
                    "probabilities sum to {sum} at x = {x}"
                )));
            }
            for (i, map) in self.maps.iter().enumerate() {
                let y = map.apply(x);
                if !self.domain.contains(y) {
                    return Err(Error::InvalidSystem(format!(
                        "map {i} sends {x} to {y}, outside [{}, {}]",
                        self.domain.lo, self.domain.hi
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn alphabet_size(&self) -> usize {
        self.maps.len()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn p_min(&self) -> f64 {
        self.p_min
    }

    pub fn maps(&self) -> &[IfsMap] {
        &self.maps
    }

    pub fn probabilities(&self) -> &[ProbabilityFn] {
        &self.probabilities
    }

    /// All maps affine and all probabilities piecewise constant.
    pub fn is_exact_path(&self) -> bool {
        self.maps.iter().all(|m| m.slope().is_some())
            && self.probabilities.iter().all(ProbabilityFn::is_exact)
    }

    #[inline]
    pub fn map(&self, i: Symbol, x: f64) -> f64 {
        self.maps[i].apply(x)
    }

    #[inline]
    pub fn prob(&self, i: Symbol, x: f64) -> f64 {
        self.probabilities[i].eval(x)
    }

    pub fn check_symbol(&self, symbol: Symbol) -> Result<()> {
        if symbol < self.alphabet_size() {
            Ok(())
        } else {
            Err(Error::InvalidSymbol {
                symbol,
                alphabet_size: self.alphabet_size(),
            })
        }
    }

    fn check_word(&self, w: &Word) -> Result<()> {
        w.symbols().iter().try_for_each(|&s| self.check_symbol(s))
    }
}

/// `S_{w_n}(…S_{w_1}(x)…)`.
pub fn compose_map(sys: &IfsSystem, w: &Word, x: f64) -> Result<f64> {
    sys.domain.check(x)?;
    sys.check_word(w)?;
    Ok(w.symbols().iter().fold(x, |y, &s| sys.map(s, y)))
}

/// `p_{w_1}(x)·p_{w_2}(S_{w_1}x)·…`; the empty word has probability one.
pub fn word_probability(sys: &IfsSystem, w: &Word, x: f64) -> Result<f64> {
    sys.domain.check(x)?;
    sys.check_word(w)?;
    let mut y = x;
    let mut prob = 1.0;
    for &s in w.symbols() {
        prob *= sys.prob(s, y);
        y = sys.map(s, y);
    }
    Ok(prob)
}

/// The two-map system `x/3`, `(x+2)/3` on `[0, 1]` with `p_1 = p` on `a_set`
/// and `1 - p` elsewhere, `p_2 = 1 - p_1`.
pub fn example1_system(p: f64, a_set: IntervalSet) -> Result<IfsSystem> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::param(format!("p = {p} must lie in the open interval (0, 1/2)")));
    }
    IfsSystem::new(
        Domain::unit(),
        vec![IfsMap::affine(1.0 / 3.0, 0.0), IfsMap::affine(1.0 / 3.0, 2.0 / 3.0)],
        vec![
            ProbabilityFn::indicator(a_set.clone(), p, 1.0 - p),
            ProbabilityFn::indicator(a_set, 1.0 - p, p),
        ],
        p,
    )
}

/// The default set `A = [0, 1/2)`.
pub fn default_a_set() -> IntervalSet {
    IntervalSet::new([(0.0, 0.5)]).expect("static interval")
}

/// Ternary Cantor maps with constant probabilities `(q, 1 - q)`.
pub fn cantor_system(q: f64) -> Result<IfsSystem> {
    affine_constant_system(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)], &[q, 1.0 - q])
}

/// Affine maps `(slope, intercept)` on `[0, 1]` with constant probabilities.
pub fn affine_constant_system(maps: &[(f64, f64)], probs: &[f64]) -> Result<IfsSystem> {
    let p_min = probs.iter().copied().fold(f64::INFINITY, f64::min);
    IfsSystem::new(
        Domain::unit(),
        maps.iter().map(|&(a, b)| IfsMap::affine(a, b)).collect(),
        probs.iter().map(|&q| ProbabilityFn::Constant(q)).collect(),
        p_min,
    )
}

fn piece(start: f64, end: f64, slope: f64, intercept: f64) -> AffinePiece {
    AffinePiece {
        start,
        end,
        slope,
        intercept,
    }
}

/// A non-ergodic system: both maps send `[0, 1/3]` and `[2/3, 1]` into
/// themselves, so each half carries its own Cantor-type invariant measure.
/// Probabilities are `1/2`.
pub fn two_component_system() -> IfsSystem {
    IfsSystem::new(
        Domain::unit(),
        vec![
            IfsMap::PiecewiseAffine(vec![piece(0.0, 0.5, 1.0 / 3.0, 0.0), piece(0.5, 1.0, 1.0 / 3.0, 2.0 / 3.0)]),
            IfsMap::PiecewiseAffine(vec![
                piece(0.0, 0.5, 1.0 / 3.0, 2.0 / 9.0),
                piece(0.5, 1.0, 1.0 / 3.0, 4.0 / 9.0),
            ]),
        ],
        vec![ProbabilityFn::Constant(0.5), ProbabilityFn::Constant(0.5)],
        0.5,
    )
    .expect("static system")
}

/// Two expanding maps, `2x mod 1` and `2x + 1/2 mod 1`, with probabilities
/// `1/2`. Every Lyapunov quantity is positive, so no dimension bound applies.
pub fn expanding_system() -> IfsSystem {
    IfsSystem::new(
        Domain::unit(),
        vec![
            IfsMap::PiecewiseAffine(vec![piece(0.0, 0.5, 2.0, 0.0), piece(0.5, 1.0, 2.0, -1.0)]),
            IfsMap::PiecewiseAffine(vec![
                piece(0.0, 0.25, 2.0, 0.5),
                piece(0.25, 0.75, 2.0, -0.5),
                piece(0.75, 1.0, 2.0, -1.5),
            ]),
        ],
        vec![ProbabilityFn::Constant(0.5), ProbabilityFn::Constant(0.5)],
        0.5,
    )
    .expect("static system")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ex1(p: f64) -> IfsSystem {
        example1_system(p, default_a_set()).unwrap()
    }

    #[test]
    fn compose_examples() {
        let sys = ex1(0.3);
        // Symbols are zero-based: (1, 2) in one-based notation is [0, 1].
        assert_abs_diff_eq!(compose_map(&sys, &Word::new([0, 1]), 0.0).unwrap(), 2.0 / 3.0);
        assert_eq!(compose_map(&sys, &Word::empty(), 0.37).unwrap(), 0.37);
        assert_abs_diff_eq!(
            compose_map(&sys, &Word::new([0, 0, 0]), 1.0).unwrap(),
            1.0 / 27.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn compose_errors() {
        let sys = ex1(0.3);
        assert!(matches!(
            compose_map(&sys, &Word::new([2]), 0.5),
            Err(Error::InvalidSymbol { symbol: 2, .. })
        ));
        assert!(matches!(
            compose_map(&sys, &Word::empty(), 1.5),
            Err(Error::OutsideDomain { .. })
        ));
        assert!(word_probability(&sys, &Word::new([0, 7]), 0.5).is_err());
    }

    #[test]
    fn word_probability_examples() {
        let half = cantor_system(0.5).unwrap();
        assert_abs_diff_eq!(word_probability(&half, &Word::new([0, 1, 1]), 0.2).unwrap(), 0.125);
        assert_eq!(word_probability(&ex1(0.3), &Word::empty(), 0.8).unwrap(), 1.0);
        // p_1(0) · p_1(0/3), both points in A.
        assert_abs_diff_eq!(
            word_probability(&ex1(0.3), &Word::new([0, 0]), 0.0).unwrap(),
            0.09,
            epsilon = 1e-15
        );
    }

    #[test]
    fn example1_probabilities() {
        let sys = ex1(0.3);
        assert_eq!(sys.prob(0, 0.25), 0.3);
        assert_eq!(sys.prob(0, 0.75), 0.7);
        assert_eq!(sys.p_min(), 0.3);

        let empty = example1_system(0.3, IntervalSet::empty()).unwrap();
        for x in [0.0, 0.3, 0.5, 1.0] {
            assert_eq!(empty.prob(0, x), 0.7);
        }
        let full = example1_system(0.4, IntervalSet::new([(0.0, 1.0)]).unwrap()).unwrap();
        for x in [0.0, 0.3, 0.5, 0.999] {
            assert_eq!(full.prob(0, x), 0.4);
        }
        for p in [0.0, 0.5, 0.6, -0.1, f64::NAN] {
            assert!(example1_system(p, default_a_set()).is_err(), "p = {p}");
        }
    }

    #[test]
    fn validation_rejects_bad_systems() {
        let maps = || vec![IfsMap::affine(0.5, 0.0), IfsMap::affine(0.5, 0.5)];
        // Probabilities that do not sum to one.
        let err = IfsSystem::new(
            Domain::unit(),
            maps(),
            vec![ProbabilityFn::Constant(0.5), ProbabilityFn::Constant(0.6)],
            0.1,
        );
        assert!(matches!(err, Err(Error::InvalidSystem(_))));
        // Below p_min.
        assert!(IfsSystem::new(
            Domain::unit(),
            maps(),
            vec![ProbabilityFn::Constant(0.05), ProbabilityFn::Constant(0.95)],
            0.1,
        )
        .is_err());
        // A map leaving the domain.
        assert!(IfsSystem::new(
            Domain::unit(),
            vec![IfsMap::affine(2.0, 0.0), IfsMap::affine(0.5, 0.0)],
            vec![ProbabilityFn::Constant(0.5), ProbabilityFn::Constant(0.5)],
            0.5,
        )
        .is_err());
        // Single-symbol alphabet.
        assert!(IfsSystem::new(
            Domain::unit(),
            vec![IfsMap::affine(0.5, 0.0)],
            vec![ProbabilityFn::Constant(1.0)],
            0.5,
        )
        .is_err());
        // Probability vanishing on a tiny interval the grid would miss; caught via breakpoints.
        let sneaky = IntervalSet::new([(0.123_456_7, 0.123_456_8)]).unwrap();
        assert!(IfsSystem::new(
            Domain::unit(),
            maps(),
            vec![
                ProbabilityFn::indicator(sneaky.clone(), 0.0, 0.5),
                ProbabilityFn::indicator(sneaky, 1.0, 0.5),
            ],
            0.1,
        )
        .is_err());
    }

    #[test]
    fn piecewise_infimum() {
        let a = default_a_set();
        let p1 = ProbabilityFn::indicator(a, 0.3, 0.7);
        assert_eq!(p1.infimum_over(&Span::closed(0.44, 0.54)), Some(0.3));
        assert_eq!(p1.infimum_over(&Span::closed(0.5, 0.54)), Some(0.7));
        assert_eq!(p1.infimum_over(&Span::closed(0.2, 0.3)), Some(0.3));
        let p2 = ProbabilityFn::indicator(default_a_set(), 0.7, 0.3);
        assert_eq!(p2.infimum_over(&Span::closed(0.2, 0.3)), Some(0.7));
        assert_eq!(p2.infimum_over(&Span::open(0.4, 0.5)), Some(0.7));
        assert_eq!(p2.infimum_over(&Span::open(0.4, 0.5000001)), Some(0.3));

        // Two pieces jointly covering the span: the default never applies.
        let split = ProbabilityFn::Piecewise(
            vec![
                PiecewisePiece {
                    set: IntervalSet::new([(0.0, 0.5)]).unwrap(),
                    value: 0.4,
                },
                PiecewisePiece {
                    set: IntervalSet::new([(0.5, 1.0)]).unwrap(),
                    value: 0.6,
                },
            ],
            0.1,
        );
        assert_eq!(split.infimum_over(&Span::closed(0.2, 0.9)), Some(0.4));
        assert_eq!(split.infimum_over(&Span::closed(0.6, 1.0)), Some(0.1));
    }

    #[test]
    fn word_index_decoding() {
        assert_eq!(Word::from_index(5, 2, 3).symbols(), &[1, 0, 1]);
        assert_eq!(Word::from_index(0, 3, 2).symbols(), &[0, 0]);
        assert_eq!(Word::from_index(8, 3, 2).symbols(), &[2, 2]);
    }

    fn arb_word(max_len: usize) -> impl Strategy<Value = Word> {
        prop::collection::vec(0usize..2, 0..=max_len).prop_map(Word::from)
    }

    #[test]
    fn word_probabilities_sum_to_one() {
        let sys = example1_system(0.2, IntervalSet::new([(0.1, 0.25), (0.6, 0.8)]).unwrap()).unwrap();
        for k in 0..=1000 {
            let x = k as f64 * 1e-3;
            for n in 0..=6 {
                let total: f64 = (0..2u128.pow(n as u32))
                    .map(|idx| word_probability(&sys, &Word::from_index(idx, 2, n), x).unwrap())
                    .sum();
                assert!((total - 1.0).abs() < 1e-10, "x = {x}, n = {n}, sum = {total}");
            }
        }
    }

    proptest! {
        #[test]
        fn composition_is_sequential(u in arb_word(6), v in arb_word(6), x in 0.0f64..=1.0) {
            let sys = example1_system(0.3, IntervalSet::new([(0.0, 0.4), (0.7, 0.9)]).unwrap()).unwrap();
            let whole = compose_map(&sys, &u.concat(&v), x).unwrap();
            let stepwise = compose_map(&sys, &v, compose_map(&sys, &u, x).unwrap()).unwrap();
            prop_assert_eq!(whole, stepwise);

            let p_uv = word_probability(&sys, &u.concat(&v), x).unwrap();
            let p_u = word_probability(&sys, &u, x).unwrap();
            let p_v = word_probability(&sys, &v, compose_map(&sys, &u, x).unwrap()).unwrap();
            prop_assert!((p_uv - p_u * p_v).abs() <= 1e-15);
            prop_assert!(p_uv > 0.0 && p_uv <= 1.0);
        }
    }
}
