//! Finite weighted point measures on the line and the Fortet–Mourier distance.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Support points closer than this are merged into one atom.
pub const MERGE_EPS: f64 = 1e-15;

/// A finite Borel measure `Σ w_j δ_{x_j}` with strictly increasing support.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    support: Vec<f64>,
    weights: Vec<f64>,
    total_mass: f64,
}

impl EmpiricalMeasure {
    /// Sorts the atoms and merges points within [`MERGE_EPS`] of each other.
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::param(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(x) = points.iter().find(|x| !x.is_finite()) {
            return Err(Error::param(format!("non-finite support point {x}")));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::param(format!("weight {w} is not a nonnegative real")));
        }
        let mut atoms: Vec<(f64, f64)> = points.into_iter().zip(weights).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self::from_sorted_atoms(atoms))
    }

    fn from_sorted_atoms(atoms: Vec<(f64, f64)>) -> Self {
        let mut support: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match support.last() {
                Some(&last) if x - last <= MERGE_EPS => *weights.last_mut().unwrap() += w,
                _ => {
                    support.push(x);
                    weights.push(w);
                }
            }
        }
        let total_mass = weights.iter().sum();
        EmpiricalMeasure {
            support,
            weights,
            total_mass,
        }
    }

    /// Equal weights `1/n` on the given points.
    pub fn uniform(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::param("empirical measure needs at least one point"));
        }
        let w = 1.0 / points.len() as f64;
        let weights = vec![w; points.len()];
        Self::new(points, weights)
    }

    pub fn dirac(x: f64) -> Self {
        EmpiricalMeasure {
            support: vec![x],
            weights: vec![1.0],
            total_mass: 1.0,
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.support.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// `∫ f dμ`, summed in support order.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms().map(|(x, w)| w * f(x)).sum()
    }

    /// Mass of the half-open interval `[a, b)`.
    pub fn interval_mass(&self, a: f64, b: f64) -> f64 {
        let lo = self.support.partition_point(|&x| x < a);
        let hi = self.support.partition_point(|&x| x < b);
        self.weights[lo..hi.max(lo)].iter().sum()
    }

    /// Mass of the closed ball `[x - r, x + r]`.
    pub fn ball_mass(&self, x: f64, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::param(format!("ball radius {r} must be positive")));
        }
        let lo = self.support.partition_point(|&y| y < x - r);
        let hi = self.support.partition_point(|&y| y <= x + r);
        Ok(self.weights[lo..hi.max(lo)].iter().sum())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        EmpiricalMeasure {
            support: self.support.clone(),
            weights: self.weights.iter().map(|w| w * factor).collect(),
            total_mass: self.total_mass * factor,
        }
    }

    /// `Σ_k c_k μ_k` for nonnegative coefficients.
    pub fn combine<'a>(terms: impl IntoIterator<Item = (f64, &'a EmpiricalMeasure)>) -> Self {
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        for (c, mu) in terms {
            atoms.extend(mu.atoms().map(|(x, w)| (x, c * w)));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::from_sorted_atoms(atoms)
    }

    /// Moves every atom to the nearest node of the grid `lo + k·cell_width`,
    /// clamped to `[lo, hi]`, and merges atoms sharing a node.
    pub fn coarsen(&self, lo: f64, hi: f64, cell_width: f64) -> Self {
        let atoms: Vec<(f64, f64)> = self
            .atoms()
            .map(|(x, w)| {
                let snapped = lo + ((x - lo) / cell_width).round() * cell_width;
                (snapped.clamp(lo, hi), w)
            })
            .collect();
        // Rounding is monotone, so the snapped support is still sorted.
        Self::from_sorted_atoms(atoms)
    }

    /// Writes `point,weight` rows with round-trip float formatting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "point,weight")?;
        for (x, w) in self.atoms() {
            writeln!(out, "{x:?},{w:?}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for record in reader.deserialize() {
            let (x, w): (f64, f64) = record?;
            points.push(x);
            weights.push(w);
        }
        Self::new(points, weights)
    }
}

/// Fortet–Mourier (bounded-Lipschitz) distance
/// `sup { |∫f dμ − ∫f dν| : |f| ≤ 1, Lip(f) ≤ 1 }`.
///
/// On the merged support `x_1 < … < x_m` with signed masses `c_j = μ_j − ν_j`
/// this is the linear program `max Σ c_j f_j` over `|f_j| ≤ 1`,
/// `|f_{j+1} − f_j| ≤ x_{j+1} − x_j`; adjacent constraints imply all others
/// on the line. The program is solved exactly by dynamic programming over
/// concave piecewise-linear value functions (see [`max_banded_pairing`]).
pub fn fortet_mourier(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> f64 {
    let mut atoms: Vec<(f64, f64)> = mu
        .atoms()
        .chain(nu.atoms().map(|(x, w)| (x, -w)))
        .collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut points: Vec<f64> = Vec::with_capacity(atoms.len());
    let mut coeffs: Vec<f64> = Vec::with_capacity(atoms.len());
    for (x, c) in atoms {
        match points.last() {
            Some(&last) if x - last <= MERGE_EPS => *coeffs.last_mut().unwrap() += c,
            _ => {
                points.push(x);
                coeffs.push(c);
            }
        }
    }
    let gaps: Vec<f64> = points.windows(2).map(|p| p[1] - p[0]).collect();
    // Both signs, so the result is exactly symmetric in its arguments.
    let negated: Vec<f64> = coeffs.iter().map(|c| -c).collect();
    max_banded_pairing(&coeffs, &gaps)
        .max(max_banded_pairing(&negated, &gaps))
        .max(0.0)
}

#[derive(Debug, Clone, Copy)]
struct Breakpoint {
    pos: f64,
    weight: f64,
}

impl PartialEq for Breakpoint {
    fn eq(&self, other: &Self) -> bool {
        self.pos.total_cmp(&other.pos) == Ordering::Equal
    }
}
impl Eq for Breakpoint {}
impl PartialOrd for Breakpoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Breakpoint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.pos.total_cmp(&other.pos)
    }
}

/// Value function `V(f) = max Σ_{k≤j} c_k f_k` subject to `f_j = f`, kept as
/// a concave piecewise-linear function on `[-1, 1]` by its slope breakpoints.
///
/// `left` holds breakpoints at or left of the tracked maximiser `argmax`,
/// `right` those to its right; each heap carries a lazy translation so the
/// window step `W(f) = max_{|g−f|≤d} V(g)` is O(1). `slope` is the slope of
/// the segment immediately right of `argmax` and `value = V(argmax)`.
struct ValueFunction {
    left: BinaryHeap<Breakpoint>,
    left_shift: f64,
    right: BinaryHeap<Reverse<Breakpoint>>,
    right_shift: f64,
    argmax: f64,
    value: f64,
    slope: f64,
}

const WALL: f64 = 1.0;

impl ValueFunction {
    fn new() -> Self {
        ValueFunction {
            left: BinaryHeap::new(),
            left_shift: 0.0,
            right: BinaryHeap::new(),
            right_shift: 0.0,
            argmax: 0.0,
            value: 0.0,
            slope: 0.0,
        }
    }

    fn left_top(&self) -> Option<Breakpoint> {
        self.left.peek().map(|b| Breakpoint {
            pos: b.pos + self.left_shift,
            weight: b.weight,
        })
    }

    fn right_top(&self) -> Option<Breakpoint> {
        self.right.peek().map(|Reverse(b)| Breakpoint {
            pos: b.pos + self.right_shift,
            weight: b.weight,
        })
    }

    fn push_left(&mut self, pos: f64, weight: f64) {
        self.left.push(Breakpoint {
            pos: pos - self.left_shift,
            weight,
        });
    }

    fn push_right(&mut self, pos: f64, weight: f64) {
        self.right.push(Reverse(Breakpoint {
            pos: pos - self.right_shift,
            weight,
        }));
    }

    /// Adds `c·f` and moves `argmax` back to a maximiser.
    fn add_linear(&mut self, c: f64) {
        self.value += c * self.argmax;
        self.slope += c;
        self.settle();
    }

    fn settle(&mut self) {
        loop {
            if self.slope > 0.0 {
                match self.right_top() {
                    Some(b) if b.pos < WALL => {
                        self.right.pop();
                        self.value += self.slope * (b.pos - self.argmax);
                        self.slope -= b.weight;
                        self.push_left(b.pos, b.weight);
                        self.argmax = self.left_top().map_or(b.pos, |t| t.pos);
                    }
                    _ => {
                        self.value += self.slope * (WALL - self.argmax);
                        self.argmax = WALL;
                        return;
                    }
                }
                continue;
            }
            match self.left_top() {
                Some(t) if t.pos > -WALL => {
                    if t.pos < self.argmax {
                        if self.slope < 0.0 {
                            self.value += self.slope * (t.pos - self.argmax);
                            self.argmax = t.pos;
                        } else {
                            return;
                        }
                    } else {
                        let slope_left = self.slope + t.weight;
                        if slope_left >= 0.0 {
                            return;
                        }
                        self.left.pop();
                        self.push_right(self.argmax, t.weight);
                        self.slope = slope_left;
                    }
                }
                _ => {
                    if self.slope < 0.0 && self.argmax > -WALL {
                        self.value += self.slope * (-WALL - self.argmax);
                        self.argmax = -WALL;
                    }
                    return;
                }
            }
        }
    }

    /// Replaces `V` by `f ↦ max_{|g−f|≤d} V(g)` restricted to `[-1, 1]`.
    fn widen(&mut self, d: f64) {
        // Split the kink at the maximiser so the flat top can open up.
        if self.slope > 0.0 {
            self.push_left(self.argmax, self.slope);
        } else if self.slope < 0.0 {
            self.push_right(self.argmax, -self.slope);
            if self.argmax > -WALL {
                if let Some(mut top) = self.left.peek_mut() {
                    top.weight += self.slope;
                }
            }
        }
        self.slope = 0.0;
        self.left_shift -= d;
        self.right_shift += d;
    }
}

/// `max Σ c_j f_j` over `|f_j| ≤ 1`, `|f_{j+1} − f_j| ≤ gaps[j]`.
pub fn max_banded_pairing(coeffs: &[f64], gaps: &[f64]) -> f64 {
    assert_eq!(gaps.len() + 1, coeffs.len().max(1), "one gap per adjacent pair");
    let mut vf = ValueFunction::new();
    for (j, &c) in coeffs.iter().enumerate() {
        if j > 0 {
            vf.widen(gaps[j - 1]);
        }
        vf.add_linear(c);
    }
    vf.value
}
