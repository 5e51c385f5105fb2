//! The Example 1 check battery: bound against the closed form, exactness of
//! the Lyapunov sums, the triadic atom bound and the ergodicity diagnostic.

use std::io::Write;

use crate::chain::{empirical_measure, sample_trajectory};
use crate::dimension::{binary_entropy, verify_bound_for_measure, BoundConfig, BoundReport};
use crate::error::Result;
use crate::measure::EmpiricalMeasure;
use crate::skew::{ergodicity_diagnostic, even_starts, ErgodicityReport, Observable};
use crate::system::{default_a_set, example1_system};

/// `H(p)/log 3`, the closed-form bound for Example 1.
pub fn example1_closed_form(p: f64) -> f64 {
    binary_entropy(p) / 3f64.ln()
}

/// Largest mass of a triadic interval `[k·3^{-m}, (k+1)·3^{-m})` in `[0, 1]`;
/// the last interval also owns `1`.
pub fn max_triadic_mass(mu: &EmpiricalMeasure, level: u32) -> f64 {
    let cells = 3usize.pow(level);
    let mut mass = vec![0.0; cells];
    for (x, w) in mu.atoms() {
        let k = ((x * cells as f64).floor() as usize).min(cells - 1);
        mass[k] += w;
    }
    mass.into_iter().fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryConfig {
    pub bound: BoundConfig,
    /// Allowed distance between the computed and the closed-form bound.
    pub bound_tolerance: f64,
    pub lambda_tolerance: f64,
    pub atom_levels: u32,
    pub ergodic_starts: usize,
    pub ergodic_steps: usize,
    pub ergodic_tolerance: f64,
}

impl BatteryConfig {
    pub fn new(seed: u64) -> Self {
        BatteryConfig {
            bound: BoundConfig::new(seed),
            bound_tolerance: 0.02,
            lambda_tolerance: 1e-12,
            atom_levels: 6,
            ergodic_starts: 10,
            ergodic_steps: 100_000,
            ergodic_tolerance: 0.03,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleReport {
    pub p: f64,
    pub seed: u64,
    pub closed_form: f64,
    pub bound: BoundReport,
    pub ergodicity: ErgodicityReport,
    pub checks: Vec<Check>,
}

impl ExampleReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "seed = {}", self.seed)?;
        writeln!(out, "p = {:?}", self.p)?;
        writeln!(out, "closed form H(p)/log 3 = {:?}", self.closed_form)?;
        for c in &self.checks {
            writeln!(out, "{:<4}  {:<20}  {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Runs the battery with default settings.
pub fn check_example(p: f64, seed: u64) -> Result<ExampleReport> {
    check_example_with(p, &BatteryConfig::new(seed))
}

pub fn check_example_with(p: f64, cfg: &BatteryConfig) -> Result<ExampleReport> {
    let sys = example1_system(p, default_a_set())?;
    let closed_form = example1_closed_form(p);
    let steps = sample_trajectory(&sys, &cfg.bound.chain)?;
    let mu = empirical_measure(&steps)?;
    let bound = verify_bound_for_measure(&sys, &mu, &cfg.bound)?;
    let mut checks = Vec::new();

    let computed = bound.bound.value();
    checks.push(Check {
        name: "bound match",
        passed: computed.is_some_and(|b| (b - closed_form).abs() <= cfg.bound_tolerance),
        detail: format!("bound {} vs closed form {closed_form:.6} (tolerance {})", bound.bound, cfg.bound_tolerance),
    });

    let log3 = 3f64.ln();
    let lambda_error = bound
        .table
        .entries
        .iter()
        .map(|e| (e.lambda + e.n as f64 * log3).abs())
        .fold(0.0, f64::max);
    checks.push(Check {
        name: "lambda exactness",
        passed: lambda_error <= cfg.lambda_tolerance,
        detail: format!("max |lambda_N + N log 3| = {lambda_error:.3e} over {} entries", bound.table.entries.len()),
    });

    let n = cfg.bound.chain.sample_count as f64;
    let mut atom_ok = true;
    let mut worst = f64::NEG_INFINITY;
    for m in 1..=cfg.atom_levels {
        let limit = (1.0 - p).powi(m as i32);
        let allowed = limit + 3.0 * (limit / n).sqrt();
        let observed = max_triadic_mass(&mu, m);
        atom_ok &= observed <= allowed;
        worst = worst.max(observed - allowed);
    }
    checks.push(Check {
        name: "atom bound",
        passed: atom_ok,
        detail: format!(
            "levels 1..={}: max(mass - allowed) = {worst:.4}",
            cfg.atom_levels
        ),
    });

    let ergodicity = ergodicity_diagnostic(
        &sys,
        &Observable::standard_set(&sys),
        &even_starts(&sys, cfg.ergodic_starts),
        cfg.ergodic_steps,
        cfg.bound.chain.seed,
        cfg.ergodic_tolerance,
    )?;
    checks.push(Check {
        name: "ergodicity",
        passed: ergodicity.consistent,
        detail: format!(
            "max spread {:.4} over {} starts (tolerance {})",
            ergodicity.max_spread(),
            cfg.ergodic_starts,
            cfg.ergodic_tolerance
        ),
    });

    checks.push(Check {
        name: "verdict",
        passed: bound.verdict,
        detail: format!(
            "empirical dimension {:.4} <= bound + {}",
            bound.empirical_dim, bound.tolerance
        ),
    });

    Ok(ExampleReport {
        p,
        seed: cfg.bound.chain.seed,
        closed_form,
        bound,
        ergodicity,
        checks,
    })
}
