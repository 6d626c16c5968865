//! Closed-form oracles, estimators, the CHSH harness and statistical audits.

mod audit;
mod counts;
mod estimate;

pub use audit::{
    chi_square_homogeneity, compare_alice_marginals, equivalence_audit, equivalence_audit_with,
    locality_audit, locality_audit_with, no_signaling_check, ChiSquareReport, LocalityReport,
    NoSignalingReport, PartyFn, CHI_SQUARE_ALPHA, LOCALITY_VARIATIONS, MIN_NO_SIGNALING_RUNS,
};
pub use counts::{merge_stats, CountConvention, JointCounts, JointTable};
pub use estimate::{
    count_runs, default_partitions, estimate_joint, estimate_joint_planned, for_each_run,
    map_partitions, partition_range, simulate_run, EstimateReport, JointEstimate, Protocol,
    RunOutcome, RunPlan,
};

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Sign, UnitVector3, UNIT_NORM_TOLERANCE};

/// Acceptance band in units of the standard error.
pub const SIGMA_BAND: f64 = 5.0;

/// Singlet joint law `P(sA, sB | a, b) = (1 - sA sB a·b) / 4`.
pub fn analytic_joint(a: &UnitVector3, b: &UnitVector3, s_a: Sign, s_b: Sign) -> Result<f64> {
    let dot = a.dot(b);
    if dot.abs() > 1.0 + UNIT_NORM_TOLERANCE {
        return Err(Error::InvalidGeometry(format!("|a·b| = {} exceeds 1", dot.abs())));
    }
    Ok((1.0 - (s_a * s_b).as_f64() * dot) / 4.0)
}

/// Singlet correlation `<sA sB> = -a·b`.
pub fn analytic_corr(a: &UnitVector3, b: &UnitVector3) -> f64 {
    -a.dot(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub a: UnitVector3,
    pub a_prime: UnitVector3,
    pub b: UnitVector3,
    pub b_prime: UnitVector3,
}

impl ChshSettings {
    /// Settings reaching `S = 2√2` under `E = -a·b`:
    /// `a = ẑ`, `a' = x̂`, `b = -(x̂ + ẑ)/√2`, `b' = (x̂ - ẑ)/√2`.
    pub fn optimal() -> Self {
        Self {
            a: UnitVector3::Z,
            a_prime: UnitVector3::X,
            b: UnitVector3::new(-FRAC_1_SQRT_2, 0.0, -FRAC_1_SQRT_2).expect("unit"),
            b_prime: UnitVector3::new(FRAC_1_SQRT_2, 0.0, -FRAC_1_SQRT_2).expect("unit"),
        }
    }

    /// All four settings along ẑ: `|S| = 2`.
    pub fn aligned() -> Self {
        Self {
            a: UnitVector3::Z,
            a_prime: UnitVector3::Z,
            b: UnitVector3::Z,
            b_prime: UnitVector3::Z,
        }
    }

    /// The four (Alice, Bob) pairs in the order `(a,b), (a,b'), (a',b), (a',b')`.
    pub fn pairs(&self) -> [(UnitVector3, UnitVector3); 4] {
        [
            (self.a, self.b),
            (self.a, self.b_prime),
            (self.a_prime, self.b),
            (self.a_prime, self.b_prime),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChshSource {
    Analytic,
    Protocol(Protocol),
}

impl std::str::FromStr for ChshSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "analytic" {
            Ok(ChshSource::Analytic)
        } else {
            s.parse().map(ChshSource::Protocol)
        }
    }
}

impl std::fmt::Display for ChshSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChshSource::Analytic => f.write_str("analytic"),
            ChshSource::Protocol(p) => f.write_str(p.as_str()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChshReport {
    pub s: f64,
    /// Propagated standard error, `sqrt(Σ se_k²)` over the four independent terms.
    pub stderr: f64,
    /// `E(a,b), E(a,b'), E(a',b), E(a',b')`.
    pub terms: [EstimateReport; 4],
}

/// `S = E(a,b) + E(a,b') + E(a',b) - E(a',b')`.
///
/// Sampled sources estimate term `k` from runs `k·n .. (k+1)·n` under one
/// master seed, so the four terms are independent.
pub fn chsh(source: ChshSource, settings: &ChshSettings, n_runs: u64, seed: u64) -> Result<ChshReport> {
    chsh_with_partitions(source, settings, n_runs, seed, default_partitions())
}

pub fn chsh_with_partitions(
    source: ChshSource,
    settings: &ChshSettings,
    n_runs: u64,
    seed: u64,
    partitions: usize,
) -> Result<ChshReport> {
    let mut terms = [EstimateReport {
        value: 0.0,
        stderr: 0.0,
        n_runs,
        seed,
    }; 4];
    for (k, (a, b)) in settings.pairs().iter().enumerate() {
        terms[k] = match source {
            ChshSource::Analytic => EstimateReport {
                value: analytic_corr(a, b),
                stderr: 0.0,
                n_runs: 0,
                seed,
            },
            ChshSource::Protocol(p) => {
                let plan = RunPlan::new(seed, n_runs)
                    .starting_at(k as u64 * n_runs)
                    .with_partitions(partitions);
                estimate_joint_planned(p, a, b, plan)?.corr
            }
        };
    }
    let s = terms[0].value + terms[1].value + terms[2].value - terms[3].value;
    let stderr = terms.iter().map(|t| t.stderr * t.stderr).sum::<f64>().sqrt();
    Ok(ChshReport { s, stderr, terms })
}
