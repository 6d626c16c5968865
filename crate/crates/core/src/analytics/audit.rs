use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::counts::JointTable;
use super::SIGMA_BAND;
use crate::error::{Error, Result};
use crate::geometry::{Sign, UnitVector3};
use crate::rng::{derive_substream, sample_unit_vector};
use crate::single_world::{tb_run, SharedRandomness};
use crate::two_instance::{
    is_swapped, alice_record, bob_record, referee_pair, referee_pair_with, InstanceLabel, PartyRecord,
};

pub const MIN_NO_SIGNALING_RUNS: u64 = 10_000;

/// Significance level of the χ² independence tests.
pub const CHI_SQUARE_ALPHA: f64 = 1e-3;

/// Remote settings tried per structural locality trial.
pub const LOCALITY_VARIATIONS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoSignalingReport {
    pub runs: u64,
    pub alice_plus: f64,
    pub bob_plus: f64,
    pub alice_deviation: f64,
    pub bob_deviation: f64,
    /// Binomial standard error of a fair marginal, `sqrt(1/(4n))`.
    pub sigma: f64,
    pub passed: bool,
}

/// Both marginals must lie within 5σ of 1/2.
pub fn no_signaling_check(table: &JointTable) -> Result<NoSignalingReport> {
    if table.runs < MIN_NO_SIGNALING_RUNS {
        return Err(Error::InsufficientRuns {
            required: MIN_NO_SIGNALING_RUNS,
            found: table.runs,
        });
    }
    let alice_plus = table.alice_marginal(Sign::Plus);
    let bob_plus = table.bob_marginal(Sign::Plus);
    let sigma = (0.25 / table.runs as f64).sqrt();
    let alice_deviation = (alice_plus - 0.5).abs();
    let bob_deviation = (bob_plus - 0.5).abs();
    Ok(NoSignalingReport {
        runs: table.runs,
        alice_plus,
        bob_plus,
        alice_deviation,
        bob_deviation,
        sigma,
        passed: alice_deviation <= SIGMA_BAND * sigma && bob_deviation <= SIGMA_BAND * sigma,
    })
}

/// Two-proportion z statistic for Alice's `+1` marginal under two of Bob's
/// settings. Returns `(z, passed)` with the 5σ band.
pub fn compare_alice_marginals(first: &JointTable, second: &JointTable) -> (f64, bool) {
    let p1 = first.alice_marginal(Sign::Plus);
    let p2 = second.alice_marginal(Sign::Plus);
    let n1 = first.runs as f64;
    let n2 = second.runs as f64;
    let pooled = (p1 * n1 + p2 * n2) / (n1 + n2);
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)).sqrt();
    let z = if se > 0.0 { (p1 - p2) / se } else { 0.0 };
    (z, z.abs() <= SIGMA_BAND)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub critical_value: f64,
    pub passed: bool,
}

/// Pearson χ² test that two samples share one categorical distribution.
///
/// Categories empty in both rows are dropped before counting degrees of freedom.
pub fn chi_square_homogeneity<const K: usize>(rows: &[[u64; K]; 2]) -> Result<ChiSquareReport> {
    let row_totals = rows.map(|r| r.iter().sum::<u64>() as f64);
    let grand: f64 = row_totals.iter().sum();
    if row_totals.contains(&0.0) {
        return Err(Error::InvalidArgument("χ² test needs two non-empty samples".into()));
    }
    let mut statistic = 0.0;
    let mut used = 0usize;
    for k in 0..K {
        let col = (rows[0][k] + rows[1][k]) as f64;
        if col == 0.0 {
            continue;
        }
        used += 1;
        for (r, row) in rows.iter().enumerate() {
            let expected = row_totals[r] * col / grand;
            let diff = row[k] as f64 - expected;
            statistic += diff * diff / expected;
        }
    }
    let df = used.saturating_sub(1);
    if df == 0 {
        return Ok(ChiSquareReport {
            statistic: 0.0,
            df: 0,
            p_value: 1.0,
            critical_value: 0.0,
            passed: true,
        });
    }
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let p_value = dist.sf(statistic);
    let critical_value = dist.inverse_cdf(1.0 - CHI_SQUARE_ALPHA);
    Ok(ChiSquareReport {
        statistic,
        df,
        p_value,
        critical_value,
        passed: statistic < critical_value,
    })
}

/// Counts configurations where the `A₊` pair of the two-instance model
/// differs from the single-world transcript.
pub fn equivalence_audit(n_configs: u64, seed: u64) -> u64 {
    equivalence_audit_with(n_configs, seed, None, is_swapped)
}

/// [`equivalence_audit`] with optional fixed settings and a replaceable swap rule.
///
/// Configuration `i` is drawn from `derive_substream(seed, i)`: `a`, `b`
/// (unless fixed), then the shared randomness.
pub fn equivalence_audit_with<F>(
    n_configs: u64,
    seed: u64,
    fixed_settings: Option<(UnitVector3, UnitVector3)>,
    swap_rule: F,
) -> u64
where
    F: Fn(Sign, Sign) -> bool,
{
    let mut rng = derive_substream(seed, 0);
    let mut mismatches = 0;
    for i in 0..n_configs {
        rng.reposition(i);
        let (a, b) = fixed_settings.unwrap_or_else(|| {
            let a = sample_unit_vector(&mut rng);
            (a, sample_unit_vector(&mut rng))
        });
        let sr = SharedRandomness::sample(&mut rng);
        let paired = referee_pair_with(
            alice_record(&a, &sr).referee_view(),
            bob_record(&b, &sr).referee_view(),
            &swap_rule,
        );
        let t = tb_run(&a, &b, &sr);
        if paired.pair(InstanceLabel::Plus) != (t.s_a, t.s_b) {
            mismatches += 1;
        }
    }
    mismatches
}

/// A party's local rule given `(own setting, remote setting, shared randomness)`.
/// Local rules ignore the second argument.
pub type PartyFn = dyn Fn(&UnitVector3, &UnitVector3, &SharedRandomness) -> PartyRecord + Sync;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LocalityReport {
    pub trials: u64,
    pub variations: usize,
    pub alice_failures: u64,
    pub bob_failures: u64,
    /// `(instance₊ outcome, message)` of Alice under two of Bob's settings.
    pub alice_chi_square: ChiSquareReport,
    /// `(instance₊ outcome, message)` of Bob under two of Alice's settings.
    pub bob_chi_square: ChiSquareReport,
    pub passed: bool,
}

pub fn locality_audit(n_trials: u64, chi_runs: u64, seed: u64) -> Result<LocalityReport> {
    let alice = |own: &UnitVector3, _: &UnitVector3, sr: &SharedRandomness| alice_record(own, sr);
    let bob = |own: &UnitVector3, _: &UnitVector3, sr: &SharedRandomness| bob_record(own, sr);
    locality_audit_with(n_trials, chi_runs, seed, &alice, &bob)
}

fn category(r: &PartyRecord) -> usize {
    2 * r.instance_plus().index() + r.message().index()
}

/// Structural and statistical locality checks against arbitrary party rules.
///
/// Structural: for each trial, a party's record must not change when only the
/// remote setting changes. Statistical: the distribution of a party's
/// `(instance₊, message)` must not depend on the remote setting, judged by a
/// χ² homogeneity test at [`CHI_SQUARE_ALPHA`]. The statistical records are
/// read back from the referee's output so the whole pipeline is exercised.
pub fn locality_audit_with(
    n_trials: u64,
    chi_runs: u64,
    seed: u64,
    alice: &PartyFn,
    bob: &PartyFn,
) -> Result<LocalityReport> {
    if chi_runs == 0 {
        return Err(Error::InsufficientRuns { required: 1, found: 0 });
    }
    let mut rng = derive_substream(seed, 0);
    let mut alice_failures = 0;
    let mut bob_failures = 0;
    for trial in 0..n_trials {
        rng.reposition(trial);
        let a = sample_unit_vector(&mut rng);
        let b = sample_unit_vector(&mut rng);
        let sr = SharedRandomness::sample(&mut rng);
        let alice_ref = alice(&a, &b, &sr);
        let bob_ref = bob(&b, &a, &sr);
        let mut alice_ok = true;
        let mut bob_ok = true;
        for _ in 0..LOCALITY_VARIATIONS {
            let remote = sample_unit_vector(&mut rng);
            alice_ok &= alice(&a, &remote, &sr) == alice_ref;
            bob_ok &= bob(&b, &remote, &sr) == bob_ref;
        }
        alice_failures += u64::from(!alice_ok);
        bob_failures += u64::from(!bob_ok);
    }

    // Settings for the statistical test come from a stream disjoint from the runs.
    let mut setting_rng = derive_substream(seed, u64::MAX);
    let fixed_a = sample_unit_vector(&mut setting_rng);
    let fixed_b = sample_unit_vector(&mut setting_rng);
    let remotes = [
        sample_unit_vector(&mut setting_rng),
        sample_unit_vector(&mut setting_rng),
    ];

    let mut alice_rows = [[0u64; 4]; 2];
    let mut bob_rows = [[0u64; 4]; 2];
    for (k, remote) in remotes.iter().enumerate() {
        let first = n_trials + k as u64 * chi_runs;
        for i in first..first + chi_runs {
            rng.reposition(i);
            let sr = SharedRandomness::sample(&mut rng);
            // Alice fixed at `fixed_a` facing Bob at `remote`.
            let ar = alice(&fixed_a, remote, &sr);
            let br = bob(remote, &fixed_a, &sr);
            let paired = referee_pair(ar.referee_view(), br.referee_view());
            let (s_a, _) = paired.pair(InstanceLabel::Plus);
            let seen = PartyRecord::new(s_a, paired.n_a, fixed_a);
            alice_rows[k][category(&seen)] += 1;
            // Bob fixed at `fixed_b` facing Alice at `remote`.
            let ar = alice(remote, &fixed_b, &sr);
            let br = bob(&fixed_b, remote, &sr);
            let paired = referee_pair(ar.referee_view(), br.referee_view());
            let bob_plus_label = if paired.swapped { InstanceLabel::Minus } else { InstanceLabel::Plus };
            let (_, s_b) = paired.pair(bob_plus_label);
            let seen = PartyRecord::new(s_b, paired.n_b, fixed_b);
            bob_rows[k][category(&seen)] += 1;
        }
    }
    let alice_chi_square = chi_square_homogeneity(&alice_rows)?;
    let bob_chi_square = chi_square_homogeneity(&bob_rows)?;
    Ok(LocalityReport {
        trials: n_trials,
        variations: LOCALITY_VARIATIONS,
        alice_failures,
        bob_failures,
        alice_chi_square,
        bob_chi_square,
        passed: alice_failures == 0
            && bob_failures == 0
            && alice_chi_square.passed
            && bob_chi_square.passed,
    })
}
