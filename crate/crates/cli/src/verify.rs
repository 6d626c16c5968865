//! The verification battery behind the `verify` command.

use std::f64::consts::SQRT_2;

use bellpair::analytics::{
    analytic_corr, analytic_joint, chsh_with_partitions, equivalence_audit, estimate_joint_planned,
    locality_audit, no_signaling_check, ChshSettings, ChshSource, JointEstimate, Protocol, RunPlan, SIGMA_BAND,
};
use bellpair::branching::{
    dh_comm_cost, dh_meeting, DhVariant, DESCRIPTOR_REAL_PARAMS, DESCRIPTOR_TOTAL_INDEPENDENT,
};
use bellpair::framework::{born_limit_demo, from_occupation, to_occupation, BranchWeights, InstanceSet, PairingMap};
use bellpair::geometry::{Sign, UnitVector3};
use bellpair::single_world::{ks_halfsphere_integral_mc, SharedRandomness};
use bellpair::two_instance::{paired_run, InstanceLabel};
use bellpair::{derive_substream, sample_unit_vector, CommLedger};
use rand::Rng;

use crate::output::{simulate, SimulationSummary};

/// Stream indices reserved for drawing battery inputs, far from any run index.
const SETTINGS_STREAM: u64 = u64::MAX - 1;
const STATE_STREAM: u64 = u64::MAX - 2;
const BRANCH_STREAM: u64 = u64::MAX - 3;
const NO_SIGNALING_STREAM: u64 = u64::MAX - 4;
const KS_STREAM_BASE: u64 = u64::MAX - 16;

pub const JOINT_PAIRS: usize = 20;
pub const NO_SIGNALING_PAIRS: usize = 10;
pub const EQUIVALENCE_CONFIGS: u64 = 100_000;
pub const LOCALITY_TRIALS: u64 = 10_000;
pub const KS_SAMPLES: u64 = 10_000_000;
pub const OCCUPATION_STATES: usize = 10_000;
pub const FAINT_BRANCH_REPS: u64 = 1_000_000;
/// Cap on the run count used for the byte-identity check.
pub const REPRODUCIBILITY_RUNS: u64 = 50_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn random_pairs(seed: u64, n: usize, stream: u64) -> Vec<(UnitVector3, UnitVector3)> {
    let mut rng = derive_substream(seed, stream);
    (0..n)
        .map(|_| (sample_unit_vector(&mut rng), sample_unit_vector(&mut rng)))
        .collect()
}

fn run_pairs(
    pairs: &[(UnitVector3, UnitVector3)],
    runs: u64,
    seed: u64,
    partitions: usize,
) -> bellpair::Result<Vec<JointEstimate>> {
    pairs
        .iter()
        .enumerate()
        .map(|(k, (a, b))| {
            let plan = RunPlan::new(seed, runs)
                .starting_at(k as u64 * runs)
                .with_partitions(partitions);
            estimate_joint_planned(Protocol::TwoInstanceSampled, a, b, plan)
        })
        .collect()
}

fn joint_law(estimates: &[JointEstimate]) -> bellpair::Result<Check> {
    let mut worst: f64 = 0.0;
    for e in estimates {
        let n = e.runs as f64;
        for s_a in Sign::BOTH {
            for s_b in Sign::BOTH {
                let p = analytic_joint(&e.a, &e.b, s_a, s_b)?;
                let sigma = (p * (1.0 - p) / n).sqrt();
                let z = (e.probability(s_a, s_b) - p).abs() / sigma;
                worst = worst.max(if z.is_nan() { f64::INFINITY } else { z });
            }
        }
    }
    Ok(check(
        "joint law",
        worst <= SIGMA_BAND,
        format!("{} pairs, worst cell {worst:.2}σ", estimates.len()),
    ))
}

fn correlation_law(estimates: &[JointEstimate]) -> Check {
    let mut worst: f64 = 0.0;
    for e in estimates {
        let want = analytic_corr(&e.a, &e.b);
        let sigma = ((1.0 - want * want) / e.runs as f64).sqrt();
        worst = worst.max((e.corr.value - want).abs() / sigma);
    }
    check(
        "correlation law",
        worst <= SIGMA_BAND,
        format!("{} pairs, worst {worst:.2}σ", estimates.len()),
    )
}

fn chsh_check(runs: u64, seed: u64, partitions: usize) -> bellpair::Result<Check> {
    let settings = ChshSettings::optimal();
    let exact = chsh_with_partitions(ChshSource::Analytic, &settings, 0, seed, partitions)?;
    let mc = chsh_with_partitions(
        ChshSource::Protocol(Protocol::TwoInstanceSampled),
        &settings,
        runs,
        seed,
        partitions,
    )?;
    let analytic_ok = (exact.s - 2.0 * SQRT_2).abs() <= 1e-12;
    let mc_ok = (mc.s - exact.s).abs() <= SIGMA_BAND * mc.stderr;
    Ok(check(
        "CHSH",
        analytic_ok && mc_ok,
        format!("analytic S = {:.12}, sampled S = {:.4} ± {:.4}", exact.s, mc.s, mc.stderr),
    ))
}

fn equivalence_check(seed: u64) -> Check {
    let mismatches = equivalence_audit(EQUIVALENCE_CONFIGS, seed);
    check(
        "single-world equivalence",
        mismatches == 0,
        format!("{mismatches} mismatches in {EQUIVALENCE_CONFIGS} configurations"),
    )
}

fn ledger_check() -> Check {
    let two = Protocol::TwoInstanceSampled.ledger();
    let bloch = dh_comm_cost(DhVariant::Bloch);
    let desc = dh_comm_cost(DhVariant::Descriptor);
    let passed = two == CommLedger::new(1, 1, 0, 0)
        && Protocol::TwoInstanceCounted.ledger() == two
        && bloch.ledger == CommLedger::new(0, 0, 2, 2)
        && desc.ledger == CommLedger::new(0, 0, DESCRIPTOR_REAL_PARAMS, DESCRIPTOR_REAL_PARAMS)
        && DESCRIPTOR_REAL_PARAMS == 12
        && desc.total_independent == Some(DESCRIPTOR_TOTAL_INDEPENDENT)
        && DESCRIPTOR_TOTAL_INDEPENDENT == 15;
    check(
        "communication ledger",
        passed,
        format!(
            "two-instance {two}; bloch {}; descriptor {} ({} independent)",
            bloch.ledger,
            desc.ledger,
            desc.total_independent.unwrap_or(0)
        ),
    )
}

fn ks_check(seed: u64) -> Check {
    let a = UnitVector3::Z;
    let mut worst: f64 = 0.0;
    let mut passed = true;
    for (k, dot) in [1.0f64, 0.5, 0.0, -1.0].into_iter().enumerate() {
        let b = UnitVector3::new((1.0 - dot * dot).max(0.0).sqrt(), 0.0, dot).expect("unit");
        let mut rng = derive_substream(seed, KS_STREAM_BASE + k as u64);
        let (est, se) = ks_halfsphere_integral_mc(&a, &b, KS_SAMPLES, &mut rng);
        let want = -(1.0 + dot) / 2.0;
        let diff = (est - want).abs();
        // At a·b = -1 the integrand vanishes identically, so the estimate is exact.
        let ok = if se == 0.0 { diff == 0.0 } else { diff <= SIGMA_BAND * se };
        passed &= ok;
        if se > 0.0 {
            worst = worst.max(diff / se);
        }
    }
    check(
        "Kochen-Specker integral",
        passed,
        format!("{KS_SAMPLES} samples at a·b ∈ {{1, 1/2, 0, -1}}, worst {worst:.2}σ"),
    )
}

fn no_signaling(runs: u64, seed: u64, partitions: usize) -> bellpair::Result<Check> {
    let pairs = random_pairs(seed, NO_SIGNALING_PAIRS, NO_SIGNALING_STREAM);
    let offset = JOINT_PAIRS as u64 * runs;
    let mut passed = true;
    let mut worst: f64 = 0.0;
    for (k, (a, b)) in pairs.iter().enumerate() {
        let plan = RunPlan::new(seed, runs)
            .starting_at(offset + k as u64 * runs)
            .with_partitions(partitions);
        let e = estimate_joint_planned(Protocol::TwoInstanceSampled, a, b, plan)?;
        let r = no_signaling_check(&e.table())?;
        passed &= r.passed;
        worst = worst.max(r.alice_deviation.max(r.bob_deviation) / r.sigma);
        let m = dh_meeting(a, b);
        for s in Sign::BOTH {
            passed &= (m.alice_marginal(s) - 0.5).abs() <= 1e-12;
            passed &= (m.bob_marginal(s) - 0.5).abs() <= 1e-12;
        }
    }
    Ok(check(
        "no-signaling",
        passed,
        format!("{NO_SIGNALING_PAIRS} pairs, worst {worst:.2}σ; exact baseline marginals 1/2"),
    ))
}

fn locality(runs: u64, seed: u64) -> bellpair::Result<Check> {
    let r = locality_audit(LOCALITY_TRIALS, runs, seed)?;
    Ok(check(
        "locality",
        r.passed,
        format!(
            "{} trials × {} variations: {} + {} failures; χ² p = {:.3}, {:.3}",
            r.trials, r.variations, r.alice_failures, r.bob_failures, r.alice_chi_square.p_value, r.bob_chi_square.p_value
        ),
    ))
}

fn bookkeeping(runs: u64, seed: u64) -> bellpair::Result<Check> {
    let mut failures = 0u64;
    let mut rng = derive_substream(seed, STATE_STREAM);
    let n_runs = runs.min(100_000);
    for _ in 0..n_runs {
        let a = sample_unit_vector(&mut rng);
        let b = sample_unit_vector(&mut rng);
        let sr = SharedRandomness::sample(&mut rng);
        let p = paired_run(&a, &b, &sr);
        let bijective = PairingMap::new(p.pairing().as_slice().to_vec()).is_ok();
        let (ap, bp) = p.pair(InstanceLabel::Plus);
        let (am, bm) = p.pair(InstanceLabel::Minus);
        if p.m() != 2 || p.as_instance_set().m() != 2 || !bijective || am != -ap || bm != -bp {
            failures += 1;
        }
    }
    let domain = Sign::BOTH.to_vec();
    for _ in 0..OCCUPATION_STATES {
        let m = rng.random_range(1..=8usize);
        let values: Vec<Sign> = (0..m).map(|_| if rng.random() { Sign::Plus } else { Sign::Minus }).collect();
        let set = InstanceSet::from_values(values.clone())?;
        let occ = to_occupation(&set, &domain)?;
        let back = from_occupation(&occ)?;
        let again = to_occupation(&back, &domain)?;
        let mut sorted = values;
        sorted.sort();
        if back.values() != sorted.as_slice() || again != occ {
            failures += 1;
        }
    }
    let weights = BranchWeights::new(vec![0.99, 0.01])?;
    let mut brng = derive_substream(seed, BRANCH_STREAM);
    let report = born_limit_demo(&weights, 2, FAINT_BRANCH_REPS, &mut brng)?;
    let freq = report.realization_frequency[1];
    let bound = report.realization_bound[1];
    let sigma = (freq * (1.0 - freq) / FAINT_BRANCH_REPS as f64).sqrt();
    let faint_ok = freq <= bound + SIGMA_BAND * sigma;
    Ok(check(
        "instance bookkeeping",
        failures == 0 && faint_ok,
        format!(
            "{failures} failures over {n_runs} runs and {OCCUPATION_STATES} states; faint branch {freq:.5} ≤ {bound}"
        ),
    ))
}

fn reproducibility(runs: u64, seed: u64) -> Result<Check, crate::CliError> {
    let runs = runs.min(REPRODUCIBILITY_RUNS);
    let a = UnitVector3::new(0.3, -0.5, 0.8).expect("unit");
    let b = UnitVector3::new(-0.6, 0.1, 0.2).expect("unit");
    let mut outputs = Vec::new();
    for parts in [1usize, 4, 16] {
        let mut csv = Vec::new();
        let est = simulate(Protocol::TwoInstanceSampled, &a, &b, runs, seed, parts, true, Some(&mut csv))?;
        let json = serde_json::to_string_pretty(&SimulationSummary::new(&est)).expect("serializable");
        let chsh = chsh_with_partitions(
            ChshSource::Protocol(Protocol::TwoInstanceCounted),
            &ChshSettings::optimal(),
            runs / 4 + 1,
            seed,
            parts,
        )?;
        outputs.push((csv, json, chsh.s.to_bits()));
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    Ok(check(
        "reproducibility",
        same,
        format!("{runs} runs at 1/4/16 partitions"),
    ))
}

/// Runs every check with `runs` runs per setting pair.
pub fn run_battery(runs: u64, seed: u64, partitions: usize) -> Result<Vec<Check>, crate::CliError> {
    let pairs = random_pairs(seed, JOINT_PAIRS, SETTINGS_STREAM);
    let estimates = run_pairs(&pairs, runs, seed, partitions)?;
    Ok(vec![
        joint_law(&estimates)?,
        correlation_law(&estimates),
        chsh_check(runs, seed.wrapping_add(1), partitions)?,
        equivalence_check(seed),
        ledger_check(),
        ks_check(seed),
        no_signaling(runs, seed, partitions)?,
        locality(runs, seed)?,
        bookkeeping(runs, seed)?,
        reproducibility(runs, seed)?,
    ])
}

pub fn render_table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("{tag}  {:<width$}  {}\n", c.name, c.detail));
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    out.push_str(&format!("{} checks, {failed} failed\n", checks.len()));
    out
}
