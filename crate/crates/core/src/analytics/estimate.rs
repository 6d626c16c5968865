//! Seeded, partition-independent Monte Carlo estimation.
//!
//! Run `i` always draws from `derive_substream(seed, i)`: first `x0`, then
//! `x1`, then (for the two-instance protocols) one boolean selecting the
//! observer's instance. Runs are split into contiguous index ranges, each
//! range is reduced to integer counts, and the counts are added in range
//! order, so every statistic is bit-identical for any partition count.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::counts::{merge_stats, CountConvention, JointCounts};
use crate::branching::{dh_comm_cost, dh_meeting, DhVariant};
use crate::error::{Error, Result};
use crate::geometry::{Sign, UnitVector3};
use crate::ledger::CommLedger;
use crate::rng::{derive_substream, RngStream};
use crate::single_world::{tb_run, SharedRandomness, TbTranscript};
use crate::two_instance::{paired_run, InstanceLabel, PairedOutcomes, TWO_INSTANCE_LEDGER};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    TonerBacon,
    TwoInstanceSampled,
    TwoInstanceCounted,
    DhExact,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [
        Protocol::TonerBacon,
        Protocol::TwoInstanceSampled,
        Protocol::TwoInstanceCounted,
        Protocol::DhExact,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::TonerBacon => "toner-bacon",
            Protocol::TwoInstanceSampled => "two-instance-sampled",
            Protocol::TwoInstanceCounted => "two-instance-counted",
            Protocol::DhExact => "dh-exact",
        }
    }

    pub fn is_two_instance(&self) -> bool {
        matches!(self, Protocol::TwoInstanceSampled | Protocol::TwoInstanceCounted)
    }

    pub fn ledger(&self) -> CommLedger {
        match self {
            Protocol::TonerBacon => CommLedger::new(1, 0, 0, 0),
            Protocol::TwoInstanceSampled | Protocol::TwoInstanceCounted => TWO_INSTANCE_LEDGER,
            Protocol::DhExact => dh_comm_cost(DhVariant::Bloch).ledger,
        }
    }

    pub fn convention(&self) -> CountConvention {
        match self {
            Protocol::TwoInstanceCounted => CountConvention::AllInstances { m: 2 },
            _ => CountConvention::OnePerRun,
        }
    }
}

impl FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::UnknownProtocol(s.to_owned()))
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything one simulated run produced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RunOutcome {
    SingleWorld {
        sr: SharedRandomness,
        transcript: TbTranscript,
    },
    TwoInstance {
        sr: SharedRandomness,
        paired: PairedOutcomes,
        sampled: InstanceLabel,
    },
}

impl RunOutcome {
    pub fn shared_randomness(&self) -> &SharedRandomness {
        match self {
            RunOutcome::SingleWorld { sr, .. } | RunOutcome::TwoInstance { sr, .. } => sr,
        }
    }
}

/// Simulates one run on a stream already positioned at its run index.
#[inline]
pub fn simulate_run(protocol: Protocol, a: &UnitVector3, b: &UnitVector3, rng: &mut RngStream) -> Result<RunOutcome> {
    let sr = SharedRandomness::sample(rng);
    match protocol {
        Protocol::TonerBacon => Ok(RunOutcome::SingleWorld {
            sr,
            transcript: tb_run(a, b, &sr),
        }),
        Protocol::TwoInstanceSampled | Protocol::TwoInstanceCounted => {
            let paired = paired_run(a, b, &sr);
            let (sampled, _) = paired.sample_instance(rng);
            Ok(RunOutcome::TwoInstance { sr, paired, sampled })
        }
        Protocol::DhExact => Err(Error::InvalidArgument(
            "dh-exact has no per-run simulation".into(),
        )),
    }
}

/// Applies `f` to every run in `range` in index order.
pub fn for_each_run<F>(
    protocol: Protocol,
    a: &UnitVector3,
    b: &UnitVector3,
    seed: u64,
    range: Range<u64>,
    mut f: F,
) -> Result<()>
where
    F: FnMut(u64, &RunOutcome),
{
    let mut rng = derive_substream(seed, range.start);
    for i in range {
        rng.reposition(i);
        let out = simulate_run(protocol, a, b, &mut rng)?;
        f(i, &out);
    }
    Ok(())
}

/// Contiguous, ordered split of `range` into at most `parts` pieces.
pub fn partition_range(range: Range<u64>, parts: usize) -> Vec<Range<u64>> {
    let len = range.end.saturating_sub(range.start);
    let parts = (parts.max(1) as u64).min(len.max(1));
    let base = len / parts;
    let extra = len % parts;
    let mut out = Vec::with_capacity(parts as usize);
    let mut start = range.start;
    for k in 0..parts {
        let size = base + u64::from(k < extra);
        out.push(start..start + size);
        start += size;
    }
    out
}

/// Maps each partition in parallel and returns the results in partition order.
pub fn map_partitions<T, F>(range: Range<u64>, parts: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync,
{
    partition_range(range, parts).into_par_iter().map(&f).collect()
}

pub fn default_partitions() -> usize {
    rayon::current_num_threads().max(1)
}

/// Joint counts over the runs in `range`.
pub fn count_runs(
    protocol: Protocol,
    a: &UnitVector3,
    b: &UnitVector3,
    seed: u64,
    range: Range<u64>,
    parts: usize,
) -> Result<JointCounts> {
    let convention = protocol.convention();
    let partials = map_partitions(range, parts, |r| {
        let mut counts = JointCounts::empty(convention);
        for_each_run(protocol, a, b, seed, r, |_, out| match (protocol, out) {
            (_, RunOutcome::SingleWorld { transcript, .. }) => {
                counts.record_run(&[(transcript.s_a, transcript.s_b)])
            }
            (Protocol::TwoInstanceCounted, RunOutcome::TwoInstance { paired, .. }) => {
                counts.record_run(&paired.pairs)
            }
            (_, RunOutcome::TwoInstance { paired, sampled, .. }) => {
                counts.record_run(&[paired.pair(*sampled)])
            }
        })
        .map(|()| counts)
    });
    partials
        .into_iter()
        .try_fold(JointCounts::empty(convention), |acc, p| merge_stats(&acc, &p?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub value: f64,
    pub stderr: f64,
    pub n_runs: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointEstimate {
    pub protocol: Protocol,
    pub a: UnitVector3,
    pub b: UnitVector3,
    pub runs: u64,
    pub seed: u64,
    /// Integer table for sampled protocols; `None` for the exact baseline.
    pub counts: Option<JointCounts>,
    /// `probs[sA.index()][sB.index()]`.
    pub probs: [[f64; 2]; 2],
    pub cell_stderr: [[f64; 2]; 2],
    pub corr: EstimateReport,
    pub ledger: CommLedger,
}

impl JointEstimate {
    pub fn probability(&self, s_a: Sign, s_b: Sign) -> f64 {
        self.probs[s_a.index()][s_b.index()]
    }

    pub fn table(&self) -> super::counts::JointTable {
        super::counts::JointTable {
            probs: self.probs,
            runs: self.runs,
        }
    }
}

/// A contiguous block of run indices under one master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunPlan {
    pub seed: u64,
    pub first_run: u64,
    pub runs: u64,
    pub partitions: usize,
}

impl RunPlan {
    pub fn new(seed: u64, runs: u64) -> Self {
        Self {
            seed,
            first_run: 0,
            runs,
            partitions: default_partitions(),
        }
    }

    pub fn with_partitions(mut self, partitions: usize) -> Self {
        self.partitions = partitions;
        self
    }

    pub fn starting_at(mut self, first_run: u64) -> Self {
        self.first_run = first_run;
        self
    }

    pub fn range(&self) -> Range<u64> {
        self.first_run..self.first_run + self.runs
    }
}

pub fn estimate_joint(
    protocol: Protocol,
    a: &UnitVector3,
    b: &UnitVector3,
    n_runs: u64,
    seed: u64,
) -> Result<JointEstimate> {
    estimate_joint_planned(protocol, a, b, RunPlan::new(seed, n_runs))
}

pub fn estimate_joint_planned(
    protocol: Protocol,
    a: &UnitVector3,
    b: &UnitVector3,
    plan: RunPlan,
) -> Result<JointEstimate> {
    if plan.runs == 0 {
        return Err(Error::InsufficientRuns {
            required: 1,
            found: 0,
        });
    }
    if protocol == Protocol::DhExact {
        return Ok(JointEstimate::exact(a, b, plan.runs, plan.seed));
    }
    let counts = count_runs(protocol, a, b, plan.seed, plan.range(), plan.partitions)?;
    Ok(JointEstimate::from_counts(protocol, a, b, plan.seed, counts))
}

impl JointEstimate {
    /// Summary of an already counted run set.
    pub fn from_counts(
        protocol: Protocol,
        a: &UnitVector3,
        b: &UnitVector3,
        seed: u64,
        counts: JointCounts,
    ) -> Self {
        let runs = counts.total_runs();
        let n = runs as f64;
        let probs = counts.table().probs;
        let e = counts.correlation();
        // Per-run products are ±1, and both instances of a two-instance run share the product.
        let se = ((1.0 - e * e).max(0.0) / n).sqrt();
        Self {
            protocol,
            a: *a,
            b: *b,
            runs,
            seed,
            counts: Some(counts),
            probs,
            cell_stderr: probs.map(|row| row.map(|p| (p * (1.0 - p) / n).sqrt())),
            corr: EstimateReport {
                value: e,
                stderr: se,
                n_runs: runs,
                seed,
            },
            ledger: protocol.ledger(),
        }
    }

    /// Exact weighted-branch table, reported as if from `runs` runs.
    pub fn exact(a: &UnitVector3, b: &UnitVector3, runs: u64, seed: u64) -> Self {
        let m = dh_meeting(a, b);
        let [[pp, pm], [mp, mm]] = m.weights;
        Self {
            protocol: Protocol::DhExact,
            a: *a,
            b: *b,
            runs,
            seed,
            counts: None,
            probs: m.weights,
            cell_stderr: [[0.0; 2]; 2],
            corr: EstimateReport {
                value: pp + mm - pm - mp,
                stderr: 0.0,
                n_runs: runs,
                seed,
            },
            ledger: Protocol::DhExact.ledger(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::sample_unit_vector;

    #[test]
    fn partition_ranges_cover_exactly() {
        for parts in [1, 3, 4, 16, 100] {
            let r = partition_range(5..105, parts);
            assert_eq!(r.first().unwrap().start, 5);
            assert_eq!(r.last().unwrap().end, 105);
            for w in r.windows(2) {
                assert_eq!(w[0].end, w[1].start);
            }
            assert!(r.len() <= parts);
        }
        assert_eq!(partition_range(0..3, 16).len(), 3);
    }

    #[test]
    fn unknown_protocol_rejected() {
        assert_eq!(
            "bogus".parse::<Protocol>().unwrap_err(),
            Error::UnknownProtocol("bogus".into())
        );
        for p in Protocol::ALL {
            assert_eq!(p.as_str().parse::<Protocol>().unwrap(), p);
        }
    }

    #[test]
    fn dh_exact_matches_joint_law() {
        let mut rng = derive_substream(41, 0);
        let a = sample_unit_vector(&mut rng);
        let b = sample_unit_vector(&mut rng);
        let e = estimate_joint(Protocol::DhExact, &a, &b, 10, 0).unwrap();
        for s_a in Sign::BOTH {
            for s_b in Sign::BOTH {
                let want = (1.0 - (s_a * s_b).as_f64() * a.dot(&b)) / 4.0;
                assert!((e.probability(s_a, s_b) - want).abs() < 1e-15);
            }
        }
        assert!(e.counts.is_none());
        assert_eq!(e.ledger, CommLedger::new(0, 0, 2, 2));
    }

    #[test]
    fn orthogonal_settings_give_quarter_cells() {
        let n = 1_000_000;
        let e = estimate_joint(Protocol::TwoInstanceSampled, &UnitVector3::Z, &UnitVector3::X, n, 9).unwrap();
        for row in e.probs {
            for p in row {
                assert!((p - 0.25).abs() < 5.0 * 0.000433);
            }
        }
    }

    #[test]
    fn partitioning_does_not_change_counts() {
        let a = UnitVector3::new(0.1, 0.3, 0.9).unwrap();
        let b = UnitVector3::new(-0.4, 0.2, 0.5).unwrap();
        for protocol in [Protocol::TonerBacon, Protocol::TwoInstanceSampled, Protocol::TwoInstanceCounted] {
            let base = estimate_joint_planned(protocol, &a, &b, RunPlan::new(5, 20_011).with_partitions(1)).unwrap();
            for parts in [2, 4, 7, 16] {
                let e = estimate_joint_planned(protocol, &a, &b, RunPlan::new(5, 20_011).with_partitions(parts)).unwrap();
                assert_eq!(e.counts, base.counts);
                assert_eq!(e.corr.value.to_bits(), base.corr.value.to_bits());
            }
        }
    }

    #[test]
    fn counted_correlation_equals_single_world_run_for_run() {
        // A₊ reproduces the single-world transcript and A₋ carries the same product.
        let a = UnitVector3::new(0.7, 0.0, 0.7).unwrap();
        let b = UnitVector3::new(0.0, 0.6, -0.8).unwrap();
        let tb = estimate_joint(Protocol::TonerBacon, &a, &b, 50_000, 3).unwrap();
        let counted = estimate_joint(Protocol::TwoInstanceCounted, &a, &b, 50_000, 3).unwrap();
        assert_eq!(tb.corr.value, counted.corr.value);
    }

    #[test]
    fn zero_runs_rejected() {
        assert!(estimate_joint(Protocol::TonerBacon, &UnitVector3::Z, &UnitVector3::Z, 0, 1).is_err());
    }
}
