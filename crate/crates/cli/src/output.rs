//! CSV rows and JSON summaries.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! values always serialize to equal bytes.

use std::fmt::Write as _;
use std::io::{self, Write};

use bellpair::analytics::{
    analytic_corr, for_each_run, map_partitions, merge_stats, partition_range, ChshReport, ChshSettings,
    ChshSource, JointCounts, JointEstimate, Protocol, RunOutcome,
};
use bellpair::branching::dh_meeting;
use bellpair::geometry::{Sign, UnitVector3};
use bellpair::two_instance::InstanceLabel;
use bellpair::CommLedger;
use serde::Serialize;

/// Runs simulated and written per block; bounds the row buffer.
pub const BLOCK_RUNS: u64 = 1 << 16;

pub const TWO_INSTANCE_COLUMNS: [&str; 11] = [
    "run_index",
    "sA_plus",
    "sB_plus",
    "sA_minus",
    "sB_minus",
    "nA",
    "nB",
    "swapped",
    "sampled_instance",
    "sampled_sA",
    "sampled_sB",
];
pub const SINGLE_WORLD_COLUMNS: [&str; 4] = ["run_index", "sA", "sB", "nA"];
pub const EXACT_COLUMNS: [&str; 3] = ["sA", "sB", "weight"];
pub const HIDDEN_COLUMNS: [&str; 6] = ["x0_x", "x0_y", "x0_z", "x1_x", "x1_y", "x1_z"];
pub const SWEEP_COLUMNS: [&str; 8] = ["dot", "pp", "pm", "mp", "mm", "corr", "corr_stderr", "analytic_corr"];

pub fn run_header(protocol: Protocol, dump_hidden: bool) -> String {
    let mut cols: Vec<&str> = match protocol {
        Protocol::TonerBacon => SINGLE_WORLD_COLUMNS.to_vec(),
        Protocol::TwoInstanceSampled | Protocol::TwoInstanceCounted => TWO_INSTANCE_COLUMNS.to_vec(),
        Protocol::DhExact => return EXACT_COLUMNS.join(","),
    };
    if dump_hidden {
        cols.extend(HIDDEN_COLUMNS);
    }
    cols.join(",")
}

fn bit(b: bool) -> u8 {
    u8::from(b)
}

/// Appends one CSV line for run `index`.
pub fn push_run_row(buf: &mut String, index: u64, outcome: &RunOutcome, dump_hidden: bool) {
    match outcome {
        RunOutcome::SingleWorld { transcript: t, .. } => {
            let _ = write!(buf, "{index},{},{},{}", t.s_a.value(), t.s_b.value(), t.n_a.value());
        }
        RunOutcome::TwoInstance { paired, sampled, .. } => {
            let (ap, bp) = paired.pair(InstanceLabel::Plus);
            let (am, bm) = paired.pair(InstanceLabel::Minus);
            let (sa, sb) = paired.pair(*sampled);
            let _ = write!(
                buf,
                "{index},{},{},{},{},{},{},{},{},{},{}",
                ap.value(),
                bp.value(),
                am.value(),
                bm.value(),
                paired.n_a.value(),
                paired.n_b.value(),
                bit(paired.swapped),
                sampled.as_sign().value(),
                sa.value(),
                sb.value(),
            );
        }
    }
    if dump_hidden {
        let sr = outcome.shared_randomness();
        for v in [sr.x0, sr.x1] {
            for c in v.to_array() {
                let _ = write!(buf, ",{c:?}");
            }
        }
    }
    buf.push('\n');
}

fn record(protocol: Protocol, counts: &mut JointCounts, outcome: &RunOutcome) {
    match outcome {
        RunOutcome::SingleWorld { transcript, .. } => counts.record_run(&[(transcript.s_a, transcript.s_b)]),
        RunOutcome::TwoInstance { paired, sampled, .. } => {
            if protocol == Protocol::TwoInstanceCounted {
                counts.record_run(&paired.pairs)
            } else {
                counts.record_run(&[paired.pair(*sampled)])
            }
        }
    }
}

/// Simulates `runs` runs, streaming rows to `csv` in run-index order when given,
/// and returns the summary built from the same runs.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    protocol: Protocol,
    a: &UnitVector3,
    b: &UnitVector3,
    runs: u64,
    seed: u64,
    partitions: usize,
    dump_hidden: bool,
    mut csv: Option<&mut dyn Write>,
) -> Result<JointEstimate, SimulateError> {
    if protocol == Protocol::DhExact {
        if let Some(out) = csv {
            writeln!(out, "{}", run_header(protocol, dump_hidden))?;
            let m = dh_meeting(a, b);
            for s_a in Sign::BOTH {
                for s_b in Sign::BOTH {
                    writeln!(out, "{},{},{:?}", s_a.value(), s_b.value(), m.weight(s_a, s_b))?;
                }
            }
        }
        return Ok(JointEstimate::exact(a, b, runs, seed));
    }
    if let Some(out) = csv.as_deref_mut() {
        writeln!(out, "{}", run_header(protocol, dump_hidden))?;
    }
    let convention = protocol.convention();
    let write_rows = csv.is_some();
    let mut total = JointCounts::empty(convention);
    for block in partition_range(0..runs, runs.div_ceil(BLOCK_RUNS) as usize) {
        let parts = map_partitions(block, partitions, |r| {
            let mut counts = JointCounts::empty(convention);
            let mut rows = String::new();
            for_each_run(protocol, a, b, seed, r, |i, out| {
                record(protocol, &mut counts, out);
                if write_rows {
                    push_run_row(&mut rows, i, out, dump_hidden);
                }
            })
            .map(|()| (counts, rows))
        });
        for part in parts {
            let (counts, rows) = part?;
            total = merge_stats(&total, &counts)?;
            if let Some(out) = csv.as_deref_mut() {
                out.write_all(rows.as_bytes())?;
            }
        }
    }
    Ok(JointEstimate::from_counts(protocol, a, b, seed, total))
}

#[derive(Debug, thiserror::Error)]
pub enum SimulateError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Core(#[from] bellpair::Error),
}

#[derive(Debug, Serialize, PartialEq)]
pub struct Cells {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

impl Cells {
    pub fn from_table(t: [[f64; 2]; 2]) -> Self {
        Self {
            pp: t[0][0],
            pm: t[0][1],
            mp: t[1][0],
            mm: t[1][1],
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SimulationSummary {
    pub protocol: Protocol,
    pub a: UnitVector3,
    pub b: UnitVector3,
    pub runs: u64,
    pub seed: u64,
    pub joint: Cells,
    pub joint_stderr: Cells,
    pub analytic_joint: Cells,
    pub corr: f64,
    pub corr_stderr: f64,
    pub analytic_corr: f64,
    /// Integer cell counts behind `joint`; absent for the exact baseline.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<CountCells>,
    pub ledger: CommLedger,
}

#[derive(Debug, Serialize)]
pub struct CountCells {
    pub pp: u64,
    pub pm: u64,
    pub mp: u64,
    pub mm: u64,
}

impl SimulationSummary {
    pub fn new(est: &JointEstimate) -> Self {
        let dot = est.a.dot(&est.b);
        let analytic = [[(1.0 - dot) / 4.0, (1.0 + dot) / 4.0], [(1.0 + dot) / 4.0, (1.0 - dot) / 4.0]];
        Self {
            protocol: est.protocol,
            a: est.a,
            b: est.b,
            runs: est.runs,
            seed: est.seed,
            joint: Cells::from_table(est.probs),
            joint_stderr: Cells::from_table(est.cell_stderr),
            analytic_joint: Cells::from_table(analytic),
            corr: est.corr.value,
            corr_stderr: est.corr.stderr,
            // Adding zero folds -0.0 into 0.0.
            analytic_corr: analytic_corr(&est.a, &est.b) + 0.0,
            counts: est.counts.map(|c| {
                let [[pp, pm], [mp, mm]] = c.cells();
                CountCells { pp, pm, mp, mm }
            }),
            ledger: est.ledger,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ChshTerm {
    pub alice: &'static str,
    pub bob: &'static str,
    pub corr: f64,
    pub stderr: f64,
}

#[derive(Debug, Serialize)]
pub struct ChshSummary {
    pub source: String,
    pub preset: String,
    pub settings: ChshSettings,
    /// Runs per correlation; 0 for the analytic source.
    pub runs: u64,
    pub seed: u64,
    #[serde(rename = "S")]
    pub s: f64,
    pub chsh_stderr: f64,
    pub correlations: Vec<ChshTerm>,
    /// `null` for the analytic source, which exchanges nothing.
    pub ledger: Option<CommLedger>,
}

impl ChshSummary {
    pub fn new(source: ChshSource, preset: &str, settings: ChshSettings, runs: u64, seed: u64, r: &ChshReport) -> Self {
        let names = [("a", "b"), ("a", "b_prime"), ("a_prime", "b"), ("a_prime", "b_prime")];
        let (runs, ledger) = match source {
            ChshSource::Analytic => (0, None),
            ChshSource::Protocol(p) => (runs, Some(p.ledger())),
        };
        Self {
            source: source.to_string(),
            preset: preset.to_owned(),
            settings,
            runs,
            seed,
            s: r.s,
            chsh_stderr: r.stderr,
            correlations: names
                .iter()
                .zip(&r.terms)
                .map(|(&(alice, bob), t)| ChshTerm {
                    alice,
                    bob,
                    corr: t.value,
                    stderr: t.stderr,
                })
                .collect(),
            ledger,
        }
    }
}

/// One sweep row in [`SWEEP_COLUMNS`] order.
pub fn push_sweep_row(buf: &mut String, dot: f64, est: &JointEstimate) {
    let p = est.probs;
    let _ = writeln!(
        buf,
        "{dot:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
        p[0][0],
        p[0][1],
        p[1][0],
        p[1][1],
        est.corr.value,
        est.corr.stderr,
        0.0 - dot,
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headers_match_documented_columns() {
        assert_eq!(
            run_header(Protocol::TwoInstanceSampled, false),
            "run_index,sA_plus,sB_plus,sA_minus,sB_minus,nA,nB,swapped,sampled_instance,sampled_sA,sampled_sB"
        );
        assert_eq!(run_header(Protocol::TonerBacon, false), "run_index,sA,sB,nA");
        assert!(run_header(Protocol::TonerBacon, true).ends_with(",x1_z"));
        assert_eq!(run_header(Protocol::DhExact, true), "sA,sB,weight");
    }

    #[test]
    fn rows_satisfy_antipodal_invariant() {
        let mut csv = Vec::new();
        simulate(
            Protocol::TwoInstanceSampled,
            &UnitVector3::Z,
            &UnitVector3::X,
            500,
            3,
            2,
            false,
            Some(&mut csv),
        )
        .unwrap();
        let text = String::from_utf8(csv).unwrap();
        let mut lines = text.lines();
        lines.next();
        let mut n = 0;
        for (i, line) in lines.enumerate() {
            let f: Vec<i64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            assert_eq!(f[0], i as i64);
            assert_eq!(f[1], -f[3]);
            assert_eq!(f[2], -f[4]);
            assert_eq!(f[7], i64::from(f[5] == -1 && f[6] == -1));
            let (sa, sb) = if f[8] == 1 { (f[1], f[2]) } else { (f[3], f[4]) };
            assert_eq!((f[9], f[10]), (sa, sb));
            n += 1;
        }
        assert_eq!(n, 500);
    }

    #[test]
    fn csv_and_summary_agree() {
        let mut csv = Vec::new();
        let est = simulate(Protocol::TonerBacon, &UnitVector3::Z, &UnitVector3::Z, 300, 1, 3, false, Some(&mut csv))
            .unwrap();
        let text = String::from_utf8(csv).unwrap();
        let anti = text.lines().skip(1).filter(|l| {
            let f: Vec<&str> = l.split(',').collect();
            f[1] != f[2]
        });
        assert_eq!(anti.count(), 300);
        assert_eq!(est.corr.value, -1.0);
    }
}
