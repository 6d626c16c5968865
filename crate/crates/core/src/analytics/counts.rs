use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Sign;

/// How many table entries each run contributes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CountConvention {
    /// One sampled instance per run.
    OnePerRun,
    /// Every instance counted with weight one; readout divides by `m`.
    AllInstances { m: u32 },
}

impl CountConvention {
    pub fn per_run(&self) -> u64 {
        match self {
            CountConvention::OnePerRun => 1,
            CountConvention::AllInstances { m } => u64::from(*m),
        }
    }
}

/// Integer 2×2 joint outcome table indexed `[sA.index()][sB.index()]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct JointCounts {
    cells: [[u64; 2]; 2],
    total_runs: u64,
    convention: CountConvention,
}

impl JointCounts {
    pub fn empty(convention: CountConvention) -> Self {
        Self {
            cells: [[0; 2]; 2],
            total_runs: 0,
            convention,
        }
    }

    pub fn from_cells(cells: [[u64; 2]; 2], total_runs: u64, convention: CountConvention) -> Result<Self> {
        let sum: u64 = cells.iter().flatten().sum();
        let expected = total_runs.checked_mul(convention.per_run());
        if expected != Some(sum) {
            return Err(Error::InvalidArgument(format!(
                "cell sum {sum} does not match {total_runs} runs under {convention:?}"
            )));
        }
        Ok(Self {
            cells,
            total_runs,
            convention,
        })
    }

    /// Records one run from its counted outcome pairs.
    #[inline]
    pub fn record_run(&mut self, pairs: &[(Sign, Sign)]) {
        debug_assert_eq!(pairs.len() as u64, self.convention.per_run());
        for &(s_a, s_b) in pairs {
            self.cells[s_a.index()][s_b.index()] += 1;
        }
        self.total_runs += 1;
    }

    pub fn cells(&self) -> [[u64; 2]; 2] {
        self.cells
    }

    pub fn count(&self, s_a: Sign, s_b: Sign) -> u64 {
        self.cells[s_a.index()][s_b.index()]
    }

    pub fn total_runs(&self) -> u64 {
        self.total_runs
    }

    pub fn convention(&self) -> CountConvention {
        self.convention
    }

    fn total_entries(&self) -> u64 {
        self.total_runs * self.convention.per_run()
    }

    pub fn probability(&self, s_a: Sign, s_b: Sign) -> f64 {
        self.count(s_a, s_b) as f64 / self.total_entries() as f64
    }

    /// `<sA sB>` read from the same table.
    pub fn correlation(&self) -> f64 {
        let [[pp, pm], [mp, mm]] = self.cells;
        let agree = (pp + mm) as f64;
        let disagree = (pm + mp) as f64;
        (agree - disagree) / self.total_entries() as f64
    }

    pub fn table(&self) -> JointTable {
        let mut probs = [[0.0; 2]; 2];
        for s_a in Sign::BOTH {
            for s_b in Sign::BOTH {
                probs[s_a.index()][s_b.index()] = self.probability(s_a, s_b);
            }
        }
        JointTable {
            probs,
            runs: self.total_runs,
        }
    }
}

/// Cellwise sum of two tables with the same convention.
pub fn merge_stats(s1: &JointCounts, s2: &JointCounts) -> Result<JointCounts> {
    if s1.convention != s2.convention {
        return Err(Error::ConventionMismatch);
    }
    let mut cells = s1.cells;
    for (row, other) in cells.iter_mut().zip(&s2.cells) {
        for (c, o) in row.iter_mut().zip(other) {
            *c += o;
        }
    }
    Ok(JointCounts {
        cells,
        total_runs: s1.total_runs + s2.total_runs,
        convention: s1.convention,
    })
}

/// Joint probabilities with the number of runs behind them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JointTable {
    pub probs: [[f64; 2]; 2],
    pub runs: u64,
}

impl JointTable {
    pub fn alice_marginal(&self, s_a: Sign) -> f64 {
        self.probs[s_a.index()].iter().sum()
    }

    pub fn bob_marginal(&self, s_b: Sign) -> f64 {
        self.probs.iter().map(|row| row[s_b.index()]).sum()
    }
}
