//! Weighted-branch baseline: each party splits locally into two equal-weight
//! branches and the branches are paired at the meeting point with weights
//! given by the singlet joint law. Exact, no sampling.

use serde::Serialize;

use crate::geometry::{Sign, UnitVector3};
use crate::ledger::CommLedger;

/// Real parameters needed to transport a Bloch direction.
pub const BLOCH_REAL_PARAMS: u32 = 2;

/// Per-party descriptor parameters for two qubits: `4² - 4`.
pub const DESCRIPTOR_REAL_PARAMS: u32 = 4 * 4 - 4;

/// Independent parameters of a two-qubit descriptor pair: `4² - 1`.
pub const DESCRIPTOR_TOTAL_INDEPENDENT: u32 = 4 * 4 - 1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedBranchSet {
    pub branches: Vec<(Sign, f64)>,
    /// Real parameters carried to the meeting point (the Bloch vector's polar and azimuthal angles).
    pub carried: Vec<f64>,
}

impl WeightedBranchSet {
    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|(_, w)| w).sum()
    }
}

pub fn dh_local(setting: &UnitVector3) -> WeightedBranchSet {
    let theta = setting.z().clamp(-1.0, 1.0).acos();
    let phi = setting.y().atan2(setting.x());
    WeightedBranchSet {
        branches: vec![(Sign::Plus, 0.5), (Sign::Minus, 0.5)],
        carried: vec![theta, phi],
    }
}

fn joint_weight(a: &UnitVector3, b: &UnitVector3, s_a: Sign, s_b: Sign) -> f64 {
    let dot = a.dot(b).clamp(-1.0, 1.0);
    (1.0 - (s_a * s_b).as_f64() * dot) / 4.0
}

/// Distribution of Bob's outcome given Alice's, as `[P(s_B = +1), P(s_B = -1)]`.
pub fn dh_conditional(s_a: Sign, a: &UnitVector3, b: &UnitVector3) -> [f64; 2] {
    let marginal = dh_local(a).branches[s_a.index()].1;
    Sign::BOTH.map(|s_b| joint_weight(a, b, s_a, s_b) / marginal)
}

/// The four paired branches, `weights[sA.index()][sB.index()]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeetingBranches {
    pub weights: [[f64; 2]; 2],
}

impl MeetingBranches {
    pub fn weight(&self, s_a: Sign, s_b: Sign) -> f64 {
        self.weights[s_a.index()][s_b.index()]
    }

    pub fn alice_marginal(&self, s_a: Sign) -> f64 {
        self.weights[s_a.index()].iter().sum()
    }

    pub fn bob_marginal(&self, s_b: Sign) -> f64 {
        self.weights.iter().map(|row| row[s_b.index()]).sum()
    }
}

pub fn dh_meeting(a: &UnitVector3, b: &UnitVector3) -> MeetingBranches {
    let mut weights = [[0.0; 2]; 2];
    for s_a in Sign::BOTH {
        for s_b in Sign::BOTH {
            weights[s_a.index()][s_b.index()] = joint_weight(a, b, s_a, s_b);
        }
    }
    MeetingBranches { weights }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DhVariant {
    Bloch,
    Descriptor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DhCost {
    pub ledger: CommLedger,
    /// Independent parameters of the joint descriptor, when the variant defines one.
    pub total_independent: Option<u32>,
}

pub fn dh_comm_cost(variant: DhVariant) -> DhCost {
    match variant {
        DhVariant::Bloch => DhCost {
            ledger: CommLedger::new(0, 0, BLOCH_REAL_PARAMS, BLOCH_REAL_PARAMS),
            total_independent: None,
        },
        DhVariant::Descriptor => DhCost {
            ledger: CommLedger::new(0, 0, DESCRIPTOR_REAL_PARAMS, DESCRIPTOR_REAL_PARAMS),
            total_independent: Some(DESCRIPTOR_TOTAL_INDEPENDENT),
        },
    }
}
