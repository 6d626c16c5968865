//! The local two-instance model.
//!
//! Each party branches into two instances labeled `+1` and `-1` carrying
//! opposite outcomes, and computes one bit from its own setting and the shared
//! random vectors. At the meeting point a referee pairs Alice's instances with
//! Bob's using only the two bits: instances with equal labels are paired,
//! unless both bits are `-1`, in which case the pairing is swapped (a local
//! PR box). Each run therefore ends with exactly two joint instances.

use rand::Rng;
use serde::Serialize;

use crate::framework::{InstanceSet, PairingMap};
use crate::geometry::{sign_of, Sign, UnitVector3};
use crate::ledger::CommLedger;
use crate::single_world::SharedRandomness;

/// Ledger of one run: one bit from each party, no real parameters.
pub const TWO_INSTANCE_LEDGER: CommLedger = CommLedger::new(1, 1, 0, 0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum InstanceLabel {
    Plus,
    Minus,
}

impl InstanceLabel {
    pub const BOTH: [InstanceLabel; 2] = [InstanceLabel::Plus, InstanceLabel::Minus];

    pub fn index(self) -> usize {
        match self {
            InstanceLabel::Plus => 0,
            InstanceLabel::Minus => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            InstanceLabel::Plus
        } else {
            InstanceLabel::Minus
        }
    }

    pub fn as_sign(self) -> Sign {
        match self {
            InstanceLabel::Plus => Sign::Plus,
            InstanceLabel::Minus => Sign::Minus,
        }
    }
}

/// One party's local state after measuring: outcomes of the `+1` and `-1`
/// instances and the message bit. The setting is kept for audits only and is
/// not part of what reaches the referee.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PartyRecord {
    instance_plus: Sign,
    message: Sign,
    setting: UnitVector3,
}

impl PartyRecord {
    pub fn new(instance_plus: Sign, message: Sign, setting: UnitVector3) -> Self {
        Self {
            instance_plus,
            message,
            setting,
        }
    }

    pub fn instance_plus(&self) -> Sign {
        self.instance_plus
    }

    /// Always the negation of [`Self::instance_plus`].
    pub fn instance_minus(&self) -> Sign {
        -self.instance_plus
    }

    pub fn outcome(&self, label: InstanceLabel) -> Sign {
        match label {
            InstanceLabel::Plus => self.instance_plus,
            InstanceLabel::Minus => -self.instance_plus,
        }
    }

    pub fn message(&self) -> Sign {
        self.message
    }

    pub fn setting(&self) -> UnitVector3 {
        self.setting
    }

    /// What the party carries to the meeting point.
    pub fn referee_view(&self) -> RefereeView {
        RefereeView {
            outcomes: [self.instance_plus, -self.instance_plus],
            message: self.message,
        }
    }

    pub fn as_instance_set(&self) -> InstanceSet<Sign, Sign> {
        InstanceSet::new(vec![self.instance_plus, -self.instance_plus], self.message)
            .expect("two instances")
    }
}

pub type AliceRecord = PartyRecord;
pub type BobRecord = PartyRecord;

/// Outcomes indexed by instance label, plus the message bit. Nothing else is
/// visible to the referee.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct RefereeView {
    pub outcomes: [Sign; 2],
    pub message: Sign,
}

/// Alice: `s_A = sgn(a·x0)` in instance `+1`, `-s_A` in instance `-1`,
/// message `n_A = sgn(a·x0)·sgn(a·x1)`.
#[inline]
pub fn alice_record(a: &UnitVector3, sr: &SharedRandomness) -> AliceRecord {
    let s_a = sign_of(a.dot(&sr.x0));
    let n_a = s_a * sign_of(a.dot(&sr.x1));
    PartyRecord::new(s_a, n_a, *a)
}

/// Bob: `s_B = -sgn(b·(x0 + x1))` in instance `+1`, `-s_B` in instance `-1`,
/// message `n_B = sgn(b·x₊)·sgn(b·x₋)` with `x± = x0 ± x1`.
#[inline]
pub fn bob_record(b: &UnitVector3, sr: &SharedRandomness) -> BobRecord {
    let x0 = sr.x0.as_vec();
    let x1 = sr.x1.as_vec();
    let plus = sign_of(b.dot_vec(&(x0 + x1)));
    let minus = sign_of(b.dot_vec(&(x0 - x1)));
    PartyRecord::new(-plus, plus * minus, *b)
}

/// True when the referee swaps the pairing: both bits equal `-1`.
#[inline]
pub fn is_swapped(n_a: Sign, n_b: Sign) -> bool {
    n_a.is_minus() && n_b.is_minus()
}

/// The label map `A_w -> B_{k(w)}` as a permutation of `{+1 -> 0, -1 -> 1}`.
pub fn pairing_rule(n_a: Sign, n_b: Sign) -> PairingMap {
    if is_swapped(n_a, n_b) {
        PairingMap::swap2()
    } else {
        PairingMap::identity(2).expect("two instances")
    }
}

/// Result of the meeting: two joint instances indexed by Alice's labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PairedOutcomes {
    /// `pairs[0]` is the joint outcome of instance `A₊`, `pairs[1]` of `A₋`.
    pub pairs: [(Sign, Sign); 2],
    pub n_a: Sign,
    pub n_b: Sign,
    pub swapped: bool,
    pub ledger: CommLedger,
}

impl PairedOutcomes {
    pub fn pair(&self, alice_label: InstanceLabel) -> (Sign, Sign) {
        self.pairs[alice_label.index()]
    }

    pub fn m(&self) -> usize {
        self.pairs.len()
    }

    /// The Bob label paired with each Alice label.
    pub fn pairing(&self) -> PairingMap {
        pairing_rule(self.n_a, self.n_b)
    }

    pub fn as_instance_set(&self) -> InstanceSet<(Sign, Sign)> {
        InstanceSet::from_values(self.pairs.to_vec()).expect("two instances")
    }

    /// The observer's instance, chosen with equal probability.
    pub fn sample_instance<R: Rng + ?Sized>(&self, rng: &mut R) -> (InstanceLabel, (Sign, Sign)) {
        let label = if rng.random::<bool>() {
            InstanceLabel::Plus
        } else {
            InstanceLabel::Minus
        };
        (label, self.pair(label))
    }
}

/// The referee step. Works on [`RefereeView`]s, so settings and shared
/// randomness are out of reach by construction.
pub fn referee_pair(alice: RefereeView, bob: RefereeView) -> PairedOutcomes {
    referee_pair_with(alice, bob, is_swapped)
}

/// [`referee_pair`] with an arbitrary swap rule, used for mutation checks.
pub fn referee_pair_with<F>(alice: RefereeView, bob: RefereeView, swap_rule: F) -> PairedOutcomes
where
    F: Fn(Sign, Sign) -> bool,
{
    let swapped = swap_rule(alice.message, bob.message);
    let pairs = if swapped {
        [
            (alice.outcomes[0], bob.outcomes[1]),
            (alice.outcomes[1], bob.outcomes[0]),
        ]
    } else {
        [
            (alice.outcomes[0], bob.outcomes[0]),
            (alice.outcomes[1], bob.outcomes[1]),
        ]
    };
    PairedOutcomes {
        pairs,
        n_a: alice.message,
        n_b: bob.message,
        swapped,
        ledger: TWO_INSTANCE_LEDGER,
    }
}

pub fn meet(alice: &AliceRecord, bob: &BobRecord) -> PairedOutcomes {
    referee_pair(alice.referee_view(), bob.referee_view())
}

#[inline]
pub fn paired_run(a: &UnitVector3, b: &UnitVector3, sr: &SharedRandomness) -> PairedOutcomes {
    meet(&alice_record(a, sr), &bob_record(b, sr))
}
