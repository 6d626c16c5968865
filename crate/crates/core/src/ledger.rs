use serde::{Deserialize, Serialize};

/// Classical resources carried from each party to the meeting point per run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CommLedger {
    pub bits_from_alice: u32,
    pub bits_from_bob: u32,
    pub real_params_from_alice: u32,
    pub real_params_from_bob: u32,
}

impl CommLedger {
    pub const fn new(
        bits_from_alice: u32,
        bits_from_bob: u32,
        real_params_from_alice: u32,
        real_params_from_bob: u32,
    ) -> Self {
        Self {
            bits_from_alice,
            bits_from_bob,
            real_params_from_alice,
            real_params_from_bob,
        }
    }

    pub fn total_bits(&self) -> u32 {
        self.bits_from_alice + self.bits_from_bob
    }

    pub fn total_real_params(&self) -> u32 {
        self.real_params_from_alice + self.real_params_from_bob
    }

    /// True when only finitely many bits are carried.
    pub fn is_finite_information(&self) -> bool {
        self.total_real_params() == 0
    }
}

impl std::fmt::Display for CommLedger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "bits {}+{}, reals {}+{}",
            self.bits_from_alice, self.bits_from_bob, self.real_params_from_alice, self.real_params_from_bob
        )
    }
}
