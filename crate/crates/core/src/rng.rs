//! Deterministic random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed (expanded to
//! a 256-bit key with `SeedableRng::seed_from_u64`, which uses the PCG32
//! expansion fixed by `rand_core`) and positioned on the ChaCha stream whose
//! 64-bit nonce equals the stream index. ChaCha streams under one key are
//! independent, so each simulation run can own the stream named by its run
//! index and the results do not depend on how runs are split across workers.
//!
//! The full generator state is `(master_seed, stream_index, word_pos)`; see
//! [`RngState`].

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::{UnitVector3, Vec3, MIN_NORM};

/// Identifier recorded alongside serialized states.
pub const ALGORITHM: &str = "chacha8-seed_from_u64-stream";

#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

/// Serializable snapshot of an [`RngStream`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub algorithm: String,
    pub master_seed: u64,
    pub stream_index: u64,
    /// Position in 32-bit words from the start of the stream.
    pub word_pos: u128,
}

impl RngStream {
    pub fn algorithm(&self) -> &'static str {
        ALGORITHM
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    pub fn state(&self) -> RngState {
        RngState {
            algorithm: ALGORITHM.to_owned(),
            master_seed: self.master_seed,
            stream_index: self.stream_index,
            word_pos: self.rng.get_word_pos(),
        }
    }

    /// Rebuilds a stream from a snapshot; `None` if the algorithm differs.
    pub fn restore(state: &RngState) -> Option<Self> {
        if state.algorithm != ALGORITHM {
            return None;
        }
        let mut s = derive_substream(state.master_seed, state.stream_index);
        s.rng.set_word_pos(state.word_pos);
        Some(s)
    }

    /// Moves this stream onto another run index under the same master seed.
    ///
    /// Equivalent to `derive_substream(self.master_seed(), index)` but reuses
    /// the expanded key.
    pub fn reposition(&mut self, index: u64) {
        self.stream_index = index;
        self.rng.set_stream(index);
        self.rng.set_word_pos(0);
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// The stream owned by run `run_index` under `master_seed`.
pub fn derive_substream(master_seed: u64, run_index: u64) -> RngStream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run_index);
    RngStream {
        master_seed,
        stream_index: run_index,
        rng,
    }
}

/// Uniform direction on the sphere from a normalized triple of standard normals.
pub fn sample_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> UnitVector3 {
    loop {
        let v = Vec3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        if v.norm() >= MIN_NORM {
            return UnitVector3::normalized_unchecked(v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_inputs_same_stream() {
        let mut a = derive_substream(7, 0);
        let mut b = derive_substream(7, 0);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn neighbouring_run_indices_differ() {
        let mut a = derive_substream(7, 0);
        let mut b = derive_substream(7, 1);
        let differs = (0..10_000).any(|_| a.next_u64() != b.next_u64());
        assert!(differs);
    }

    #[test]
    fn seed_sensitivity() {
        let mut a = derive_substream(7, 0);
        let mut b = derive_substream(8, 0);
        let xs: Vec<u64> = (0..16).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..16).map(|_| b.next_u64()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn state_round_trip_resumes_sequence() {
        let mut a = derive_substream(99, 12);
        for _ in 0..37 {
            a.next_u32();
        }
        let snap = a.state();
        let mut b = RngStream::restore(&snap).unwrap();
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let bad = RngState {
            algorithm: "mt19937".into(),
            ..snap
        };
        assert!(RngStream::restore(&bad).is_none());
    }

    #[test]
    fn reposition_matches_fresh_derivation() {
        let mut a = derive_substream(5, 3);
        a.next_u64();
        a.reposition(11);
        let mut b = derive_substream(5, 11);
        for _ in 0..50 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_eq!(a.stream_index(), 11);
    }

    #[test]
    fn sampled_vectors_are_unit() {
        let mut rng = derive_substream(1, 0);
        for _ in 0..10_000 {
            let v = sample_unit_vector(&mut rng);
            assert!((v.dot(&v) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn first_moments_vanish() {
        // Each component has variance 1/3 on the uniform sphere.
        let n = 1_000_000;
        let mut rng = derive_substream(2024, 0);
        let mut sum = [0.0f64; 3];
        let mut zz = 0.0;
        for _ in 0..n {
            let v = sample_unit_vector(&mut rng);
            sum[0] += v.x();
            sum[1] += v.y();
            sum[2] += v.z();
            zz += v.z() * v.z();
        }
        let tol = 5.0 * (1.0 / 3.0f64).sqrt() / (n as f64).sqrt();
        for s in sum {
            assert!((s / n as f64).abs() < tol, "mean {}", s / n as f64);
        }
        // Var[z^2] = E[z^4] - 1/9 = 1/5 - 1/9 = 4/45.
        let sigma = (4.0 / 45.0f64).sqrt() / (n as f64).sqrt();
        assert!((zz / n as f64 - 1.0 / 3.0).abs() < 5.0 * sigma);
    }

    #[test]
    fn projections_are_uniform_on_interval() {
        // Archimedes: u·x is uniform on [-1, 1]. One-sample Kolmogorov–Smirnov.
        let n = 1_000_000usize;
        let u = UnitVector3::new(0.3, -0.5, 0.8).unwrap();
        let mut rng = derive_substream(77, 3);
        let mut t: Vec<f64> = (0..n).map(|_| u.dot(&sample_unit_vector(&mut rng))).collect();
        t.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d: f64 = 0.0;
        for (i, &ti) in t.iter().enumerate() {
            let cdf = (ti + 1.0) / 2.0;
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            d = d.max((cdf - lo).abs()).max((hi - cdf).abs());
        }
        // Asymptotic critical value at alpha = 1e-3: sqrt(ln(2/alpha) / 2) / sqrt(n).
        let crit = ((2.0f64 / 1e-3).ln() / 2.0).sqrt() / (n as f64).sqrt();
        assert!(d < crit, "KS statistic {d} >= {crit}");
    }

    #[test]
    fn sign_of_projection_is_balanced() {
        let n = 1_000_000u64;
        let u = UnitVector3::new(-0.2, 0.9, 0.1).unwrap();
        let mut rng = derive_substream(3, 0);
        let plus = (0..n)
            .filter(|_| u.dot(&sample_unit_vector(&mut rng)) >= 0.0)
            .count() as f64;
        let sigma = (0.25 / n as f64).sqrt();
        assert!((plus / n as f64 - 0.5).abs() < 5.0 * sigma);
    }
}
