//! One-bit single-world protocol and Monte Carlo checks of the integrals
//! behind its correlation law.

use rand::Rng;
use serde::Serialize;

use crate::geometry::{sign_of, Sign, UnitVector3};
use crate::ledger::CommLedger;
use crate::rng::sample_unit_vector;

/// The two independent uniform directions shared by Alice and Bob.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SharedRandomness {
    pub x0: UnitVector3,
    pub x1: UnitVector3,
}

impl SharedRandomness {
    pub fn new(x0: UnitVector3, x1: UnitVector3) -> Self {
        Self { x0, x1 }
    }

    /// Draws `x0` then `x1`.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let x0 = sample_unit_vector(rng);
        let x1 = sample_unit_vector(rng);
        Self { x0, x1 }
    }

    pub fn negated(&self) -> Self {
        Self {
            x0: -self.x0,
            x1: -self.x1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TbTranscript {
    pub s_a: Sign,
    pub n_a: Sign,
    pub s_b: Sign,
    pub comm_bits: u32,
}

impl TbTranscript {
    pub fn ledger(&self) -> CommLedger {
        CommLedger::new(self.comm_bits, 0, 0, 0)
    }
}

/// Alice's outcome `sgn(a·x0)` and the bit `sgn(a·x0)·sgn(a·x1)` she sends.
#[inline]
pub fn tb_alice(a: &UnitVector3, sr: &SharedRandomness) -> (Sign, Sign) {
    let s_a = sign_of(a.dot(&sr.x0));
    let n_a = s_a * sign_of(a.dot(&sr.x1));
    (s_a, n_a)
}

/// Bob's outcome `-sgn(b·(x0 + n_A x1))`.
#[inline]
pub fn tb_bob(b: &UnitVector3, sr: &SharedRandomness, n_a: Sign) -> Sign {
    let x0 = sr.x0.as_vec();
    let x1 = sr.x1.as_vec();
    let shifted = match n_a {
        Sign::Plus => x0 + x1,
        Sign::Minus => x0 - x1,
    };
    -sign_of(b.dot_vec(&shifted))
}

#[inline]
pub fn tb_run(a: &UnitVector3, b: &UnitVector3, sr: &SharedRandomness) -> TbTranscript {
    let (s_a, n_a) = tb_alice(a, sr);
    let s_b = tb_bob(b, sr, n_a);
    TbTranscript {
        s_a,
        n_a,
        s_b,
        comm_bits: 1,
    }
}

/// Sample mean and standard error of the mean.
fn mean_and_stderr(sum: f64, sum_sq: f64, n: u64) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum_sq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

fn sphere_average<R, F>(n: u64, rng: &mut R, f: F) -> (f64, f64)
where
    R: Rng + ?Sized,
    F: Fn(&UnitVector3) -> f64,
{
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n {
        let v = f(&sample_unit_vector(rng));
        sum += v;
        sum_sq += v * v;
    }
    mean_and_stderr(sum, sum_sq, n)
}

#[inline]
fn heaviside(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Estimates `(1/π) ∫ d²x (-b·x) θ(b·x) θ(a·x)` over the unit sphere,
/// whose closed form is `-(1 + a·b)/2`.
///
/// The sphere has area 4π, so the integral is four times the uniform average.
/// Returns `(estimate, stderr)`.
pub fn ks_halfsphere_integral_mc<R: Rng + ?Sized>(
    a: &UnitVector3,
    b: &UnitVector3,
    n: u64,
    rng: &mut R,
) -> (f64, f64) {
    assert!(n >= 2, "need at least two samples");
    let (mean, se) = sphere_average(n, rng, |x| {
        let bx = b.dot(x);
        -bx * heaviside(bx) * heaviside(a.dot(x))
    });
    (4.0 * mean, 4.0 * se)
}

/// Estimates `(1/2π) ∫ d²x (-b·x) sgn(a·x)`, which equals `-a·b`.
pub fn proof_step_integral_mc<R: Rng + ?Sized>(
    a: &UnitVector3,
    b: &UnitVector3,
    n: u64,
    rng: &mut R,
) -> (f64, f64) {
    assert!(n >= 2, "need at least two samples");
    let (mean, se) = sphere_average(n, rng, |x| -b.dot(x) * sign_of(a.dot(x)).as_f64());
    (2.0 * mean, 2.0 * se)
}
