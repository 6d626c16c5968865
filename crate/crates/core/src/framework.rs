//! Multi-instance bookkeeping: labeled instances, occupation numbers,
//! unweighted counting, observer sampling and one-to-one pairing.
//!
//! A macroscopic quantity is held by `m` coexisting instances, each with its
//! own outcome value. Probabilities are never attached to instances; they come
//! from counting how many instances carry a value and averaging over runs.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// The `m` labeled instances of a quantity together with protocol side data.
///
/// `eta` is owned by the protocol that built the set; nothing in this module
/// reads it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InstanceSet<V, E = ()> {
    values: Vec<V>,
    pub eta: E,
}

impl<V, E> InstanceSet<V, E> {
    pub fn new(values: Vec<V>, eta: E) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInstanceSet);
        }
        Ok(Self { values, eta })
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn get(&self, index: usize) -> Option<&V> {
        self.values.get(index)
    }
}

impl<V> InstanceSet<V, ()> {
    pub fn from_values(values: Vec<V>) -> Result<Self> {
        Self::new(values, ())
    }
}

/// Permutation-invariant form of an [`InstanceSet`]: how many instances hold each value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OccupationState<V, E = ()> {
    domain: Vec<V>,
    counts: Vec<usize>,
    pub eta: E,
}

impl<V: PartialEq, E> OccupationState<V, E> {
    pub fn new(domain: Vec<V>, counts: Vec<usize>, eta: E) -> Result<Self> {
        if domain.len() != counts.len() {
            return Err(Error::InvalidArgument(format!(
                "domain has {} values but {} counts were given",
                domain.len(),
                counts.len()
            )));
        }
        check_distinct(&domain)?;
        Ok(Self { domain, counts, eta })
    }

    pub fn domain(&self) -> &[V] {
        &self.domain
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Total occupation, equal to the instance count `m`.
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

fn check_distinct<V: PartialEq>(domain: &[V]) -> Result<()> {
    for (i, v) in domain.iter().enumerate() {
        if domain[..i].contains(v) {
            return Err(Error::DuplicateDomainValue);
        }
    }
    Ok(())
}

pub fn to_occupation<V, E>(set: &InstanceSet<V, E>, domain: &[V]) -> Result<OccupationState<V, E>>
where
    V: Clone + PartialEq,
    E: Clone,
{
    check_distinct(domain)?;
    let mut counts = vec![0usize; domain.len()];
    for (index, value) in set.values.iter().enumerate() {
        let slot = domain
            .iter()
            .position(|d| d == value)
            .ok_or(Error::DomainMismatch { index })?;
        counts[slot] += 1;
    }
    debug_assert_eq!(counts.iter().sum::<usize>(), set.m());
    Ok(OccupationState {
        domain: domain.to_vec(),
        counts,
        eta: set.eta.clone(),
    })
}

/// Canonical labeled form: domain values in domain order, each repeated by its count.
pub fn from_occupation<V, E>(occ: &OccupationState<V, E>) -> Result<InstanceSet<V, E>>
where
    V: Clone,
    E: Clone,
{
    let values: Vec<V> = occ
        .domain
        .iter()
        .zip(&occ.counts)
        .flat_map(|(v, &n)| std::iter::repeat_n(v.clone(), n))
        .collect();
    InstanceSet::new(values, occ.eta.clone())
}

/// Unweighted counting rule: the fraction of instances carrying each value,
/// averaged over the runs of an ensemble.
///
/// Counts are accumulated as integers and divided once, so the result does not
/// depend on how the ensemble was assembled.
pub fn outcome_distribution<'a, V, E, I>(ensemble: I) -> Result<BTreeMap<V, f64>>
where
    V: Clone + Ord + 'a,
    E: 'a,
    I: IntoIterator<Item = &'a InstanceSet<V, E>>,
{
    let mut m: Option<usize> = None;
    let mut runs = 0u64;
    let mut tally: BTreeMap<V, u64> = BTreeMap::new();
    for set in ensemble {
        match m {
            None => m = Some(set.m()),
            Some(expected) if expected != set.m() => {
                return Err(Error::InstanceCountMismatch {
                    expected,
                    found: set.m(),
                })
            }
            Some(_) => {}
        }
        runs += 1;
        for v in &set.values {
            *tally.entry(v.clone()).or_insert(0) += 1;
        }
    }
    let Some(m) = m else {
        return Err(Error::InvalidArgument("empty ensemble".into()));
    };
    let denom = (m as u64 * runs) as f64;
    Ok(tally
        .into_iter()
        .map(|(v, n)| (v, n as f64 / denom))
        .collect())
}

/// The instance an observer finds themself in, drawn with equal probability.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ObserverSample<V> {
    pub instance_index: usize,
    pub value: V,
}

pub fn select_instance_uniform<V: Clone, E, R: Rng + ?Sized>(
    set: &InstanceSet<V, E>,
    rng: &mut R,
) -> ObserverSample<V> {
    let instance_index = if set.m() == 1 {
        0
    } else {
        rng.random_range(0..set.m())
    };
    ObserverSample {
        instance_index,
        value: set.values[instance_index].clone(),
    }
}

/// A bijection `i -> mapping[i]` on `0..m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairingMap {
    mapping: Vec<usize>,
}

impl PairingMap {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let m = mapping.len();
        if m == 0 {
            return Err(Error::EmptyInstanceSet);
        }
        let mut seen = vec![false; m];
        for &j in &mapping {
            if j >= m || seen[j] {
                return Err(Error::NotABijection(m));
            }
            seen[j] = true;
        }
        Ok(Self { mapping })
    }

    pub fn identity(m: usize) -> Result<Self> {
        Self::new((0..m).collect())
    }

    /// The transposition of the two instances of an `m = 2` set.
    pub fn swap2() -> Self {
        Self { mapping: vec![1, 0] }
    }

    pub fn m(&self) -> usize {
        self.mapping.len()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.mapping[i]
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.mapping
    }
}

/// Combines two local quantities instance by instance.
///
/// The result is a direct sum: instance `i` holds `(a[i], b[pairing(i)])`, so
/// the combined set still has `m` instances rather than `m²`.
pub fn combine_local<V, W, E, F>(
    a: &InstanceSet<V, E>,
    b: &InstanceSet<W, F>,
    pairing: &PairingMap,
) -> Result<InstanceSet<(V, W), (E, F)>>
where
    V: Clone,
    W: Clone,
    E: Clone,
    F: Clone,
{
    if a.m() != pairing.m() || b.m() != pairing.m() {
        return Err(Error::PairingCardinality {
            pairing: pairing.m(),
            left: a.m(),
            right: b.m(),
        });
    }
    let values = a
        .values
        .iter()
        .enumerate()
        .map(|(i, va)| (va.clone(), b.values[pairing.apply(i)].clone()))
        .collect();
    InstanceSet::new(values, (a.eta.clone(), b.eta.clone()))
}

/// Normalized branch weights `|ψ_i|²`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchWeights(Vec<f64>);

impl BranchWeights {
    pub const TOLERANCE: f64 = 1e-12;

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if weights.is_empty()
            || weights.iter().any(|w| !w.is_finite() || *w < 0.0)
            || (sum - 1.0).abs() > Self::TOLERANCE
        {
            return Err(Error::InvalidWeights(sum));
        }
        Ok(Self(weights))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Inverse-CDF draw of a branch label.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &w) in self.0.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        // Rounding left the cumulative sum just under 1.
        self.0.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BornLimitReport {
    pub m: usize,
    pub repetitions: u64,
    /// Mean occupation fraction `n_i / m` per branch.
    pub mean_occupation: Vec<f64>,
    /// Standard error of each mean occupation fraction.
    pub occupation_stderr: Vec<f64>,
    pub max_deviation: f64,
    /// Fraction of repetitions in which the branch held at least one instance.
    pub realization_frequency: Vec<f64>,
    /// `m · w_i`, an upper bound on the realization probability.
    pub realization_bound: Vec<f64>,
}

/// Samples `m` i.i.d. branch labels per repetition and tracks how the
/// occupation fractions approach the weights.
pub fn born_limit_demo<R: Rng + ?Sized>(
    weights: &BranchWeights,
    m: usize,
    repetitions: u64,
    rng: &mut R,
) -> Result<BornLimitReport> {
    if m == 0 {
        return Err(Error::EmptyInstanceSet);
    }
    if repetitions == 0 {
        return Err(Error::InvalidArgument("repetitions must be positive".into()));
    }
    let k = weights.len();
    let mut sum = vec![0u64; k];
    let mut sum_sq = vec![0u128; k];
    let mut realized = vec![0u64; k];
    let mut counts = vec![0u64; k];
    for _ in 0..repetitions {
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..m {
            counts[weights.sample(rng)] += 1;
        }
        for i in 0..k {
            sum[i] += counts[i];
            sum_sq[i] += u128::from(counts[i]) * u128::from(counts[i]);
            if counts[i] > 0 {
                realized[i] += 1;
            }
        }
    }
    let r = repetitions as f64;
    let mf = m as f64;
    let mean_occupation: Vec<f64> = sum.iter().map(|&s| s as f64 / (r * mf)).collect();
    let occupation_stderr = sum
        .iter()
        .zip(&sum_sq)
        .zip(&mean_occupation)
        .map(|((_, &sq), &mean)| {
            let second = sq as f64 / (r * mf * mf);
            let var = (second - mean * mean).max(0.0);
            (var / r).sqrt()
        })
        .collect();
    let max_deviation = mean_occupation
        .iter()
        .zip(weights.as_slice())
        .map(|(n, w)| (n - w).abs())
        .fold(0.0, f64::max);
    Ok(BornLimitReport {
        m,
        repetitions,
        mean_occupation,
        occupation_stderr,
        max_deviation,
        realization_frequency: realized.iter().map(|&x| x as f64 / r).collect(),
        realization_bound: weights.as_slice().iter().map(|w| mf * w).collect(),
    })
}
