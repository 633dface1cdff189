//! Depolarizing two-way channel models, protocol states, Alice's decoding
//! POVM and the resulting decode-probability tables.
//!
//! Joint `AT` states live on `C^d (x) C^d`; basis vector `|a, t>` has index
//! `a * d + t`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::linalg::{identity, min_eigenvalue, projector, real, root_of_unity, CMatrix, CVector, DensityMatrix};
use crate::scalar::{xlog2x, Real};

/// How the noise of the return channel relates to the forward channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelMode {
    /// The return trip does not add noise beyond a single depolarization.
    Dependent,
    /// Two independent depolarizing channels.
    Independent,
}

impl ChannelMode {
    pub fn short_name(self) -> &'static str {
        match self {
            ChannelMode::Dependent => "dep",
            ChannelMode::Independent => "indep",
        }
    }
}

impl fmt::Display for ChannelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ChannelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dep" | "dependent" => Ok(ChannelMode::Dependent),
            "indep" | "ind" | "independent" => Ok(ChannelMode::Independent),
            other => invalid(format!("unknown channel mode '{other}' (expected dep or indep)")),
        }
    }
}

/// Depolarization rate, channel mode, vacuum probability and detector
/// efficiency. The key-rate analysis never reads `eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelScenario<T> {
    pub q: T,
    pub mode: ChannelMode,
    pub mu: T,
    pub eta: T,
}

impl<T: Real> ChannelScenario<T> {
    pub fn new(q: T, mode: ChannelMode, mu: T, eta: T) -> Result<Self> {
        let unit = |x: T| x >= T::zero() && x < T::one();
        if !unit(q) {
            return invalid(format!("depolarization rate {q} outside [0, 1)"));
        }
        if !unit(mu) {
            return invalid(format!("vacuum probability {mu} outside [0, 1)"));
        }
        if !(eta > T::zero() && eta <= T::one()) {
            return invalid(format!("detector efficiency {eta} outside (0, 1]"));
        }
        Ok(Self { q, mode, mu, eta })
    }

    /// Lossless channel with perfect detectors.
    pub fn depolarizing(q: T, mode: ChannelMode) -> Result<Self> {
        Self::new(q, mode, T::zero(), T::one())
    }

    pub fn with_vacuum(self, mu: T) -> Result<Self> {
        Self::new(self.q, self.mode, mu, self.eta)
    }

    pub fn with_efficiency(self, eta: T) -> Result<Self> {
        Self::new(self.q, self.mode, self.mu, eta)
    }

    pub fn is_lossy(&self) -> bool {
        self.mu > T::zero() || self.eta < T::one()
    }
}

/// Expected test-round error: `mu + (1 - mu) Q (1 - 1/d)`, which reduces to
/// `Q (1 - 1/d)` without loss.
pub fn expected_test_error<T: Real>(scenario: &ChannelScenario<T>, d: u32) -> Result<T> {
    let df = dim_as::<T>(d)?;
    let mu = scenario.mu;
    Ok(mu + (T::one() - mu) * scenario.q * (T::one() - df.recip()))
}

/// Conditional distribution of Alice's decoded digit given Bob's: `x` on the
/// diagonal and `y` on each of the `d - 1` off-diagonal outcomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeTable<T> {
    pub d: u32,
    pub p_correct: T,
    pub p_wrong_each: T,
}

impl<T: Real> DecodeTable<T> {
    /// Table with total error probability `raw_error` spread uniformly.
    pub fn from_raw_error(d: u32, raw_error: T) -> Result<Self> {
        let df = dim_as::<T>(d)?;
        if !(raw_error >= T::zero() && raw_error <= T::one()) {
            return invalid(format!("raw key error {raw_error} outside [0, 1]"));
        }
        Ok(Self { d, p_correct: T::one() - raw_error, p_wrong_each: raw_error / (df - T::one()) })
    }

    /// Probability that the decoded digit differs from Bob's.
    pub fn raw_error(&self) -> T {
        T::from_u32(self.d - 1).expect("small integer") * self.p_wrong_each
    }

    pub fn probability(&self, decoded: u32, sent: u32) -> T {
        if decoded == sent {
            self.p_correct
        } else {
            self.p_wrong_each
        }
    }
}

pub fn decode_table<T: Real>(scenario: &ChannelScenario<T>, d: u32) -> Result<DecodeTable<T>> {
    let df = dim_as::<T>(d)?;
    let keep = match scenario.mode {
        ChannelMode::Dependent => T::one() - scenario.q,
        ChannelMode::Independent => (T::one() - scenario.q).powi(2),
    };
    let y = (T::one() - keep) / df;
    Ok(DecodeTable { d, p_correct: keep + y, p_wrong_each: y })
}

/// Depolarizing probability `Q` whose decode table has the given raw key
/// error: `e = (1 - keep) (d - 1) / d` with `keep = 1 - Q` or `(1 - Q)^2`.
pub fn q_for_raw_error<T: Real>(d: u32, mode: ChannelMode, raw_error: T) -> Result<T> {
    let df = dim_as::<T>(d)?;
    let peak = (df - T::one()) / df;
    if !(raw_error >= T::zero() && raw_error <= peak) {
        return invalid(format!("raw key error {raw_error} outside [0, {peak}]"));
    }
    let keep = (T::one() - raw_error / peak).max(T::zero());
    Ok(match mode {
        ChannelMode::Dependent => T::one() - keep,
        ChannelMode::Independent => T::one() - keep.sqrt(),
    })
}

/// `H(A|B) = -x log2 x - (d-1) y log2 y` in bits per symbol.
pub fn conditional_entropy_bits<T: Real>(table: &DecodeTable<T>) -> T {
    let others = T::from_u32(table.d - 1).expect("small integer");
    -xlog2x(table.p_correct) - others * xlog2x(table.p_wrong_each)
}

/// Error-correction leakage `factor * n_kept * H(A|B)` in bits.
pub fn leak_ec_bits<T: Real>(n_kept: u128, hab_bits: T, factor: T) -> T {
    factor * T::from_count(n_kept) * hab_bits
}

fn dim_as<T: Real>(d: u32) -> Result<T> {
    if d < 2 {
        return invalid(format!("dimension must be at least 2, got {d}"));
    }
    Ok(T::from_u32(d).expect("small integer"))
}

fn check_dim(d: u32) -> Result<usize> {
    if d < 2 {
        return invalid(format!("dimension must be at least 2, got {d}"));
    }
    if d > 16 {
        return Err(Error::ResourceLimit(format!("matrix construction limited to d <= 16, got {d}")));
    }
    Ok(d as usize)
}

/// Normalized generalized Bell vector `(1/sqrt d) sum_j w^(kj) |j, j+a>`.
pub fn bell_vector(d: u32, k: u32, a: u32) -> Result<CVector> {
    let du = check_dim(d)?;
    let mut v = CVector::zeros(du * du);
    let norm = (d as f64).sqrt().recip();
    for j in 0..d {
        let t = (j + a) % d;
        v[(j * d + t) as usize] = root_of_unity(u64::from(k) * u64::from(j), d) * norm;
    }
    Ok(v)
}

/// `|psi^k> = (I (x) U_k)|psi_0>`, or `|psi_0>` itself when `k` is `None`.
pub fn protocol_vector(d: u32, k: Option<u32>) -> Result<CVector> {
    if let Some(k) = k {
        if k >= d {
            return invalid(format!("key digit {k} outside alphabet of size {d}"));
        }
    }
    bell_vector(d, k.unwrap_or(0), 0)
}

pub fn build_protocol_state(d: u32, k: Option<u32>) -> Result<DensityMatrix> {
    DensityMatrix::pure(&protocol_vector(d, k)?)
}

/// Alice's decoding POVM `{Lambda_0, .., Lambda_(d-1), Lambda_vac}` for
/// detector efficiency `eta`.
pub fn build_decode_povm(d: u32, eta: f64) -> Result<Vec<CMatrix>> {
    let du = check_dim(d)?;
    if !(eta > 0.0 && eta <= 1.0) {
        return invalid(format!("detector efficiency {eta} outside (0, 1]"));
    }
    let mut ops = Vec::with_capacity(du + 1);
    for k in 0..d {
        let mut lambda = CMatrix::zeros(du * du, du * du);
        for a in 0..d {
            lambda += projector(&bell_vector(d, k, a)?);
        }
        ops.push(lambda * real(eta));
    }
    let sum = ops.iter().fold(CMatrix::zeros(du * du, du * du), |acc, op| acc + op);
    ops.push(identity(du * du) - sum);
    Ok(ops)
}

/// `(1 - w) rho + w I / dim`.
pub fn depolarize(rho: &DensityMatrix, weight: f64) -> Result<DensityMatrix> {
    let dim = rho.dim();
    DensityMatrix::new(rho.matrix() * real(1.0 - weight) + identity(dim) * real(weight / dim as f64))
}

/// Joint state after the forward depolarizing channel.
pub fn forward_state(d: u32, q: f64) -> Result<DensityMatrix> {
    depolarize(&build_protocol_state(d, None)?, q)
}

/// State Alice measures after Bob encodes `k` and the signal returns.
pub fn return_state(d: u32, k: u32, q: f64, mode: ChannelMode) -> Result<DensityMatrix> {
    let weight = match mode {
        ChannelMode::Dependent => q,
        ChannelMode::Independent => 1.0 - (1.0 - q).powi(2),
    };
    depolarize(&build_protocol_state(d, Some(k))?, weight)
}

/// Probability that computational-basis measurements of both halves
/// disagree.
pub fn z_disagreement_probability(rho: &DensityMatrix, d: u32) -> f64 {
    let du = d as usize;
    (0..du)
        .flat_map(|a| (0..du).filter(move |&b| b != a).map(move |b| a * du + b))
        .map(|i| rho.matrix()[(i, i)].re)
        .sum()
}

/// Outcome probabilities `tr(Lambda_i rho)` for every POVM element.
pub fn povm_probabilities(povm: &[CMatrix], rho: &DensityMatrix) -> Vec<f64> {
    povm.iter().map(|op| rho.expectation(op)).collect()
}

/// Smallest eigenvalue over all POVM elements.
pub fn povm_min_eigenvalue(povm: &[CMatrix]) -> f64 {
    povm.iter().map(min_eigenvalue).fold(f64::INFINITY, f64::min)
}

/// Frobenius distance of `sum_i Lambda_i` from the identity.
pub fn povm_completeness_defect(povm: &[CMatrix]) -> f64 {
    let dim = povm.first().map_or(0, |op| op.nrows());
    let sum = povm.iter().fold(CMatrix::zeros(dim, dim), |acc, op| acc + op);
    (sum - identity(dim)).norm()
}

pub fn inner(u: &CVector, v: &CVector) -> Complex64 {
    u.dotc(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn scenario(q: f64, mode: ChannelMode) -> ChannelScenario<f64> {
        ChannelScenario::depolarizing(q, mode).unwrap()
    }

    #[test]
    fn scenario_validation() {
        assert!(ChannelScenario::new(1.0, ChannelMode::Dependent, 0.0, 1.0).is_err());
        assert!(ChannelScenario::new(0.1, ChannelMode::Dependent, 1.0, 1.0).is_err());
        assert!(ChannelScenario::new(0.1, ChannelMode::Dependent, 0.1, 0.0).is_err());
        assert!(ChannelScenario::new(-0.1, ChannelMode::Dependent, 0.0, 1.0).is_err());
        assert!(ChannelScenario::new(0.1, ChannelMode::Independent, 0.1, 0.5).unwrap().is_lossy());
        assert!("bogus".parse::<ChannelMode>().is_err());
        assert_eq!("indep".parse::<ChannelMode>().unwrap(), ChannelMode::Independent);
    }

    #[test]
    fn test_error_examples() {
        assert_abs_diff_eq!(expected_test_error(&scenario(0.1, ChannelMode::Dependent), 2).unwrap(), 0.05, epsilon = 1e-15);
        assert_eq!(expected_test_error(&scenario(0.0, ChannelMode::Dependent), 5).unwrap(), 0.0);
        let lossy = scenario(0.05, ChannelMode::Dependent).with_vacuum(0.1).unwrap();
        assert_abs_diff_eq!(expected_test_error(&lossy, 4).unwrap(), 0.13375, epsilon = 1e-15);
    }

    #[test]
    fn decode_table_examples() {
        let dep = decode_table(&scenario(0.1, ChannelMode::Dependent), 2).unwrap();
        assert_abs_diff_eq!(dep.p_correct, 0.95, epsilon = 1e-15);
        assert_abs_diff_eq!(dep.p_wrong_each, 0.05, epsilon = 1e-15);
        let ind = decode_table(&scenario(0.1, ChannelMode::Independent), 2).unwrap();
        assert_abs_diff_eq!(ind.p_correct, 0.905, epsilon = 1e-15);
        assert_abs_diff_eq!(ind.p_wrong_each, 0.095, epsilon = 1e-15);
        for mode in [ChannelMode::Dependent, ChannelMode::Independent] {
            let t = decode_table(&scenario(0.0, mode), 3).unwrap();
            assert_eq!((t.p_correct, t.p_wrong_each), (1.0, 0.0));
        }
    }

    #[test]
    fn decode_table_normalized_and_ordered() {
        for d in 2..=9 {
            for i in 1..100 {
                let q = i as f64 / 100.0;
                let dep = decode_table(&scenario(q, ChannelMode::Dependent), d).unwrap();
                let ind = decode_table(&scenario(q, ChannelMode::Independent), d).unwrap();
                for t in [dep, ind] {
                    assert_abs_diff_eq!(t.p_correct + (d - 1) as f64 * t.p_wrong_each, 1.0, epsilon = 1e-12);
                    assert!(t.p_correct >= 0.0 && t.p_wrong_each >= 0.0);
                }
                assert!(ind.p_wrong_each >= dep.p_wrong_each);
            }
        }
    }

    #[test]
    fn conditional_entropy_examples() {
        let exact = DecodeTable { d: 4, p_correct: 1.0, p_wrong_each: 0.0 };
        assert_eq!(conditional_entropy_bits(&exact), 0.0);
        let dep = decode_table(&scenario(0.1, ChannelMode::Dependent), 2).unwrap();
        // binary entropy of 0.05
        assert_relative_eq!(conditional_entropy_bits(&dep), 0.286_396_957_115_956_13, max_relative = 1e-12);
        for d in [2u32, 3, 7] {
            let p = 1.0 / d as f64;
            let uniform = DecodeTable { d, p_correct: p, p_wrong_each: p };
            assert_abs_diff_eq!(conditional_entropy_bits(&uniform), (d as f64).log2(), epsilon = 1e-12);
        }
    }

    #[test]
    fn raw_error_round_trip() {
        let t = DecodeTable::<f64>::from_raw_error(4, 0.3).unwrap();
        assert_abs_diff_eq!(t.raw_error(), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(t.p_correct, 0.7, epsilon = 1e-15);
        assert!(DecodeTable::<f64>::from_raw_error(4, 1.5).is_err());
    }

    #[test]
    fn leak_examples() {
        assert_eq!(leak_ec_bits(1_000_000, 0.0, 1.2), 0.0);
        assert_relative_eq!(leak_ec_bits(1_000_000, 0.28640, 1.2), 343_680.0, max_relative = 1e-12);
        let dep = decode_table(&scenario(0.1, ChannelMode::Dependent), 2).unwrap();
        let h = conditional_entropy_bits(&dep);
        assert_relative_eq!(leak_ec_bits(10, h, 1.0) * 1.2, leak_ec_bits(10, h, 1.2), max_relative = 1e-14);
    }

    #[test]
    fn protocol_states() {
        for d in 2..=5 {
            let vectors: Vec<CVector> = (0..d).map(|k| protocol_vector(d, Some(k)).unwrap()).collect();
            for (j, u) in vectors.iter().enumerate() {
                for (k, v) in vectors.iter().enumerate() {
                    let ip = inner(u, v);
                    let expected = if j == k { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(ip.re, expected, epsilon = 1e-12);
                    assert_abs_diff_eq!(ip.im, 0.0, epsilon = 1e-12);
                }
            }
            let rho = build_protocol_state(d, None).unwrap();
            assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-12);
        }
        assert!(build_protocol_state(3, Some(3)).is_err());
    }

    #[test]
    fn qubit_phase_encoding() {
        let v = protocol_vector(2, Some(1)).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expected = [s, 0.0, 0.0, -s];
        for (i, e) in expected.iter().enumerate() {
            assert_abs_diff_eq!(v[i].re, *e, epsilon = 1e-15);
            assert_abs_diff_eq!(v[i].im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn povm_is_complete_and_positive() {
        for d in 2..=4 {
            for eta in [0.5, 0.8, 1.0] {
                let povm = build_decode_povm(d, eta).unwrap();
                assert_eq!(povm.len(), d as usize + 1);
                assert!(povm_completeness_defect(&povm) < 1e-12);
                assert!(povm_min_eigenvalue(&povm) >= -1e-12);
                for op in &povm {
                    assert!(crate::linalg::hermitian_defect(op) < 1e-12);
                }
            }
        }
        assert!(build_decode_povm(2, 0.0).is_err());
    }

    #[test]
    fn povm_decodes_noiseless_states() {
        for d in 2..=4 {
            let povm = build_decode_povm(d, 1.0).unwrap();
            for j in 0..d {
                let rho = build_protocol_state(d, Some(j)).unwrap();
                let probs = povm_probabilities(&povm, &rho);
                for k in 0..d {
                    assert_abs_diff_eq!(probs[k as usize], if k == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
                }
                assert_abs_diff_eq!(probs[d as usize], 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn povm_agrees_with_decode_tables() {
        for d in 2..=4 {
            let povm = build_decode_povm(d, 1.0).unwrap();
            for q in [0.0, 0.05, 0.1] {
                for mode in [ChannelMode::Dependent, ChannelMode::Independent] {
                    let table = decode_table(&scenario(q, mode), d).unwrap();
                    for k in 0..d {
                        let probs = povm_probabilities(&povm, &return_state(d, k, q, mode).unwrap());
                        for i in 0..d {
                            assert_abs_diff_eq!(probs[i as usize], table.probability(i, k), epsilon = 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn z_statistics_match_expected_test_error() {
        for d in 2..=4 {
            for q in [0.0, 0.05, 0.1, 0.3] {
                let rho = forward_state(d, q).unwrap();
                let expected = expected_test_error(&scenario(q, ChannelMode::Dependent), d).unwrap();
                assert_abs_diff_eq!(z_disagreement_probability(&rho, d), expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn inefficient_povm_routes_mass_to_vacuum() {
        let povm = build_decode_povm(3, 0.8).unwrap();
        let probs = povm_probabilities(&povm, &build_protocol_state(3, Some(2)).unwrap());
        assert_abs_diff_eq!(probs[2], 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(probs[3], 0.2, epsilon = 1e-12);
    }
}
