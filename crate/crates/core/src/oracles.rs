//! Small-instance numerical certification of the linear algebra behind the
//! min-entropy bound.
//!
//! For a centre word `a` and the set `J` of words whose distance to `a` is
//! within `delta` of the observed error, the key-`k` block of the collapsed
//! ideal state is the pure state
//!
//! ```text
//! |phi_k> = sum_{b in J} beta_b w^{b.k} |b>|E_b>,   w = exp(2 pi i / d)
//! ```
//!
//! and `chi = sum_b |beta_b|^2 |b><b| (x) |E_b><E_b|` is its key average.
//! Cauchy-Schwarz gives `|J| chi >= |phi_k><phi_k|`, so `(|J| / d^n) chi` is a
//! feasible dual witness and the min-entropy of a uniform key is at least
//! `n log2 d - log2 |J|`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use crate::linalg::DensityMatrix;
use crate::error::{invalid, Error, Result};
use crate::linalg::{hermitian_eigen, identity, min_eigenvalue, projector, real, reconstruction_error, root_of_unity, trace_norm, CMatrix, CVector, PSD_TOL};
use crate::mathcore::{all_words, entropy_dary_bits, entropy_peak, mismatch_count, Word};

/// Largest Hilbert-space dimension `d^n * env_dim` an instance may use.
pub const MAX_INSTANCE_DIM: usize = 256;
/// Pass threshold for dominance eigenvalues.
pub const DOMINANCE_TOL: f64 = 1e-9;
const PROB_TOL: f64 = 1e-12;

/// Classical labels with probabilities and per-label states of a common
/// dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct CqEnsemble {
    probs: Vec<f64>,
    states: Vec<DensityMatrix>,
}

impl CqEnsemble {
    pub fn new(probs: Vec<f64>, states: Vec<DensityMatrix>) -> Result<Self> {
        if probs.is_empty() || probs.len() != states.len() {
            return invalid("ensemble needs one state per label and at least one label");
        }
        if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return invalid("label probabilities must lie in [0, 1]");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return invalid(format!("label probabilities sum to {total}"));
        }
        let dim = states[0].dim();
        if states.iter().any(|s| s.dim() != dim) {
            return invalid("ensemble states differ in dimension");
        }
        Ok(Self { probs, states })
    }

    pub fn uniform(states: Vec<DensityMatrix>) -> Result<Self> {
        let p = 1.0 / states.len().max(1) as f64;
        Self::new(vec![p; states.len()], states)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    /// `sum_k p_k rho_k`.
    pub fn average(&self) -> CMatrix {
        self.probs
            .iter()
            .zip(&self.states)
            .fold(CMatrix::zeros(self.dim(), self.dim()), |acc, (&p, s)| acc + s.matrix() * real(p))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdealStateInstance {
    pub n: usize,
    pub d: u32,
    pub center: Word,
    pub j: Vec<Word>,
    pub betas: Vec<Complex64>,
    pub env_dim: usize,
    pub env_vectors: Vec<CVector>,
    /// One pure block per key word, keys in lexicographic order, uniform
    /// probabilities.
    pub sigma: CqEnsemble,
    pub chi: DensityMatrix,
    pub keys: Vec<Word>,
}

impl IdealStateInstance {
    pub fn j_size(&self) -> usize {
        self.j.len()
    }

    pub fn register_dim(&self) -> usize {
        (self.d as usize).pow(self.n as u32)
    }

    pub fn total_dim(&self) -> usize {
        self.register_dim() * self.env_dim
    }
}

fn word_index(word: &Word) -> usize {
    let d = word.alphabet() as usize;
    word.symbols().iter().fold(0, |acc, &s| acc * d + s as usize)
}

fn gaussian_vector(rng: &mut ChaCha8Rng, len: usize) -> CVector {
    CVector::from_fn(len, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn unit_vector(rng: &mut ChaCha8Rng, len: usize) -> CVector {
    loop {
        let v = gaussian_vector(rng, len);
        let norm = v.norm();
        if norm > 1e-6 {
            return v / real(norm);
        }
    }
}

/// Builds the collapsed ideal state for a random centre word, random
/// amplitudes and random (generally non-orthogonal) environment vectors.
pub fn build_ideal_instance(n: usize, d: u32, delta_obs: f64, delta: f64, env_dim: usize, seed: u64) -> Result<IdealStateInstance> {
    if n == 0 || d < 2 || env_dim == 0 {
        return invalid("need n >= 1, d >= 2 and env_dim >= 1");
    }
    if !(0.0..=1.0).contains(&delta_obs) || !(delta >= 0.0) {
        return invalid("delta_obs must lie in [0, 1] and delta must be non-negative");
    }
    let register = (d as usize).checked_pow(n as u32).filter(|r| r.saturating_mul(env_dim) <= MAX_INSTANCE_DIM);
    let Some(register) = register else {
        return Err(Error::ResourceLimit(format!("d^n * env_dim exceeds {MAX_INSTANCE_DIM}")));
    };
    let dim = register * env_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let center = Word::digits((0..n).map(|_| rng.random_range(0..d)).collect(), d)?;
    let mut j = Vec::new();
    for symbols in all_words(n, d) {
        let b = Word::digits(symbols, d)?;
        let dist = mismatch_count(&center, &b)? as f64 / n as f64;
        if (dist - delta_obs).abs() <= delta * (1.0 + 1e-12) + 1e-15 {
            j.push(b);
        }
    }
    if j.is_empty() {
        return invalid(format!("no word lies within {delta} of distance {delta_obs}"));
    }
    let raw = gaussian_vector(&mut rng, j.len());
    let betas: Vec<Complex64> = (&raw / real(raw.norm())).iter().copied().collect();
    let env_vectors: Vec<CVector> = (0..j.len()).map(|_| unit_vector(&mut rng, env_dim)).collect();

    let embed = |b: &Word, e: &CVector, coeff: Complex64, out: &mut CVector| {
        let base = word_index(b) * env_dim;
        for (i, &x) in e.iter().enumerate() {
            out[base + i] += coeff * x;
        }
    };

    let keys: Vec<Word> = all_words(n, d).map(|k| Word::digits(k, d)).collect::<Result<_>>()?;
    let mut blocks = Vec::with_capacity(keys.len());
    for k in &keys {
        let mut phi = CVector::zeros(dim);
        for ((b, beta), e) in j.iter().zip(&betas).zip(&env_vectors) {
            embed(b, e, beta * root_of_unity(b.dot_mod(k.symbols()), d), &mut phi);
        }
        blocks.push(DensityMatrix::new(projector(&phi))?);
    }
    let mut chi = CMatrix::zeros(dim, dim);
    for ((b, beta), e) in j.iter().zip(&betas).zip(&env_vectors) {
        let mut v = CVector::zeros(dim);
        embed(b, e, Complex64::new(1.0, 0.0), &mut v);
        chi += projector(&v) * real(beta.norm_sqr());
    }
    Ok(IdealStateInstance {
        n,
        d,
        center,
        j,
        betas,
        env_dim,
        env_vectors,
        sigma: CqEnsemble::uniform(blocks)?,
        chi: DensityMatrix::new(chi)?,
        keys,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceReport {
    pub min_eigenvalue: f64,
    /// Index into `keys` of the block attaining the minimum.
    pub worst_key: usize,
    pub passes: bool,
}

/// Minimum over key blocks of `min eig(scale * chi - sigma_k)`.
pub fn scaled_dominance(inst: &IdealStateInstance, scale: f64) -> DominanceReport {
    let mut worst = (f64::INFINITY, 0);
    for (idx, block) in inst.sigma.states().iter().enumerate() {
        let gap = min_eigenvalue(&(inst.chi.matrix() * real(scale) - block.matrix()));
        if gap < worst.0 {
            worst = (gap, idx);
        }
    }
    DominanceReport { min_eigenvalue: worst.0, worst_key: worst.1, passes: worst.0 >= -DOMINANCE_TOL }
}

/// Checks `|J| chi >= sigma_k` on every key block.
pub fn verify_operator_dominance(inst: &IdealStateInstance) -> DominanceReport {
    scaled_dominance(inst, inst.j_size() as f64)
}

/// `(|J| / d^n) chi`, the analytic dual witness for the instance.
pub fn canonical_witness(inst: &IdealStateInstance) -> CMatrix {
    inst.chi.matrix() * real(inst.j_size() as f64 / inst.keys.len() as f64)
}

/// Certified lower bound `-log2 tr(W)` on the conditional min-entropy of the
/// label, valid when `W >= p_k rho_k` for every label.
pub fn min_entropy_dual_bound(ens: &CqEnsemble, witness: &CMatrix) -> Result<f64> {
    if witness.nrows() != ens.dim() || !witness.is_square() {
        return invalid("witness dimension does not match the ensemble");
    }
    let w_min = min_eigenvalue(witness);
    if w_min < -PSD_TOL {
        return invalid(format!("witness not positive semidefinite (min eigenvalue {w_min:e})"));
    }
    for (label, (&p, state)) in ens.probs().iter().zip(ens.states()).enumerate() {
        let gap = min_eigenvalue(&(witness - state.matrix() * real(p)));
        if gap < -PSD_TOL {
            return Err(Error::CertificationFailure { label, min_eigenvalue: gap });
        }
    }
    Ok(-witness.trace().re.log2())
}

/// Success probability of the pretty-good measurement, a lower bound on the
/// optimal guessing probability.
pub fn pgm_guess_probability(ens: &CqEnsemble) -> f64 {
    let avg = ens.average();
    let (values, vectors) = hermitian_eigen(&avg);
    let cutoff = values.last().copied().unwrap_or(0.0).max(0.0) * 1e-12;
    let inv_sqrt: Vec<Complex64> = values.iter().map(|&l| real(if l > cutoff { 1.0 / l.sqrt() } else { 0.0 })).collect();
    let diag = CMatrix::from_diagonal(&CVector::from_vec(inv_sqrt));
    let s = &vectors * diag * vectors.adjoint();
    ens.probs()
        .iter()
        .zip(ens.states())
        .map(|(&p, rho)| {
            let rho = rho.matrix();
            p * p * (&s * rho * &s * rho).trace().re
        })
        .sum()
}

/// Exact and relaxed entropy bounds of an instance, in bits:
/// `n log2 d - log2 |J|` and `n log2 d - n H_d(delta_obs + delta) log2 d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallBoundChain {
    pub exact_bits: f64,
    pub relaxed_bits: f64,
}

impl BallBoundChain {
    pub fn holds(&self) -> bool {
        self.exact_bits >= self.relaxed_bits - 1e-9
    }
}

pub fn ball_bound_chain(inst: &IdealStateInstance, delta_obs: f64, delta: f64) -> Result<BallBoundChain> {
    let full = inst.n as f64 * f64::from(inst.d).log2();
    let radius = (delta_obs + delta).min(entropy_peak::<f64>(inst.d));
    Ok(BallBoundChain {
        exact_bits: full - (inst.j_size() as f64).log2(),
        relaxed_bits: full - inst.n as f64 * entropy_dary_bits(inst.d, radius)?,
    })
}

/// Largest Frobenius reconstruction error `|V L V^dagger - A|` over every
/// matrix the instance's checks diagonalise.
pub fn eigen_reconstruction_error(inst: &IdealStateInstance) -> f64 {
    let scale = real(inst.j_size() as f64);
    let mut worst = reconstruction_error(inst.chi.matrix());
    for block in inst.sigma.states() {
        worst = worst.max(reconstruction_error(block.matrix()));
        worst = worst.max(reconstruction_error(&(inst.chi.matrix() * scale - block.matrix())));
    }
    worst
}

/// Shape of a random ideal-state instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceSpec {
    pub n: usize,
    pub d: u32,
    pub delta_obs: f64,
    pub delta: f64,
    pub env_dim: usize,
    pub seed: u64,
}

impl InstanceSpec {
    /// Seeded draw with `n <= 3`, `d <= 3` and `env_dim <= 2`.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let n = rng.random_range(1..=3);
        let d = rng.random_range(2..=3);
        let env_dim = rng.random_range(1..=2);
        let delta_obs = rng.random_range(0..=n) as f64 / n as f64;
        let delta = [0.0, 0.2, 0.34, 0.5, 1.0][rng.random_range(0..5)];
        Self { n, d, delta_obs, delta, env_dim, seed }
    }

    pub fn build(&self) -> Result<IdealStateInstance> {
        build_ideal_instance(self.n, self.d, self.delta_obs, self.delta, self.env_dim, self.seed)
    }
}

/// Every numerical check run on one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceCertificate {
    pub j_size: usize,
    pub dominance: DominanceReport,
    pub dual_bound_bits: f64,
    /// `n log2 d - log2 |J|`.
    pub expected_bound_bits: f64,
    pub pgm_bound_bits: f64,
    pub chain: BallBoundChain,
    pub reconstruction_error: f64,
}

impl InstanceCertificate {
    pub fn dual_matches(&self) -> bool {
        (self.dual_bound_bits - self.expected_bound_bits).abs() <= 1e-9
    }

    pub fn below_pgm(&self) -> bool {
        self.dual_bound_bits <= self.pgm_bound_bits + 1e-9
    }

    pub fn passes(&self) -> bool {
        self.dominance.passes && self.dual_matches() && self.below_pgm() && self.chain.holds() && self.reconstruction_error < 1e-10
    }
}

pub fn certify_instance(spec: &InstanceSpec) -> Result<InstanceCertificate> {
    let inst = spec.build()?;
    Ok(InstanceCertificate {
        j_size: inst.j_size(),
        dominance: verify_operator_dominance(&inst),
        dual_bound_bits: min_entropy_dual_bound(&inst.sigma, &canonical_witness(&inst))?,
        expected_bound_bits: inst.n as f64 * f64::from(inst.d).log2() - (inst.j_size() as f64).log2(),
        pgm_bound_bits: -pgm_guess_probability(&inst.sigma).log2(),
        chain: ball_bound_chain(&inst, spec.delta_obs, spec.delta)?,
        reconstruction_error: eigen_reconstruction_error(&inst),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Report {
    pub trials: usize,
    /// Outcome-probability mass with per-outcome trace distance above the
    /// threshold, averaged over trials.
    pub mean_violating_mass: f64,
    pub max_violating_mass: f64,
    pub threshold: f64,
    pub allowed_mass: f64,
    pub passes: bool,
}

/// Dimensions for the empirical check: number of measurement outcomes and
/// the dimension of the measured system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lemma1Dims {
    pub outcomes: usize,
    pub system: usize,
}

fn random_density(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    let g = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    rho / tr
}

/// Random instrument: Kraus operators cut from a random isometry.
fn random_instrument(rng: &mut ChaCha8Rng, dims: Lemma1Dims) -> Vec<CMatrix> {
    let rows = dims.outcomes * dims.system;
    let g = DMatrix::from_fn(rows, dims.system, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let q = g.qr().q();
    (0..dims.outcomes).map(|x| q.rows(x * dims.system, dims.system).into_owned()).collect()
}

/// Outcome probabilities and normalised post-measurement states.
fn apply_instrument(kraus: &[CMatrix], rho: &CMatrix) -> Vec<(f64, CMatrix)> {
    kraus
        .iter()
        .map(|k| {
            let post = k * rho * k.adjoint();
            let p = post.trace().re.max(0.0);
            let state = if p > 0.0 { post / real(p) } else { post };
            (p, state)
        })
        .collect()
}

/// Draws `rho`, perturbs it to `sigma = (1 - eps) rho + eps tau`, applies a
/// random instrument, and measures the mass of outcomes whose conditional
/// states are further apart than `eps^(1/3) + 2 eps`. Each trial must keep
/// that mass at or below `2 eps^(1/3)`.
pub fn lemma1_empirical_check(eps: f64, dims: Lemma1Dims, trials: usize, seed: u64) -> Result<Lemma1Report> {
    lemma1_check_with(eps, dims, trials, seed, |_| {})
}

/// As [`lemma1_empirical_check`], with `relabel` applied to each trial's
/// list of Kraus operators before use.
pub fn lemma1_check_with<F>(eps: f64, dims: Lemma1Dims, trials: usize, seed: u64, relabel: F) -> Result<Lemma1Report>
where
    F: Fn(&mut Vec<CMatrix>),
{
    if !(0.0..=0.1).contains(&eps) {
        return invalid(format!("eps must lie in [0, 0.1], got {eps}"));
    }
    if dims.outcomes == 0 || dims.system == 0 || dims.outcomes > 8 || dims.system > 8 {
        return invalid("dimensions must lie in 1..=8");
    }
    let threshold = eps.cbrt() + 2.0 * eps;
    let allowed = 2.0 * eps.cbrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut total, mut max) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let rho = random_density(&mut rng, dims.system);
        let tau = random_density(&mut rng, dims.system);
        let sigma = &rho * real(1.0 - eps) + tau * real(eps);
        let mut kraus = random_instrument(&mut rng, dims);
        relabel(&mut kraus);
        let out_rho = apply_instrument(&kraus, &rho);
        let out_sigma = apply_instrument(&kraus, &sigma);
        let mass: f64 = out_rho
            .iter()
            .zip(&out_sigma)
            .filter(|((p, r), (q, s))| *p > 0.0 && *q > 0.0 && 0.5 * trace_norm(&(r - s)) > threshold)
            .fold(0.0, |acc, ((p, _), _)| acc + p);
        total += mass;
        max = max.max(mass);
    }
    let mean = if trials == 0 { 0.0 } else { total / trials as f64 };
    Ok(Lemma1Report {
        trials,
        mean_violating_mass: mean,
        max_violating_mass: max,
        threshold,
        allowed_mass: allowed,
        passes: max <= allowed,
    })
}

/// Ensemble of identical copies of the maximally mixed state, handy for
/// checks where the label is independent of the quantum system.
pub fn independent_ensemble(labels: usize, dim: usize) -> Result<CqEnsemble> {
    CqEnsemble::uniform(vec![DensityMatrix::maximally_mixed(dim); labels])
}

/// Uniform ensemble of orthogonal basis states.
pub fn orthogonal_ensemble(labels: usize) -> Result<CqEnsemble> {
    let states = (0..labels)
        .map(|i| DensityMatrix::pure(&CVector::from_fn(labels, |r, _| real(if r == i { 1.0 } else { 0.0 }))))
        .collect::<Result<Vec<_>>>()?;
    CqEnsemble::uniform(states)
}

/// Identity scaled to the given trace.
pub fn scaled_identity(dim: usize, trace: f64) -> CMatrix {
    identity(dim) * real(trace / dim as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathcore::hamming_ball_volume;
    use approx::assert_abs_diff_eq;

    fn random_instance(seed: u64) -> (IdealStateInstance, f64, f64) {
        let spec = InstanceSpec::random(seed);
        (spec.build().unwrap(), spec.delta_obs, spec.delta)
    }

    #[test]
    fn singleton_instance() {
        let inst = build_ideal_instance(2, 3, 0.0, 0.0, 2, 4).unwrap();
        assert_eq!(inst.j, vec![inst.center.clone()]);
        for block in inst.sigma.states() {
            assert!((block.matrix() - inst.chi.matrix()).norm() < 1e-12);
        }
        let report = verify_operator_dominance(&inst);
        assert!(report.min_eigenvalue.abs() < 1e-12 && report.passes);
    }

    #[test]
    fn j_counts_ball() {
        let inst = build_ideal_instance(2, 2, 0.0, 0.5, 1, 0).unwrap();
        assert_eq!(inst.j_size(), 3);
        let inst = build_ideal_instance(3, 3, 0.0, 2.0 / 3.0, 1, 0).unwrap();
        assert_eq!(inst.j_size() as u64, u64::try_from(hamming_ball_volume(3, 3, 2).unwrap()).unwrap());
    }

    #[test]
    fn guard() {
        assert!(matches!(build_ideal_instance(5, 3, 0.0, 0.1, 2, 0), Err(Error::ResourceLimit(_))));
        assert!(build_ideal_instance(4, 4, 0.0, 0.1, 1, 0).is_ok());
        assert!(matches!(build_ideal_instance(4, 4, 0.0, 0.1, 2, 0), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn amplitudes_normalised_and_members_close() {
        for seed in 0..20 {
            let (inst, obs, delta) = random_instance(seed);
            let norm: f64 = inst.betas.iter().map(|b| b.norm_sqr()).sum();
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
            for b in &inst.j {
                let dist = mismatch_count(&inst.center, b).unwrap() as f64 / inst.n as f64;
                assert!((dist - obs).abs() <= delta + 1e-12);
            }
            assert_abs_diff_eq!(inst.chi.trace(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn chi_is_key_average() {
        let (inst, _, _) = random_instance(3);
        assert!((inst.sigma.average() - inst.chi.matrix()).norm() < 1e-12);
    }

    #[test]
    fn dominance_on_seeded_instances() {
        for seed in 0..100 {
            let (inst, _, _) = random_instance(seed);
            let report = verify_operator_dominance(&inst);
            assert!(report.passes, "seed {seed}: {report:?}");
            assert!(eigen_reconstruction_error(&inst) < 1e-10);
        }
    }

    #[test]
    fn dominance_constant_is_tight() {
        let found = (0..100).map(random_instance).any(|(inst, _, _)| {
            inst.j_size() >= 2 && scaled_dominance(&inst, inst.j_size() as f64 - 0.5).min_eigenvalue < -1e-6
        });
        assert!(found);
    }

    #[test]
    fn canonical_witness_certifies_j_bound() {
        for seed in 0..100 {
            let cert = certify_instance(&InstanceSpec::random(seed)).unwrap();
            assert!(cert.passes(), "seed {seed}: {cert:?}");
        }
    }

    #[test]
    fn infeasible_witness_names_label() {
        let ens = orthogonal_ensemble(3).unwrap();
        let bad = CMatrix::from_diagonal(&CVector::from_vec(vec![real(1.0 / 3.0), real(0.1), real(1.0 / 3.0)]));
        match min_entropy_dual_bound(&ens, &bad) {
            Err(Error::CertificationFailure { label, .. }) => assert_eq!(label, 1),
            other => panic!("{other:?}"),
        }
        let not_psd = CMatrix::from_diagonal(&CVector::from_vec(vec![real(1.0), real(-1.0), real(1.0)]));
        assert!(matches!(min_entropy_dual_bound(&ens, &not_psd), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn independent_labels() {
        let ens = independent_ensemble(4, 3).unwrap();
        let witness = DensityMatrix::maximally_mixed(3).into_matrix() / real(4.0);
        assert_abs_diff_eq!(min_entropy_dual_bound(&ens, &witness).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pgm_guess_probability(&ens), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn orthogonal_labels() {
        let ens = orthogonal_ensemble(4).unwrap();
        assert_abs_diff_eq!(pgm_guess_probability(&ens), 1.0, epsilon = 1e-12);
        let witness = scaled_identity(4, 1.0);
        assert!(min_entropy_dual_bound(&ens, &witness).unwrap() <= 1e-12);
        assert!(min_entropy_dual_bound(&ens, &scaled_identity(4, 0.9)).is_err());
    }

    #[test]
    fn ensemble_validation() {
        let s = DensityMatrix::maximally_mixed(2);
        assert!(CqEnsemble::new(vec![0.5, 0.4], vec![s.clone(), s.clone()]).is_err());
        assert!(CqEnsemble::new(vec![0.5, 0.5], vec![s.clone(), DensityMatrix::maximally_mixed(3)]).is_err());
        assert!(CqEnsemble::new(vec![1.0], vec![s]).is_ok());
    }

    #[test]
    fn lemma1_identical_states() {
        let r = lemma1_empirical_check(0.0, Lemma1Dims { outcomes: 3, system: 4 }, 50, 1).unwrap();
        assert_eq!(r.max_violating_mass, 0.0);
        assert!(r.passes);
    }

    #[test]
    fn lemma1_small_eps() {
        let dims = Lemma1Dims { outcomes: 4, system: 4 };
        let r = lemma1_empirical_check(1e-3, dims, 1000, 2).unwrap();
        assert!(r.passes && r.mean_violating_mass <= 0.2, "{r:?}");
        let relabeled = lemma1_check_with(1e-3, dims, 1000, 2, |k| k.reverse()).unwrap();
        assert_eq!(relabeled.passes, r.passes);
        assert_abs_diff_eq!(relabeled.mean_violating_mass, r.mean_violating_mass, epsilon = 1e-12);
        assert!(lemma1_empirical_check(0.2, dims, 1, 0).is_err());
    }

    #[test]
    fn instrument_is_trace_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let kraus = random_instrument(&mut rng, Lemma1Dims { outcomes: 3, system: 5 });
        let sum = kraus.iter().fold(CMatrix::zeros(5, 5), |acc, k| acc + k.adjoint() * k);
        assert!((sum - identity(5)).norm() < 1e-12);
    }
}
