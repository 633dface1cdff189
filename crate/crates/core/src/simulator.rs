//! Seeded Monte Carlo simulation of the per-round observable statistics.
//!
//! Rounds are sampled from their exact categorical distributions rather than
//! by evolving `N`-fold state vectors. Randomness is derived per block of
//! rounds from `(seed, lane, block index)`, so tallies depend only on the
//! seed and never on how blocks are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channels::{
    build_decode_povm, decode_table, forward_state, povm_probabilities, return_state, z_disagreement_probability,
    ChannelScenario, DecodeTable,
};
use crate::error::{Error, Result};
use crate::keyrate::{keyrate, DeviceModel, KeyRateReport, Observation, ProtocolParams};

/// Largest signal count the simulator accepts.
pub const MAX_SIMULATED_SIGNALS: u128 = 100_000_000;

const BLOCK: u64 = 4096;
const TEST_LANE: u64 = 1;
const KEY_LANE: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub params: ProtocolParams<f64>,
    pub scenario: ChannelScenario<f64>,
    pub seed: u64,
    /// Replaces the signal count of `params`, keeping its test fraction.
    pub rounds_override: Option<u128>,
    pub devices: DeviceModel,
}

impl SimConfig {
    pub fn new(params: ProtocolParams<f64>, scenario: ChannelScenario<f64>, seed: u64) -> Self {
        let devices = DeviceModel::for_scenario(&scenario);
        Self { params, scenario, seed, rounds_override: None, devices }
    }

    /// Protocol parameters after applying `rounds_override`.
    pub fn effective_params(&self) -> Result<ProtocolParams<f64>> {
        match self.rounds_override {
            Some(n) => self.params.rescaled(n),
            None => Ok(self.params),
        }
    }
}

/// Integer tallies of one simulated run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SimCounts {
    pub test_rounds: u64,
    /// Test rounds counted as errors (mismatch or vacuum on either side).
    pub test_errors: u64,
    /// Test rounds where at least one party saw a vacuum.
    pub test_vacuum_rounds: u64,
    pub key_rounds: u64,
    pub key_vacuum: u64,
    pub key_kept: u64,
    /// Kept key rounds where Alice decoded the wrong digit.
    pub decode_errors: u64,
}

impl std::ops::Add for SimCounts {
    type Output = SimCounts;

    fn add(self, o: SimCounts) -> SimCounts {
        SimCounts {
            test_rounds: self.test_rounds + o.test_rounds,
            test_errors: self.test_errors + o.test_errors,
            test_vacuum_rounds: self.test_vacuum_rounds + o.test_vacuum_rounds,
            key_rounds: self.key_rounds + o.key_rounds,
            key_vacuum: self.key_vacuum + o.key_vacuum,
            key_kept: self.key_kept + o.key_kept,
            decode_errors: self.decode_errors + o.decode_errors,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimResult {
    pub observation: Observation<f64>,
    pub empirical_decode_error: f64,
    pub empirical_test_error: f64,
    pub empirical_vac_fraction: f64,
    pub counts: SimCounts,
}

/// A measured symbol: a digit or a vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Digit(u32),
    Vacuum,
}

/// Result of one key round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KeyRound {
    pub sent: u32,
    pub decoded: Outcome,
}

fn block_rng(seed: u64, lane: u64, block: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&lane.to_le_bytes());
    bytes[16..24].copy_from_slice(&block.to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}

/// Joint computational-basis outcome of one test round.
pub fn sample_test_round<R: Rng + ?Sized>(rng: &mut R, scenario: &ChannelScenario<f64>, d: u32) -> (Outcome, Outcome) {
    let (a, b) = if rng.random::<f64>() < 1.0 - scenario.q {
        let a = rng.random_range(0..d);
        (a, a)
    } else {
        (rng.random_range(0..d), rng.random_range(0..d))
    };
    let p_click = (1.0 - scenario.mu) * scenario.eta;
    let mut observe = |digit| if rng.random::<f64>() < p_click { Outcome::Digit(digit) } else { Outcome::Vacuum };
    let oa = observe(a);
    let ob = observe(b);
    (oa, ob)
}

/// One key round: Bob's digit and Alice's decoded outcome. A vacuum arises
/// from loss on either leg or a missed detection.
pub fn sample_key_round<R: Rng + ?Sized>(
    rng: &mut R,
    table: &DecodeTable<f64>,
    scenario: &ChannelScenario<f64>,
) -> KeyRound {
    let d = table.d;
    let sent = rng.random_range(0..d);
    let decoded_digit = if rng.random::<f64>() < table.p_correct {
        sent
    } else {
        (sent + rng.random_range(1..d)) % d
    };
    let lost_forward = rng.random::<f64>() < scenario.mu;
    let lost_return = rng.random::<f64>() < scenario.mu;
    let missed = rng.random::<f64>() >= scenario.eta;
    let decoded = if lost_forward || lost_return || missed { Outcome::Vacuum } else { Outcome::Digit(decoded_digit) };
    KeyRound { sent, decoded }
}

fn simulate_lane<F>(seed: u64, lane: u64, rounds: u64, per_block: F) -> SimCounts
where
    F: Fn(&mut ChaCha8Rng, u64) -> SimCounts + Sync,
{
    let blocks = rounds.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let len = BLOCK.min(rounds - b * BLOCK);
            per_block(&mut block_rng(seed, lane, b), len)
        })
        .reduce(SimCounts::default, |a, b| a + b)
}

pub fn run_protocol(config: &SimConfig) -> Result<SimResult> {
    let params = config.effective_params()?;
    if params.signals > MAX_SIMULATED_SIGNALS {
        return Err(Error::ResourceLimit(format!(
            "simulation limited to N <= {MAX_SIMULATED_SIGNALS}, got {}",
            params.signals
        )));
    }
    let d = params.d;
    let scenario = config.scenario;
    let table = decode_table(&scenario, d)?;
    let m = params.test_size as u64;
    let n = params.key_size() as u64;

    let test = simulate_lane(config.seed, TEST_LANE, m, |rng, len| {
        let mut c = SimCounts { test_rounds: len, ..Default::default() };
        for _ in 0..len {
            let (a, b) = sample_test_round(rng, &scenario, d);
            let vacuum = a == Outcome::Vacuum || b == Outcome::Vacuum;
            c.test_vacuum_rounds += u64::from(vacuum);
            c.test_errors += u64::from(vacuum || a != b);
        }
        c
    });
    let key = simulate_lane(config.seed, KEY_LANE, n, |rng, len| {
        let mut c = SimCounts { key_rounds: len, ..Default::default() };
        for _ in 0..len {
            let round = sample_key_round(rng, &table, &scenario);
            match round.decoded {
                Outcome::Vacuum => c.key_vacuum += 1,
                Outcome::Digit(x) => {
                    c.key_kept += 1;
                    c.decode_errors += u64::from(x != round.sent);
                }
            }
        }
        c
    });
    result_from_counts(test + key, params.key_size())
}

fn result_from_counts(counts: SimCounts, key_size: u128) -> Result<SimResult> {
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let test_error = ratio(counts.test_errors, counts.test_rounds);
    let decode_error = ratio(counts.decode_errors, counts.key_kept);
    let observation = Observation::new(test_error, u128::from(counts.key_vacuum), key_size, decode_error)?;
    Ok(SimResult {
        observation,
        empirical_decode_error: decode_error,
        empirical_test_error: test_error,
        empirical_vac_fraction: ratio(counts.key_vacuum, counts.key_rounds),
        counts,
    })
}

/// Key-rate report for a simulated run.
pub fn analyze(config: &SimConfig, result: &SimResult) -> Result<KeyRateReport<f64>> {
    keyrate(&config.effective_params()?, &result.observation, config.devices)
}

/// Simulates a run and feeds its observation to the matching key-rate bound.
pub fn end_to_end(config: &SimConfig) -> Result<KeyRateReport<f64>> {
    let result = run_protocol(config)?;
    analyze(config, &result)
}

/// Per-round outcome distributions computed from density matrices and the
/// decoding POVM.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundDistribution {
    pub d: u32,
    /// `P(a, b)` for test rounds, row-major over `a * d + b`.
    pub test_joint: Vec<f64>,
    /// `decode[k][i] = P(Alice decodes i | Bob sent k)`.
    pub decode: Vec<Vec<f64>>,
}

impl RoundDistribution {
    pub fn test_disagreement(&self) -> f64 {
        let d = self.d as usize;
        (0..d * d).filter(|i| i / d != i % d).map(|i| self.test_joint[i]).sum()
    }
}

/// Exact per-round distributions for lossless rounds, `d <= 6`.
pub fn exact_round_distribution(scenario: &ChannelScenario<f64>, d: u32) -> Result<RoundDistribution> {
    if d > 6 {
        return Err(Error::ResourceLimit(format!("exact round distribution limited to d <= 6, got {d}")));
    }
    let du = d as usize;
    let forward = forward_state(d, scenario.q)?;
    let test_joint: Vec<f64> = (0..du * du).map(|i| forward.matrix()[(i, i)].re).collect();
    debug_assert!((z_disagreement_probability(&forward, d) - {
        (0..du * du).filter(|i| i / du != i % du).map(|i| test_joint[i]).sum::<f64>()
    })
    .abs()
        < 1e-12);
    let povm = build_decode_povm(d, 1.0)?;
    let decode = (0..d)
        .map(|k| {
            let probs = povm_probabilities(&povm, &return_state(d, k, scenario.q, scenario.mode)?);
            Ok(probs[..du].to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RoundDistribution { d, test_joint, decode })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::ChannelMode;
    use approx::assert_abs_diff_eq;

    fn config(d: u32, signals: u128, q: f64, mu: f64, seed: u64) -> SimConfig {
        let params = ProtocolParams::with_test_fraction(d, signals, 0.5, 1e-36).unwrap();
        let scenario = ChannelScenario::depolarizing(q, ChannelMode::Dependent).unwrap().with_vacuum(mu).unwrap();
        SimConfig::new(params, scenario, seed)
    }

    #[test]
    fn noiseless_run_is_clean() {
        for seed in [0, 1, 99] {
            let r = run_protocol(&config(3, 20_000, 0.0, 0.0, seed)).unwrap();
            assert_eq!(r.empirical_test_error, 0.0);
            assert_eq!(r.empirical_decode_error, 0.0);
            assert_eq!(r.empirical_vac_fraction, 0.0);
            assert_eq!(r.counts.test_rounds + r.counts.key_rounds, 20_000);
            assert_eq!(r.counts.key_kept, 10_000);
        }
    }

    #[test]
    fn tallies_are_consistent() {
        let r = run_protocol(&config(2, 50_001, 0.2, 0.1, 5)).unwrap();
        let c = r.counts;
        assert_eq!(c.test_rounds, 25_000);
        assert_eq!(c.key_rounds, 25_001);
        assert_eq!(c.key_vacuum + c.key_kept, c.key_rounds);
        assert!(c.test_vacuum_rounds <= c.test_errors);
        assert_eq!(r.empirical_test_error, c.test_errors as f64 / c.test_rounds as f64);
        assert_eq!(r.observation.vac_decode_count, u128::from(c.key_vacuum));
        assert_eq!(r.observation.n_kept, u128::from(c.key_kept));
    }

    #[test]
    fn test_error_within_three_sigma() {
        let r = run_protocol(&config(2, 200_000, 0.1, 0.0, 11)).unwrap();
        let p = 0.05;
        let sigma = (p * (1.0 - p) / 100_000.0f64).sqrt();
        assert!((r.empirical_test_error - p).abs() <= 3.0 * sigma, "{}", r.empirical_test_error);
    }

    #[test]
    fn vacuum_fraction_within_three_sigma() {
        let r = run_protocol(&config(2, 200_000, 0.0, 0.1, 3)).unwrap();
        let p = 0.19;
        let sigma = (p * (1.0 - p) / 100_000.0f64).sqrt();
        assert!((r.empirical_vac_fraction - p).abs() <= 3.0 * sigma, "{}", r.empirical_vac_fraction);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = run_protocol(&config(4, 100_000, 0.1, 0.05, 42)).unwrap();
        let b = run_protocol(&config(4, 100_000, 0.1, 0.05, 42)).unwrap();
        assert_eq!(a, b);
        let c = run_protocol(&config(4, 100_000, 0.1, 0.05, 43)).unwrap();
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let cfg = config(3, 300_000, 0.1, 0.05, 8);
        let reference = run_protocol(&cfg).unwrap();
        for threads in [1, 3] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let r = pool.install(|| run_protocol(&cfg)).unwrap();
            assert_eq!(r, reference);
        }
    }

    #[test]
    fn cap_on_signals() {
        let cfg = config(2, MAX_SIMULATED_SIGNALS + 2, 0.1, 0.0, 0);
        assert!(matches!(run_protocol(&cfg), Err(Error::ResourceLimit(_))));
        let mut small = cfg;
        small.rounds_override = Some(1000);
        assert_eq!(run_protocol(&small).unwrap().counts.test_rounds, 500);
    }

    #[test]
    fn end_to_end_noiseless_matches_analytic() {
        let cfg = config(2, 1_000_000, 0.0, 0.0, 1);
        let report = end_to_end(&cfg).unwrap();
        let obs = Observation::lossless(0.0, 500_000, 0.0).unwrap();
        let expected = crate::keyrate::keyrate_ideal(&cfg.params, &obs).unwrap();
        assert_eq!(report, expected);
    }

    #[test]
    fn exact_distribution_examples() {
        let s = ChannelScenario::depolarizing(0.1, ChannelMode::Dependent).unwrap();
        let dist = exact_round_distribution(&s, 2).unwrap();
        assert_abs_diff_eq!(dist.decode[0][0], 0.95, epsilon = 1e-12);
        assert_abs_diff_eq!(dist.decode[0][1], 0.05, epsilon = 1e-12);
        let clean = exact_round_distribution(&ChannelScenario::depolarizing(0.0, ChannelMode::Independent).unwrap(), 3).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                assert_abs_diff_eq!(clean.decode[k][i], if i == k { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
        for d in 2..=4 {
            let dist = exact_round_distribution(&s, d).unwrap();
            assert_abs_diff_eq!(dist.test_disagreement(), 0.1 * (1.0 - 1.0 / d as f64), epsilon = 1e-12);
        }
        assert!(matches!(exact_round_distribution(&s, 7), Err(Error::ResourceLimit(_))));
    }
}
