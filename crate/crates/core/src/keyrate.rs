//! Finite-key secret-key length for ideal and lossy devices.
//!
//! All lengths are in bits. The key length for ideal devices is
//!
//! ```text
//! l = n (log2 d - H_d(e + delta) log2 d) - leak_EC - 2 log2(1/eps) [- log2 C(N, m)]
//! ```
//!
//! and for lossy devices with `v` discarded decode rounds
//!
//! ```text
//! l = (n - v) log2 d - n H_{d+1}(e~ + delta) log2(d + 1) - leak_EC - 2 log2(1/eps) [- log2 C(N, m)]
//! ```
//!
//! where `e` is the observed test error (`e~` counts vacuum symbols as errors)
//! and `delta` is calibrated from `eps` by [`crate::sampling::delta_for`]. The
//! entropy argument is clamped at the maximum of the entropy function, so an
//! overly noisy observation yields zero entropy rather than a spurious rise.

use statrs::function::gamma::ln_gamma;

use crate::channels::{
    conditional_entropy_bits, decode_table, expected_test_error, leak_ec_bits, q_for_raw_error, ChannelMode, ChannelScenario, DecodeTable,
};
use crate::error::{invalid, Error, Result};
use crate::mathcore::{entropy_dary_bits, entropy_peak};
use crate::sampling::delta_for;
use crate::scalar::Real;

/// Error-correction inefficiency used throughout the evaluation.
pub const DEFAULT_EC_FACTOR: f64 = 1.2;

/// Which finite-key bound to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviceModel {
    /// Perfect detectors, no vacuum events.
    Ideal,
    /// Vacuum outcomes are possible; decode vacuums are discarded and test
    /// vacuums count as errors.
    Lossy,
}

impl DeviceModel {
    pub fn for_scenario<T: Real>(scenario: &ChannelScenario<T>) -> Self {
        if scenario.is_lossy() {
            DeviceModel::Lossy
        } else {
            DeviceModel::Ideal
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams<T> {
    pub d: u32,
    /// Total number of signals `N`.
    pub signals: u128,
    /// Number of test rounds `m`.
    pub test_size: u128,
    pub epsilon: T,
    /// Charge `log2 C(N, m)` bits for a pre-shared test subset.
    pub subset_cost: bool,
    pub ec_factor: T,
}

impl<T: Real> ProtocolParams<T> {
    pub fn new(d: u32, signals: u128, test_size: u128, epsilon: T) -> Result<Self> {
        let p = Self { d, signals, test_size, epsilon, subset_cost: false, ec_factor: T::lit(DEFAULT_EC_FACTOR) };
        p.validate()?;
        Ok(p)
    }

    /// Uses `m = max(1, floor(fraction * N))` test rounds.
    pub fn with_test_fraction(d: u32, signals: u128, fraction: T, epsilon: T) -> Result<Self> {
        if !(fraction > T::zero() && fraction <= T::lit(0.5)) {
            return invalid(format!("test fraction {fraction} outside (0, 1/2]"));
        }
        let m = (fraction.as_f64() * signals as f64).floor().max(1.0) as u128;
        Self::new(d, signals, m, epsilon)
    }

    pub fn subset_cost(mut self, on: bool) -> Self {
        self.subset_cost = on;
        self
    }

    pub fn ec_factor(mut self, factor: T) -> Result<Self> {
        self.ec_factor = factor;
        self.validate()?;
        Ok(self)
    }

    /// Same test fraction and settings with a different signal count.
    pub fn rescaled(&self, signals: u128) -> Result<Self> {
        let fraction = self.test_size as f64 / self.signals as f64;
        let m = (fraction * signals as f64).floor().max(1.0) as u128;
        let p = Self { signals, test_size: m, ..*self };
        p.validate()?;
        Ok(p)
    }

    pub fn key_size(&self) -> u128 {
        self.signals - self.test_size
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return invalid(format!("dimension must be at least 2, got {}", self.d));
        }
        if self.test_size < 1 {
            return invalid("test size must be >= 1");
        }
        if self.test_size >= self.signals || self.key_size() < self.test_size {
            return invalid(format!(
                "need 1 <= m <= n = N - m (N={}, m={})",
                self.signals, self.test_size
            ));
        }
        if !(self.epsilon > T::zero() && self.epsilon < T::one()) {
            return invalid(format!("epsilon {} outside (0, 1)", self.epsilon));
        }
        if !(self.ec_factor >= T::one()) || !self.ec_factor.is_finite() {
            return invalid(format!("error-correction factor {} must be >= 1", self.ec_factor));
        }
        Ok(())
    }
}

/// Statistics observed in one protocol run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation<T> {
    /// Test-round error: Hamming distance, or the loss-aware distance when
    /// vacuum outcomes are possible.
    pub test_error: T,
    /// Key rounds in which Alice's decoding gave a vacuum.
    pub vac_decode_count: u128,
    /// Key rounds kept, `n - v`.
    pub n_kept: u128,
    /// Fraction of kept key digits Alice decoded incorrectly.
    pub raw_key_error: T,
}

impl<T: Real> Observation<T> {
    pub fn new(test_error: T, vac_decode_count: u128, key_size: u128, raw_key_error: T) -> Result<Self> {
        let unit = |x: T| x >= T::zero() && x <= T::one();
        if !unit(test_error) {
            return invalid(format!("test error {test_error} outside [0, 1]"));
        }
        if !unit(raw_key_error) {
            return invalid(format!("raw key error {raw_key_error} outside [0, 1]"));
        }
        if vac_decode_count > key_size {
            return invalid(format!("vacuum count {vac_decode_count} exceeds key size {key_size}"));
        }
        Ok(Self { test_error, vac_decode_count, n_kept: key_size - vac_decode_count, raw_key_error })
    }

    /// Observation without vacuum events.
    pub fn lossless(test_error: T, key_size: u128, raw_key_error: T) -> Result<Self> {
        Self::new(test_error, 0, key_size, raw_key_error)
    }

    pub fn key_size(&self) -> u128 {
        self.n_kept + self.vac_decode_count
    }
}

/// Expected observation under a channel scenario: test error, raw key error
/// and (lossy) decode-vacuum count at their expected values.
pub fn expected_observation<T: Real>(
    params: &ProtocolParams<T>,
    scenario: &ChannelScenario<T>,
    devices: DeviceModel,
) -> Result<Observation<T>> {
    params.validate()?;
    let d = params.d;
    let n = params.key_size();
    let raw = decode_table(scenario, d)?.raw_error();
    match devices {
        DeviceModel::Ideal => {
            if scenario.is_lossy() {
                return invalid("ideal-device analysis requested for a lossy scenario");
            }
            Observation::lossless(expected_test_error(scenario, d)?, n, raw)
        }
        DeviceModel::Lossy => {
            let vf = expected_vacuum_fraction(scenario.mu)?.as_f64();
            let v = ((n as f64) * vf).round() as u128;
            Observation::new(expected_test_error(scenario, d)?, v.min(n), n, raw)
        }
    }
}

/// Decode-vacuum fraction when loss can occur on either leg: `mu + (1 - mu) mu`.
pub fn expected_vacuum_fraction<T: Real>(mu: T) -> Result<T> {
    if !(mu >= T::zero() && mu < T::one()) {
        return invalid(format!("vacuum probability {mu} outside [0, 1)"));
    }
    Ok(mu + (T::one() - mu) * mu)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateReport<T> {
    pub delta: T,
    pub entropy_bound_bits: T,
    pub leak_bits: T,
    pub subset_cost_bits: T,
    pub security_cost_bits: T,
    /// `entropy - leak - subset cost - security cost` before flooring; may be
    /// negative.
    pub margin_bits: T,
    pub ell_bits: u128,
    pub rate_per_signal: T,
    pub smooth_eps: T,
    pub eps_pa: T,
    pub eps_fail: T,
    pub aborted: bool,
}

/// Security-parameter bookkeeping derived from `eps`:
/// `(smooth_eps, eps_pa, eps_fail)`.
pub fn epsilon_budget<T: Real>(epsilon: T) -> (T, T, T) {
    let cube = epsilon.cbrt();
    let smooth = T::lit(4.0) * epsilon + T::lit(2.0) * cube;
    let pa = T::lit(9.0) * epsilon + T::lit(4.0) * cube;
    let fail = T::lit(2.0) * cube;
    (smooth, pa, fail)
}

/// `2 log2(1/eps)`.
pub fn security_cost_bits<T: Real>(epsilon: T) -> T {
    -T::lit(2.0) * epsilon.log2()
}

/// `log2 C(N, m)` through log-gamma, with a log1p sum or a Stirling expansion
/// once the arguments outgrow double-precision log-gamma cancellation.
pub fn log2_binomial<T: Real>(total: u128, k: u128) -> Result<T> {
    if k > total {
        return invalid(format!("k={k} exceeds N={total}"));
    }
    let k = k.min(total - k);
    let ln = if total <= 1 << 24 {
        ln_gamma(total as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((total - k) as f64 + 1.0)
    } else if k <= 1 << 20 {
        let nf = total as f64;
        let falling: f64 = (0..k).map(|i| (-(i as f64) / nf).ln_1p()).sum();
        k as f64 * nf.ln() + falling - ln_gamma(k as f64 + 1.0)
    } else {
        let (nf, kf) = (total as f64, k as f64);
        let rest = nf - kf;
        let p = kf / nf;
        let entropy_nats = -(p * p.ln() + (1.0 - p) * (-p).ln_1p());
        nf * entropy_nats - 0.5 * (2.0 * std::f64::consts::PI * kf * rest / nf).ln()
            + (1.0 / nf - 1.0 / kf - 1.0 / rest) / 12.0
    };
    Ok(T::lit(ln / std::f64::consts::LN_2))
}

fn finish<T: Real>(
    params: &ProtocolParams<T>,
    delta: T,
    entropy: T,
    leak: T,
) -> Result<KeyRateReport<T>> {
    let subset = if params.subset_cost { log2_binomial(params.signals, params.test_size)? } else { T::zero() };
    let security = security_cost_bits(params.epsilon);
    let margin = entropy - leak - subset - security;
    let (smooth_eps, eps_pa, eps_fail) = epsilon_budget(params.epsilon);
    let aborted = !(margin >= T::one());
    let ell_bits = if aborted { 0 } else { margin.floor().to_u128().unwrap_or(u128::MAX) };
    let rate = T::from_count(ell_bits) / T::from_count(params.signals);
    Ok(KeyRateReport {
        delta,
        entropy_bound_bits: entropy,
        leak_bits: leak,
        subset_cost_bits: subset,
        security_cost_bits: security,
        margin_bits: margin,
        ell_bits,
        rate_per_signal: rate,
        smooth_eps,
        eps_pa,
        eps_fail,
        aborted,
    })
}

fn log2_dim<T: Real>(d: u32) -> T {
    T::from_u32(d).expect("small integer").log2()
}

fn leak_for<T: Real>(params: &ProtocolParams<T>, obs: &Observation<T>) -> Result<T> {
    let table = DecodeTable::from_raw_error(params.d, obs.raw_key_error)?;
    Ok(leak_ec_bits(obs.n_kept, conditional_entropy_bits(&table), params.ec_factor))
}

fn check_obs<T: Real>(params: &ProtocolParams<T>, obs: &Observation<T>) -> Result<()> {
    params.validate()?;
    if obs.key_size() != params.key_size() {
        return invalid(format!(
            "observation covers {} key rounds, parameters imply {}",
            obs.key_size(),
            params.key_size()
        ));
    }
    Observation::new(obs.test_error, obs.vac_decode_count, obs.key_size(), obs.raw_key_error).map(|_| ())
}

/// Secret-key length for ideal devices.
pub fn keyrate_ideal<T: Real>(params: &ProtocolParams<T>, obs: &Observation<T>) -> Result<KeyRateReport<T>> {
    check_obs(params, obs)?;
    if obs.vac_decode_count != 0 {
        return invalid("ideal-device bound applied to an observation with vacuum events");
    }
    let d = params.d;
    let n = T::from_count(params.key_size());
    let delta = delta_for(params.epsilon, params.test_size, params.key_size())?;
    let arg = (obs.test_error + delta).min(entropy_peak(d));
    let entropy = (n * (log2_dim::<T>(d) - entropy_dary_bits(d, arg)?)).max(T::zero());
    finish(params, delta, entropy, leak_for(params, obs)?)
}

/// Secret-key length for lossy devices with unknown detector efficiency.
pub fn keyrate_lossy<T: Real>(params: &ProtocolParams<T>, obs: &Observation<T>) -> Result<KeyRateReport<T>> {
    check_obs(params, obs)?;
    let d = params.d;
    let n = T::from_count(params.key_size());
    let kept = T::from_count(obs.n_kept);
    let delta = delta_for(params.epsilon, params.test_size, params.key_size())?;
    let arg = (obs.test_error + delta).min(entropy_peak(d + 1));
    let entropy = (kept * log2_dim::<T>(d) - n * entropy_dary_bits(d + 1, arg)?).max(T::zero());
    finish(params, delta, entropy, leak_for(params, obs)?)
}

pub fn keyrate<T: Real>(
    params: &ProtocolParams<T>,
    obs: &Observation<T>,
    devices: DeviceModel,
) -> Result<KeyRateReport<T>> {
    match devices {
        DeviceModel::Ideal => keyrate_ideal(params, obs),
        DeviceModel::Lossy => keyrate_lossy(params, obs),
    }
}

/// Key length at the expected observation of a channel scenario.
pub fn expected_keyrate<T: Real>(
    params: &ProtocolParams<T>,
    scenario: &ChannelScenario<T>,
    devices: DeviceModel,
) -> Result<KeyRateReport<T>> {
    keyrate(params, &expected_observation(params, scenario, devices)?, devices)
}

/// Per-signal rate in the limit of many signals and a vanishing test
/// fraction, using the device model implied by the scenario.
pub fn asymptotic_rate<T: Real>(d: u32, scenario: &ChannelScenario<T>, ec_factor: T) -> Result<T> {
    asymptotic_rate_with(d, scenario, ec_factor, DeviceModel::for_scenario(scenario))
}

pub fn asymptotic_rate_with<T: Real>(
    d: u32,
    scenario: &ChannelScenario<T>,
    ec_factor: T,
    devices: DeviceModel,
) -> Result<T> {
    let hab = conditional_entropy_bits(&decode_table(scenario, d)?);
    let test_error = expected_test_error(scenario, d)?;
    match devices {
        DeviceModel::Ideal => {
            if scenario.is_lossy() {
                return invalid("ideal-device analysis requested for a lossy scenario");
            }
            asymptotic_from_errors(d, test_error, hab, T::zero(), ec_factor, devices)
        }
        DeviceModel::Lossy => {
            let vf = expected_vacuum_fraction(scenario.mu)?;
            asymptotic_from_errors(d, test_error, hab, vf, ec_factor, devices)
        }
    }
}

fn asymptotic_from_errors<T: Real>(
    d: u32,
    test_error: T,
    hab_bits: T,
    vacuum_fraction: T,
    ec_factor: T,
    devices: DeviceModel,
) -> Result<T> {
    let kept = T::one() - vacuum_fraction;
    match devices {
        DeviceModel::Ideal => {
            let arg = test_error.min(entropy_peak(d));
            Ok(log2_dim::<T>(d) - entropy_dary_bits(d, arg)? - ec_factor * hab_bits)
        }
        DeviceModel::Lossy => {
            let arg = test_error.min(entropy_peak(d + 1));
            Ok(kept * log2_dim::<T>(d) - entropy_dary_bits(d + 1, arg)? - ec_factor * kept * hab_bits)
        }
    }
}

/// Asymptotic rate as a function of the raw key error under a depolarizing
/// channel of the given mode. `loss` selects the lossy bound at that vacuum
/// probability.
pub fn asymptotic_rate_at_raw_error<T: Real>(
    d: u32,
    mode: ChannelMode,
    ec_factor: T,
    loss: Option<T>,
    raw_error: T,
) -> Result<T> {
    let peak = entropy_peak::<T>(d);
    let q = q_for_raw_error(d, mode, raw_error)?;
    let hab = conditional_entropy_bits(&DecodeTable::from_raw_error(d, raw_error)?);
    match loss {
        None => asymptotic_from_errors(d, q * peak, hab, T::zero(), ec_factor, DeviceModel::Ideal),
        Some(mu) => {
            let vf = expected_vacuum_fraction(mu)?;
            let test_error = mu + (T::one() - mu) * q * peak;
            asymptotic_from_errors(d, test_error, hab, vf, ec_factor, DeviceModel::Lossy)
        }
    }
}

/// Locates the first sign change of `f` on a uniform grid over `[lo, hi]`
/// and bisects it to absolute width `tol`.
fn first_root<F>(lo: f64, hi: f64, tol: f64, what: &str, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    const GRID: usize = 256;
    if f(lo)? <= 0.0 {
        return Err(Error::NoRoot(format!("{what}: not positive at {lo}")));
    }
    let mut prev = lo;
    for i in 1..=GRID {
        let x = lo + (hi - lo) * i as f64 / GRID as f64;
        if f(x)? <= 0.0 {
            let (mut a, mut b) = (prev, x);
            while b - a > tol {
                let mid = 0.5 * (a + b);
                if f(mid)? > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Ok(0.5 * (a + b));
        }
        prev = x;
    }
    Err(Error::NoRoot(format!("{what}: no sign change on [{lo}, {hi}]")))
}

/// Raw key error at which the asymptotic rate reaches zero, to absolute
/// accuracy `1e-6`.
pub fn noise_tolerance<T: Real>(d: u32, mode: ChannelMode, ec_factor: T, loss: Option<T>) -> Result<T> {
    if d < 2 {
        return invalid(format!("dimension must be at least 2, got {d}"));
    }
    let peak = entropy_peak::<f64>(d);
    let root = first_root(0.0, peak, 1e-7, "noise tolerance", |e| {
        asymptotic_rate_at_raw_error(d, mode, ec_factor, loss, T::lit(e)).map(T::as_f64)
    })?;
    Ok(T::lit(root))
}

/// Vacuum probability at which the finite-key length at the expected
/// observation reaches zero, for the lossy bound.
pub fn vacuum_tolerance<T: Real>(params: &ProtocolParams<T>, scenario: &ChannelScenario<T>) -> Result<T> {
    let signals = T::from_count(params.signals).as_f64();
    let root = first_root(0.0, 0.999, 1e-7, "vacuum tolerance", |mu| {
        let s = scenario.with_vacuum(T::lit(mu))?;
        let report = expected_keyrate(params, &s, DeviceModel::Lossy)?;
        Ok(report.margin_bits.as_f64() / signals)
    })?;
    Ok(T::lit(root))
}

/// Smallest signal count (same test fraction) with a positive key length, or
/// `None` if none exists below `2^100`.
pub fn minimal_positive_signals<T: Real>(
    template: &ProtocolParams<T>,
    scenario: &ChannelScenario<T>,
    devices: DeviceModel,
) -> Result<Option<u128>> {
    let positive = |signals: u128| -> Result<bool> {
        match template.rescaled(signals) {
            Ok(p) => Ok(!expected_keyrate(&p, scenario, devices)?.aborted),
            Err(_) => Ok(false),
        }
    };
    let mut hi: u128 = 4;
    while !positive(hi)? {
        if hi >= 1 << 100 {
            return Ok(None);
        }
        hi *= 2;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if positive(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// One high-dimensional run against `copies` parallel low-dimensional runs,
/// all over the same number of signals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParallelComparison {
    pub signals: u128,
    pub ell_high: u128,
    pub ell_low_total: u128,
    pub threshold_high: Option<u128>,
    pub threshold_low: Option<u128>,
}

pub fn compare_parallel<T: Real>(
    d_high: u32,
    copies: u32,
    d_low: u32,
    params: &ProtocolParams<T>,
    scenario: &ChannelScenario<T>,
) -> Result<ParallelComparison> {
    if d_low < 2 || copies < 1 || u64::from(d_low).checked_pow(copies) != Some(u64::from(d_high)) {
        return invalid(format!("need d_high = d_low^copies (got {d_high}, {d_low}^{copies})"));
    }
    let devices = DeviceModel::for_scenario(scenario);
    let high = ProtocolParams { d: d_high, ..*params };
    let low = ProtocolParams { d: d_low, ..*params };
    let ell_high = expected_keyrate(&high, scenario, devices)?.ell_bits;
    let ell_low = expected_keyrate(&low, scenario, devices)?.ell_bits;
    Ok(ParallelComparison {
        signals: params.signals,
        ell_high,
        ell_low_total: ell_low * u128::from(copies),
        threshold_high: minimal_positive_signals(&high, scenario, devices)?,
        threshold_low: minimal_positive_signals(&low, scenario, devices)?,
    })
}
