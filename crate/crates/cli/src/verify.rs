use std::fmt::Write as _;

use pingpong_qkd::channels::{
    build_decode_povm, decode_table, expected_test_error, forward_state, povm_completeness_defect, povm_min_eigenvalue,
    povm_probabilities, return_state, z_disagreement_probability, ChannelScenario,
};
use pingpong_qkd::mathcore::ball_volume_bound_check;
use pingpong_qkd::oracles::{certify_instance, lemma1_empirical_check, scaled_dominance, InstanceSpec, Lemma1Dims};
use pingpong_qkd::sampling::{exhaustive_failure_probability, failure_bound};
use pingpong_qkd::ChannelMode;
use rayon::prelude::*;

use crate::args::{Suite, VerifyArgs};
use crate::commands::{CliError, CliResult};

pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

const MODES: [ChannelMode; 2] = [ChannelMode::Dependent, ChannelMode::Independent];

pub fn sampling_checks() -> CliResult<Vec<Check>> {
    let worst = exhaustive_failure_probability(6, 3, 2, 0.6)?;
    let bound = failure_bound(0.6f64, 3, 3)?.value;
    let mut checks = vec![Check::new(
        "sampling/reference",
        (worst - 0.4).abs() < 1e-12 && worst <= bound,
        format!("N=6 m=3 d=2 delta=0.6: worst case {worst:.6} <= bound {bound:.6}"),
    )];

    let mut cases = Vec::new();
    for total in 2..=8usize {
        for m in 1..=total / 2 {
            for d in 2..=3u32 {
                for step in 0..=10 {
                    cases.push((total, m, d, step as f64 / 10.0));
                }
            }
        }
    }
    let violations: Vec<String> = cases
        .par_iter()
        .map(|&(total, m, d, delta)| -> CliResult<Option<String>> {
            let p = exhaustive_failure_probability(total, m, d, delta)?;
            let b = failure_bound(delta, m as u128, (total - m) as u128)?.value.min(1.0);
            Ok((p > b + 1e-12).then(|| format!("N={total} m={m} d={d} delta={delta}: {p} > {b}")))
        })
        .collect::<CliResult<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    checks.push(Check::new(
        "sampling/grid",
        violations.is_empty(),
        if violations.is_empty() {
            format!("{} instances with N <= 8, d <= 3 within the bound", cases.len())
        } else {
            violations.join("; ")
        },
    ));
    Ok(checks)
}

pub fn povm_checks() -> CliResult<Vec<Check>> {
    let mut checks = Vec::new();
    for d in 2..=4u32 {
        for q in [0.0, 0.05, 0.1] {
            for mode in MODES {
                let scenario = ChannelScenario::depolarizing(q, mode)?;
                let table = decode_table(&scenario, d)?;
                let povm = build_decode_povm(d, 1.0)?;
                let mut dev = 0.0f64;
                for k in 0..d {
                    let probs = povm_probabilities(&povm, &return_state(d, k, q, mode)?);
                    for i in 0..d {
                        dev = dev.max((probs[i as usize] - table.probability(i, k)).abs());
                    }
                    dev = dev.max(probs[d as usize].abs());
                }
                checks.push(Check::new(
                    format!("povm/table d={d} Q={q} {}", mode.short_name()),
                    dev <= 1e-12,
                    format!("max deviation {dev:.3e}"),
                ));
                let z = z_disagreement_probability(&forward_state(d, q)?, d);
                let expected = expected_test_error(&scenario, d)?;
                checks.push(Check::new(
                    format!("povm/z-statistics d={d} Q={q} {}", mode.short_name()),
                    (z - expected).abs() <= 1e-12,
                    format!("{z:.12} vs {expected:.12}"),
                ));
            }
        }
        for eta in [0.5, 0.8, 1.0] {
            let povm = build_decode_povm(d, eta)?;
            let min = povm_min_eigenvalue(&povm);
            let defect = povm_completeness_defect(&povm);
            checks.push(Check::new(
                format!("povm/psd d={d} eta={eta}"),
                min >= -1e-12 && defect <= 1e-12,
                format!("min eigenvalue {min:.3e}, completeness defect {defect:.3e}"),
            ));
        }
    }
    Ok(checks)
}

pub fn dominance_checks(trials: usize, seed: u64) -> CliResult<Vec<Check>> {
    let specs: Vec<InstanceSpec> = (0..trials as u64).map(|i| InstanceSpec::random(seed.wrapping_add(i))).collect();
    let certs = specs.par_iter().map(certify_instance).collect::<Result<Vec<_>, _>>()?;
    let min_eig = certs.iter().map(|c| c.dominance.min_eigenvalue).fold(f64::INFINITY, f64::min);
    let dual_gap = certs.iter().map(|c| (c.dual_bound_bits - c.expected_bound_bits).abs()).fold(0.0, f64::max);
    let pgm_slack = certs.iter().map(|c| c.pgm_bound_bits - c.dual_bound_bits).fold(f64::INFINITY, f64::min);
    let recon = certs.iter().map(|c| c.reconstruction_error).fold(0.0, f64::max);
    let tight = specs
        .par_iter()
        .zip(&certs)
        .filter(|(_, c)| c.j_size >= 2)
        .map(|(s, c)| s.build().map(|inst| scaled_dominance(&inst, c.j_size as f64 - 0.5).min_eigenvalue < -1e-6))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|&b| b)
        .count();
    Ok(vec![
        Check::new(
            "dominance/min-eigenvalue",
            certs.iter().all(|c| c.dominance.passes),
            format!("{trials} instances, smallest eigenvalue of |J| chi - sigma_k: {min_eig:.3e}"),
        ),
        Check::new(
            "dominance/dual-bound",
            certs.iter().all(|c| c.dual_matches()),
            format!("max |bound - (n log2 d - log2 |J|)| = {dual_gap:.3e}"),
        ),
        Check::new(
            "dominance/pgm-sandwich",
            certs.iter().all(|c| c.below_pgm()),
            format!("min (pgm bound - dual bound) = {pgm_slack:.3e}"),
        ),
        Check::new("dominance/eigen-reconstruction", recon < 1e-10, format!("max Frobenius error {recon:.3e}")),
        Check::new(
            "dominance/constant-tight",
            tight > 0 || certs.iter().all(|c| c.j_size < 2),
            format!("{tight} instances violate (|J| - 0.5) chi >= sigma_k"),
        ),
    ])
}

pub fn lemma1_checks(trials: usize, seed: u64) -> CliResult<Vec<Check>> {
    let dims = Lemma1Dims { outcomes: 4, system: 4 };
    let zero = lemma1_empirical_check(0.0, dims, trials, seed)?;
    let small = lemma1_empirical_check(1e-3, dims, trials, seed)?;
    Ok(vec![
        Check::new("lemma1/eps=0", zero.passes && zero.max_violating_mass == 0.0, format!("max violating mass {}", zero.max_violating_mass)),
        Check::new(
            "lemma1/eps=1e-3",
            small.passes,
            format!(
                "{} trials, mean violating mass {:.3e}, max {:.3e}, allowed {:.3e}",
                small.trials, small.mean_violating_mass, small.max_violating_mass, small.allowed_mass
            ),
        ),
    ])
}

pub fn ballbound_checks(trials: usize, seed: u64) -> CliResult<Vec<Check>> {
    let mut failures = Vec::new();
    let mut count = 0;
    for n in 1..=10u64 {
        for d in 2..=5u32 {
            let peak = f64::from(d - 1) / f64::from(d);
            let mut rhos: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).filter(|&r| r <= peak + 1e-12).collect();
            rhos.push(peak);
            for rho in rhos {
                count += 1;
                if !ball_volume_bound_check(n, d, rho)? {
                    failures.push(format!("n={n} d={d} rho={rho}"));
                }
            }
        }
    }
    let specs: Vec<InstanceSpec> = (0..trials as u64).map(|i| InstanceSpec::random(seed.wrapping_add(i))).collect();
    let certs = specs.par_iter().map(certify_instance).collect::<Result<Vec<_>, _>>()?;
    let broken = certs.iter().filter(|c| !c.chain.holds()).count();
    Ok(vec![
        Check::new(
            "ballbound/grid",
            failures.is_empty(),
            if failures.is_empty() { format!("{count} grid points") } else { failures.join("; ") },
        ),
        Check::new("ballbound/instances", broken == 0, format!("{broken} of {trials} instances exceed the entropy bound")),
    ])
}

pub fn run_suite(suite: Suite, trials: usize, seed: u64) -> CliResult<Vec<Check>> {
    Ok(match suite {
        Suite::Sampling => sampling_checks()?,
        Suite::Dominance => dominance_checks(trials, seed)?,
        Suite::Povm => povm_checks()?,
        Suite::Lemma1 => lemma1_checks(trials, seed)?,
        Suite::Ballbound => ballbound_checks(trials, seed)?,
        Suite::All => {
            let mut all = Vec::new();
            for s in [Suite::Sampling, Suite::Povm, Suite::Dominance, Suite::Lemma1, Suite::Ballbound] {
                all.extend(run_suite(s, trials, seed)?);
            }
            all
        }
    })
}

pub fn cmd_verify(args: &VerifyArgs) -> CliResult<String> {
    let checks = run_suite(args.suite, args.trials, args.seed)?;
    let mut s = String::new();
    for c in &checks {
        let _ = writeln!(s, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    let _ = writeln!(s, "{passed}/{} checks passed", checks.len());
    print!("{s}");
    if passed == checks.len() {
        Ok(s)
    } else {
        Err(CliError::Usage(format!("{} verification checks failed", checks.len() - passed)))
    }
}
