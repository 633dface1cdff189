use num_bigint::BigUint;
use pingpong_qkd::channels::{decode_table, ChannelMode, ChannelScenario};
use pingpong_qkd::keyrate::{keyrate_ideal, keyrate_lossy, log2_binomial, Observation, ProtocolParams};
use pingpong_qkd::mathcore::{
    entropy_dary, hamming_ball_volume, hamming_distance, loss_aware_distance, log2_big, binomial, Word,
};
use pingpong_qkd::sampling::delta_for;
use proptest::prelude::*;

fn word(d: u32, len: usize) -> impl Strategy<Value = Vec<u32>> {
    proptest::collection::vec(0..d, len)
}

proptest! {
    #[test]
    fn hamming_triangle_inequality(d in 2u32..5, (x, y, z) in (1usize..12).prop_flat_map(|n| (word(4, n), word(4, n), word(4, n)))) {
        let w = |v: &Vec<u32>| Word::digits(v.iter().map(|s| s % d).collect(), d).unwrap();
        let (x, y, z) = (w(&x), w(&y), w(&z));
        let xy: f64 = hamming_distance(&x, &y).unwrap();
        let yz: f64 = hamming_distance(&y, &z).unwrap();
        let xz: f64 = hamming_distance(&x, &z).unwrap();
        prop_assert!(xz <= xy + yz + 1e-12);
        prop_assert_eq!(xy, hamming_distance::<f64>(&y, &x).unwrap());
    }

    #[test]
    fn vacuum_never_lowers_distance(d in 2u32..4, pairs in proptest::collection::vec((0u32..5, 0u32..5, 0u32..4), 1..10)) {
        // symbols equal to d stand for a vacuum; the filler replaces them by a digit
        let x: Vec<u32> = pairs.iter().map(|p| p.0 % (d + 1)).collect();
        let y: Vec<u32> = pairs.iter().map(|p| p.1 % (d + 1)).collect();
        let fill = |v: &Vec<u32>| v.iter().zip(&pairs).map(|(&s, p)| if s == d { p.2 % d } else { s }).collect::<Vec<_>>();
        let lossy: f64 = loss_aware_distance(&Word::new(x.clone(), d).unwrap(), &Word::new(y.clone(), d).unwrap()).unwrap();
        let filled: f64 = hamming_distance(&Word::digits(fill(&x), d).unwrap(), &Word::digits(fill(&y), d).unwrap()).unwrap();
        prop_assert!(lossy >= filled);
    }

    #[test]
    fn entropy_concave(d in 2u32..9, a in 0.0f64..1.0, b in 0.0f64..1.0, t in 0.0f64..1.0) {
        let mid = t * a + (1.0 - t) * b;
        let lhs: f64 = entropy_dary(d, mid).unwrap();
        let rhs = t * entropy_dary::<f64>(d, a).unwrap() + (1.0 - t) * entropy_dary::<f64>(d, b).unwrap();
        prop_assert!(lhs >= rhs - 1e-12);
    }

    #[test]
    fn delta_monotone(m in 1u128..1_000_000, n in 1u128..1_000_000, e in 1.0f64..60.0) {
        let eps = 10f64.powf(-e);
        let base: f64 = delta_for(eps, m, n).unwrap();
        prop_assert!(delta_for::<f64>(eps, m + 1, n).unwrap() < base);
        prop_assert!(delta_for::<f64>(eps / 10.0, m, n).unwrap() > base);
    }

    #[test]
    fn independent_noisier(d in 2u32..12, q in 0.001f64..0.999) {
        let dep = decode_table(&ChannelScenario::depolarizing(q, ChannelMode::Dependent).unwrap(), d).unwrap();
        let ind = decode_table(&ChannelScenario::depolarizing(q, ChannelMode::Independent).unwrap(), d).unwrap();
        prop_assert!(ind.p_wrong_each >= dep.p_wrong_each);
    }

    #[test]
    fn log2_binomial_matches_big_integers(total in 0u64..=60, k in 0u64..=60) {
        prop_assume!(k <= total);
        let exact = log2_big(&binomial(total, k));
        let approx: f64 = log2_binomial(u128::from(total), u128::from(k)).unwrap();
        prop_assert!((exact - approx).abs() < 1e-9, "{} vs {}", exact, approx);
    }

    #[test]
    fn ideal_length_monotone(
        d in prop::sample::select(vec![2u32, 3, 4, 8]),
        exp in 4.0f64..14.0,
        e1 in 0.0f64..0.2, e2 in 0.0f64..0.2,
        r1 in 0.0f64..0.2, r2 in 0.0f64..0.2,
    ) {
        let signals = 10f64.powf(exp) as u128;
        let params = ProtocolParams::with_test_fraction(d, signals, 0.5, 1e-36).unwrap();
        let n = params.key_size();
        let ell = |e: f64, r: f64| keyrate_ideal(&params, &Observation::lossless(e, n, r).unwrap()).unwrap();
        let (lo_e, hi_e) = (e1.min(e2), e1.max(e2));
        let (lo_r, hi_r) = (r1.min(r2), r1.max(r2));
        prop_assert!(ell(lo_e, lo_r).ell_bits >= ell(hi_e, lo_r).ell_bits);
        prop_assert!(ell(lo_e, lo_r).ell_bits >= ell(lo_e, hi_r).ell_bits);
        let report = ell(hi_e, hi_r);
        prop_assert!(report.entropy_bound_bits >= 0.0);
        prop_assert!(report.entropy_bound_bits <= n as f64 * f64::from(d).log2() * (1.0 + 1e-12));

        let bigger = params.rescaled(signals * 2).unwrap();
        let nb = bigger.key_size();
        let ell_big = keyrate_ideal(&bigger, &Observation::lossless(lo_e, nb, lo_r).unwrap()).unwrap();
        prop_assert!(ell_big.ell_bits >= ell(lo_e, lo_r).ell_bits);
    }

    #[test]
    fn lossy_length_monotone_in_vacuum(
        d in 2u32..6,
        exp in 5.0f64..20.0,
        e in 0.0f64..0.3,
        v1 in 0.0f64..0.5, v2 in 0.0f64..0.5,
    ) {
        let params = ProtocolParams::with_test_fraction(d, 10f64.powf(exp) as u128, 0.5, 1e-36).unwrap();
        let n = params.key_size();
        let count = |f: f64| (n as f64 * f) as u128;
        let (lo, hi) = (count(v1.min(v2)), count(v1.max(v2)));
        let a = keyrate_lossy(&params, &Observation::new(e, lo, n, 0.01).unwrap()).unwrap();
        let b = keyrate_lossy(&params, &Observation::new(e, hi, n, 0.01).unwrap()).unwrap();
        prop_assert!(a.ell_bits >= b.ell_bits);
        prop_assert!(b.entropy_bound_bits >= 0.0);
        prop_assert!(b.entropy_bound_bits <= (n - hi) as f64 * f64::from(d).log2() * (1.0 + 1e-12));
    }
}

#[test]
fn full_ball_is_whole_space() {
    for n in 0..=12u64 {
        for d in 2..=5u32 {
            assert_eq!(hamming_ball_volume(n, d, n).unwrap(), BigUint::from(d).pow(n as u32));
        }
    }
}
