use iabnet_core::geometry::ExclusionKind;
use iabnet_core::model::{cache_hit_ratio, los_probability, nlos_probability, sbs_transmit_power_for};
use iabnet_core::montecarlo::{simulate_drop, SimSpec};
use iabnet_core::{LaplaceQuery, LinkState, Network, NetworkConfig, PartitionPoint, Precision, Tier, TierLink};
use proptest::prelude::*;

fn table2() -> Network {
    Network::new(&NetworkConfig::table2()).unwrap().with_precision(Precision::with_rel_tol(1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn link_states_partition_unity(r in 1e-3f64..1e5, beta in 0.0f64..1.0) {
        let sum = los_probability(r, beta).unwrap() + nlos_probability(r, beta).unwrap();
        prop_assert_eq!(sum, 1.0);
    }

    #[test]
    fn hit_ratio_monotone(c in 0u64..999, gamma_p in 0.0f64..2.0, dg in 0.0f64..1.0) {
        let f = 1000;
        let h = cache_hit_ratio(c, f, gamma_p).unwrap();
        prop_assert!(cache_hit_ratio(c + 1, f, gamma_p).unwrap() >= h - 1e-15);
        prop_assert!(cache_hit_ratio(c, f, gamma_p + dg).unwrap() >= h - 1e-12);
    }

    #[test]
    fn sbs_power_non_increasing(c in 0u64..1000) {
        let cfg = NetworkConfig::table2();
        let a = sbs_transmit_power_for(&cfg, c);
        let b = sbs_transmit_power_for(&cfg, c + 1);
        prop_assert!(b <= a && b >= 0.0);
    }

    #[test]
    fn exclusions_are_probabilities_and_non_increasing(k in 0usize..14, r in 0.5f64..2e3, dr in 0.0f64..100.0) {
        let n = table2();
        let kind = ExclusionKind::ALL[k];
        let p = n.exclusion_probability(kind, r).unwrap();
        prop_assert!(p >= 0.0);
        prop_assert!(p <= 1.0);
        prop_assert!(n.exclusion_probability(kind, r + dr).unwrap() <= p);
    }

    #[test]
    fn exclusions_invariant_under_common_power_scaling(k in 0usize..14, r in 1.0f64..500.0, scale in 0.1f64..10.0) {
        let cfg = NetworkConfig::table2();
        let mut scaled = cfg.clone();
        scaled.bias_s *= scale;
        scaled.bias_m *= scale;
        let a = Network::new(&cfg).unwrap().exclusion_probability(ExclusionKind::ALL[k], r).unwrap();
        let b = Network::new(&scaled).unwrap().exclusion_probability(ExclusionKind::ALL[k], r).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
    }

    #[test]
    fn association_density_non_negative(link in 0usize..6, r in 1e-2f64..5e3) {
        prop_assert!(table2().association_density(TierLink::ALL[link], r).unwrap() >= 0.0);
    }

    #[test]
    fn laplace_is_a_decreasing_probability(link in 0usize..6, s in 0.0f64..1e9, r in 1.0f64..300.0, f in 1.0f64..10.0) {
        let n = table2();
        let serving = TierLink::ALL[link];
        let l = n.laplace_interference(&LaplaceQuery::new(serving, s, r).unwrap()).unwrap();
        let l2 = n.laplace_interference(&LaplaceQuery::new(serving, s * f, r).unwrap()).unwrap();
        prop_assert!((0.0..=1.0).contains(&l));
        prop_assert!(l2 <= l + 1e-9);
    }

    #[test]
    fn conditional_coverage_bounded_by_noise_only(link in 0usize..6, g in 0.0f64..100.0, r in 1.0f64..200.0) {
        let n = table2();
        let link = TierLink::ALL[link];
        let c = n.conditional_coverage(link, g, r).unwrap();
        prop_assert!(c >= 0.0 && c <= n.noise_only_coverage(link, g, r) + 1e-15);
    }

    #[test]
    fn apt_bounded_by_parts(eta in 0.0f64..=1.0, c in 0u64..110, g in 0.0f64..30.0) {
        let n = table2();
        let a = n.apt(PartitionPoint::new(eta, c).unwrap(), g).unwrap();
        prop_assert!(a.total >= 0.0);
        prop_assert!((a.total - a.sbs_total() - a.mbs_total()).abs() <= 1e-9 * a.total.max(1e-300));
    }

    #[test]
    fn drops_are_reproducible(seed in any::<u64>(), index in 0usize..1000) {
        let n = table2();
        let spec = SimSpec::new(&n, 1, seed);
        prop_assert_eq!(simulate_drop(&n, &spec, index), simulate_drop(&n, &spec, index));
    }
}

#[test]
fn config_roundtrips_through_toml() {
    let mut cfg = NetworkConfig::table2();
    cfg.lambda_s = 3.3e-4;
    cfg.cache_size = 42;
    let back = NetworkConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.fingerprint(), cfg.fingerprint());
}

#[test]
fn fingerprint_changes_with_every_key() {
    let base = NetworkConfig::table2();
    for key in iabnet_core::config::KEYS {
        let mut cfg = base.clone();
        let v = cfg.get(key).unwrap();
        let bumped = if *key == "cache.C" { v - 1.0 } else { v * 1.01 + 1e-30 };
        cfg.set(key, bumped).unwrap();
        assert_ne!(cfg.fingerprint(), base.fingerprint(), "{key}");
    }
}

#[test]
fn sbs_los_is_the_only_sbs_state_with_mass_at_defaults() {
    let n = table2();
    let los = n.association_mass(TierLink::new(Tier::Sbs, LinkState::Los)).unwrap();
    let nlos = n.association_mass(TierLink::new(Tier::Sbs, LinkState::Nlos)).unwrap();
    assert!(los > 0.3 && nlos < 1e-6, "{los} {nlos}");
}
