use gsforest_core::excursion::{
    brownian_bridge, brownian_excursion, drift_transform_bridge, LeftHeightSim, LeftHeightWalker,
};
use gsforest_core::func::FunctionSpec;
use gsforest_core::localtime::occupation_histogram;
use gsforest_core::rng::replicate_rng;
use gsforest_core::sde::{
    bessel_bridge, euler_zsde_uc, time_change_y_to_z, time_change_z_to_y, UcRun, UcSde,
};
use gsforest_core::stats::{ks_one_sample, ks_two_sample, mean_var, normal_cdf};
use proptest::prelude::*;

#[test]
fn square_root_sde_mean_grows_linearly() {
    let sde = UcSde {
        x: 1.0,
        c: 1.0,
        f: FunctionSpec::constant(0.0),
        g: FunctionSpec::constant(1.0),
    };
    let run = UcRun {
        dt: 1e-3,
        v_horizon: 1.0,
        clock_horizon: 1e6,
        allow_zero_start: false,
    };
    let ends: Vec<f64> = (0..10_000)
        .map(|i| {
            let mut rng = replicate_rng(31, i);
            euler_zsde_uc(&sde, &run, &mut rng).unwrap().z.last()
        })
        .collect();
    let (m, v) = mean_var(&ends).unwrap();
    let se = (v / ends.len() as f64).sqrt();
    assert!((m - 2.0).abs() < 3.0 * se, "mean {m} se {se}");
}

#[test]
fn bessel_bridge_of_dimension_three_matches_the_excursion() {
    let dt = 1.0 / 1000.0;
    let f = FunctionSpec::constant(0.0);
    let mut sde_mid = Vec::new();
    let mut exact_mid = Vec::new();
    for i in 0..4000 {
        let mut rng = replicate_rng(41, i);
        sde_mid.push(
            bessel_bridge(1.0, 1.0, &f, 0.0, dt, &mut rng)
                .unwrap()
                .value_at(0.5),
        );
        exact_mid.push(brownian_excursion(dt, &mut rng).unwrap().value_at(0.5));
    }
    let r = ks_two_sample(&sde_mid, &exact_mid).unwrap();
    assert!(r.p > 0.01, "KS p = {}", r.p);
    // E[Y_{1/2}^2] = 3 t (1 - t) at t = 1/2.
    let sq: Vec<f64> = sde_mid.iter().map(|y| y * y).collect();
    let (m, v) = mean_var(&sq).unwrap();
    assert!((m - 0.75).abs() < 4.0 * (v / sq.len() as f64).sqrt(), "{m}");
}

#[test]
fn time_change_round_trip_on_bessel_bridges() {
    let f = FunctionSpec::constant(0.0);
    for i in 0..20 {
        let mut rng = replicate_rng(51, i);
        let dt = 1.0 / 2000.0;
        let y = bessel_bridge(1.0, 1.0, &f, 0.0, dt, &mut rng).unwrap();
        let zc = time_change_y_to_z(&y).unwrap();
        assert!(zc.z.values.iter().all(|&z| z >= 0.0));
        assert!((zc.c.last() - 1.0).abs() < 1e-12);
        let back = time_change_z_to_y(&zc, dt).unwrap();
        let n = y.len();
        assert!(back.len() >= n - 1);
        for j in 0..back.len().min(n) {
            let lo = j.saturating_sub(2);
            let hi = (j + 2).min(n - 1);
            let window = &y.values[lo..=hi];
            let osc = window.iter().cloned().fold(f64::MIN, f64::max)
                - window.iter().cloned().fold(f64::MAX, f64::min);
            assert!(
                (back.values[j] - y.values[j]).abs() <= osc + 1e-9,
                "path {i}, index {j}"
            );
        }
    }
}

#[test]
fn excursion_occupation_has_unit_mass() {
    let mut rng = replicate_rng(61, 0);
    for _ in 0..10 {
        let e = brownian_excursion(1.0 / 4096.0, &mut rng).unwrap();
        let lt = occupation_histogram(&e, 1.0 / 128.0).unwrap();
        assert!((lt.total_mass() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn left_height_with_huge_delta_is_twice_reflected_brownian_motion() {
    // P(2 |N(0, 1)| <= h) = 2 Phi(h / 2) - 1.
    let cdf = |h: f64| (2.0 * normal_cdf(h / 2.0, 0.0, 1.0) - 1.0).max(0.0);
    let ends: Vec<f64> = (0..3000)
        .map(|i| {
            let mut rng = replicate_rng(71, i);
            let mut w = LeftHeightWalker::new(0.0, 1e6).unwrap();
            for _ in 0..200 {
                w.step(1.0 / 200.0, &mut rng);
            }
            w.height()
        })
        .collect();
    let r = ks_one_sample(&ends, &cdf).unwrap();
    assert!(r.p > 0.01, "KS p = {}", r.p);
}

#[test]
fn left_height_below_x_has_no_local_time_term() {
    let mut rng = replicate_rng(72, 0);
    let mut w = LeftHeightWalker::new(1e3, 1.0).unwrap();
    for _ in 0..1000 {
        w.step(1e-3, &mut rng);
        assert_eq!(w.height(), 2.0 * (w.s - w.w));
    }
}

#[test]
fn extending_a_left_height_path_keeps_its_prefix() {
    let mut rng = replicate_rng(73, 0);
    let mut sim = LeftHeightSim::new(0.5, 1.0, 1e-3).unwrap();
    sim.extend_until_floor(1.0, 1e9, &mut rng).unwrap();
    let short = sim.snapshot().unwrap();
    sim.extend_until_floor(2.0, 1e9, &mut rng).unwrap();
    let long = sim.snapshot().unwrap();
    assert!(short.floor_end > 1.0 && long.floor_end > 2.0);
    let n = short.path.times.len();
    assert_eq!(&long.path.times[..n], &short.path.times[..]);
    assert_eq!(&long.path.values[..n], &short.path.values[..]);
}

proptest! {
    #[test]
    fn bridge_transform_without_drift_subtracts_the_minimum(seed in any::<u64>()) {
        let mut rng = replicate_rng(seed, 0);
        let b = brownian_bridge(1.0 / 128.0, &mut rng).unwrap();
        let x = drift_transform_bridge(&b, 0.0).unwrap();
        let min = b.values.iter().cloned().fold(f64::MAX, f64::min);
        for (xi, bi) in x.values.iter().zip(&b.values) {
            prop_assert!((xi - (bi - min)).abs() < 1e-12);
        }
    }

    #[test]
    fn bridge_transform_is_non_negative(seed in any::<u64>(), x in 0.0f64..5.0) {
        let mut rng = replicate_rng(seed, 1);
        let b = brownian_bridge(1.0 / 64.0, &mut rng).unwrap();
        let t = drift_transform_bridge(&b, x).unwrap();
        prop_assert!(t.values.iter().all(|&v| v >= -1e-12));
    }
}
