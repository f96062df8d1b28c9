use std::sync::Arc;

use super::*;
use crate::kernel::{KernelParams, MollifierParams};
use crate::potential::IndicatorKernel;
use crate::stats::gof::{chi_square_pooled, kolmogorov_smirnov};

fn hard_sphere_cfg(side: f64, z: f64, radius: f64) -> GceConfig {
    GceConfig::new(
        Cuboid::cube(2, 0.0, side).unwrap(),
        z,
        1.0,
        ChargeLaw::point_mass(1.0).unwrap(),
        FieldKernel::indicator(IndicatorKernel::new(radius).unwrap()),
        PotentialSpec::hard_wall(1.5).unwrap(),
    )
    .unwrap()
}

fn free_cfg(z: f64) -> GceConfig {
    let mut c = hard_sphere_cfg(2.0, z, 0.4);
    c.lambda = 0.0;
    c
}

fn smooth_cfg() -> GceConfig {
    let p = KernelParams::new(2, 2.0).unwrap();
    let mut c = GceConfig::new(
        Cuboid::cube(2, 0.0, 1.0).unwrap(),
        2.0,
        0.7,
        ChargeLaw::two_point_symmetric(1.0).unwrap(),
        FieldKernel::mollified(p, MollifierParams::new(0.2).unwrap()).unwrap(),
        PotentialSpec::trigonometric(vec![(1.0, 1.3)]).unwrap(),
    )
    .unwrap();
    c.domain.abs_tol = 1e-9;
    c.domain.n_pad = 6.0;
    c
}

#[test]
fn config_validation() {
    let mut c = free_cfg(1.0);
    assert!(c.validate().is_ok());
    c.mix.recharge = 0.2;
    assert!(c.validate().is_err());
    let mut c = free_cfg(1.0);
    c.burn_in = c.steps;
    assert!(c.validate().is_err());
    let mut c = free_cfg(1.0);
    c.z = 0.0;
    assert!(c.validate().is_err());
    assert_eq!(free_cfg(1.0).sigma_disp, 0.2);
}

#[test]
fn free_insertion_acceptance() {
    let c = free_cfg(0.75);
    for n in 0..6 {
        let expected = (3.0 / (n + 1) as f64).min(1.0);
        assert_eq!(insert_acceptance(&c, n, 0.0), expected);
    }
}

#[test]
fn delete_on_empty_is_rejected() {
    let c = free_cfg(0.01);
    let mut rng = RngStream::new(3, 0);
    let mut seen = 0;
    let mut state = SamplerState::empty(&c);
    for _ in 0..200 {
        let before = state.clone();
        let out = mcmc_step(&mut state, &c, &mut rng).unwrap();
        if before.config.is_empty() && out.kind != MoveKind::Insert {
            assert!(!out.accepted);
            assert_eq!(state.config, before.config);
            seen += 1;
        }
    }
    assert!(seen > 50);
}

#[test]
fn overlapping_insertion_is_rejected() {
    let c = hard_sphere_cfg(2.0, 0.5, 0.4);
    let mut state = SamplerState::empty(&c);
    state.config.push(&[1.0, 1.0], 1.0).unwrap();
    let mv = Move::Insert {
        position: vec![1.5, 1.2],
        charge: 1.0,
    };
    let du = delta_energy(&state.config, &c.kernel, &c.potential, &c.domain, &mv).unwrap();
    assert_eq!(du, f64::INFINITY);
    assert_eq!(insert_acceptance(&c, 1, du), 0.0);
    let mv = Move::Insert {
        position: vec![1.9, 1.9],
        charge: 1.0,
    };
    let du = delta_energy(&state.config, &c.kernel, &c.potential, &c.domain, &mv).unwrap();
    assert_eq!(du, 0.0);
}

fn check_flows(c: &GceConfig, base: &[(Vec<f64>, f64)], y: &[f64], s: f64) {
    let config = ChargeConfiguration::from_parts(
        c.region.clone(),
        &base.iter().map(|b| b.0.clone()).collect::<Vec<_>>(),
        &base.iter().map(|b| b.1).collect::<Vec<_>>(),
    )
    .unwrap();
    let (f, b) = insertion_flows(c, &config, y, s).unwrap();
    let scale = f.abs().max(b.abs());
    assert!((f - b).abs() <= 1e-12 * scale, "{f} vs {b}");
}

#[test]
fn detailed_balance_for_insertions() {
    let hs = hard_sphere_cfg(2.0, 0.5, 0.4);
    check_flows(&hs, &[], &[0.3, 0.4], 1.0);
    check_flows(&hs, &[(vec![0.2, 0.2], 1.0)], &[1.5, 1.5], 1.0);
    // overlapping: both flows vanish
    check_flows(&hs, &[(vec![0.2, 0.2], 1.0)], &[0.5, 0.5], 1.0);
    let mut free = free_cfg(3.0);
    free.mix = MoveMix {
        insert: 0.5,
        delete: 0.2,
        displace: 0.2,
        recharge: 0.1,
    };
    check_flows(&free, &[(vec![0.1, 1.9], 1.0), (vec![1.1, 0.4], 1.0)], &[0.7, 0.8], 1.0);
    let smooth = smooth_cfg();
    check_flows(&smooth, &[(vec![0.3, 0.3], 1.0)], &[0.6, 0.5], -1.0);
    check_flows(&smooth, &[(vec![0.3, 0.3], -1.0), (vec![0.8, 0.1], 1.0)], &[0.32, 0.35], -1.0);
}

#[test]
fn free_chain_is_poisson() {
    let mut c = free_cfg(1.25);
    c.steps = 300_000;
    c.burn_in = 1_000;
    c.seed = 11;
    let mut xs = Vec::new();
    let mut sink = |s: &ThinnedSample| {
        if s.step % 97 == 0 {
            xs.extend(s.config.iter().map(|(y, _)| y[0]));
        }
    };
    let r = run_chain_with_sink(&c, &[Observable::Count], &mut sink).unwrap();
    let mu = c.mean_occupancy();
    let s = r.summary("N").unwrap();
    assert!((s.mean - mu).abs() < 3.0 * s.stderr, "{} ± {} vs {mu}", s.mean, s.stderr);
    let total = r.retained() as f64;
    let mut expected = Vec::new();
    let mut p = (-mu).exp();
    for n in 0..r.occupancy.len() {
        if n > 0 {
            p *= mu / n as f64;
        }
        expected.push(total * p);
    }
    let tail = total - expected.iter().sum::<f64>();
    *expected.last_mut().unwrap() += tail;
    let observed: Vec<f64> = r.occupancy.iter().map(|&c| c as f64).collect();
    // successive steps are correlated; thin the histogram by the step gap
    let thin = 20.0;
    let obs: Vec<f64> = observed.iter().map(|o| o / thin).collect();
    let exp: Vec<f64> = expected.iter().map(|e| e / thin).collect();
    let chi = chi_square_pooled(&obs, &exp, 5.0);
    assert!(chi.p_value > 0.01, "{chi:?}");
    let (_, p_ks) = kolmogorov_smirnov(&xs, |x| (x / 2.0).clamp(0.0, 1.0));
    assert!(p_ks > 0.01, "ks p = {p_ks}");
}

#[test]
fn chains_are_deterministic() {
    let mut c = hard_sphere_cfg(2.0, 0.5, 0.4);
    c.steps = 20_000;
    c.burn_in = 2_000;
    c.seed = 5;
    let obs = [Observable::Count, Observable::TotalCharge];
    let a = run_chain(&c, &obs).unwrap();
    let b = run_chain(&c, &obs).unwrap();
    assert_eq!(a.summaries, b.summaries);
    assert_eq!(a.occupancy, b.occupancy);
    assert_eq!(a.final_states, b.final_states);
    c.seed = 6;
    assert_ne!(run_chain(&c, &obs).unwrap().summaries, a.summaries);
    let m1 = run_chains(&c, &obs, 3).unwrap();
    let m2 = run_chains(&c, &obs, 3).unwrap();
    assert_eq!(m1.summaries, m2.summaries);
    assert_eq!(m1.retained(), 3 * (c.steps - c.burn_in));
}

#[test]
fn hard_sphere_chain_never_overlaps() {
    let mut c = hard_sphere_cfg(2.0, 2.0, 0.3);
    c.steps = 20_000;
    c.burn_in = 1;
    let mut worst = f64::INFINITY;
    let mut sink = |s: &ThinnedSample| {
        let cf = &s.config;
        for i in 0..cf.len() {
            for j in 0..i {
                let r = cf
                    .position(i)
                    .iter()
                    .zip(cf.position(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                worst = worst.min(r);
            }
        }
    };
    let r = run_chain_with_sink(&c, &[Observable::Energy], &mut sink).unwrap();
    assert!(worst >= 0.6);
    assert_eq!(r.summary("U").unwrap().mean, 0.0);
}

#[test]
fn thinned_record_round_trip() {
    let c = hard_sphere_cfg(2.0, 0.5, 0.4);
    let mut config = ChargeConfiguration::empty(c.region.clone());
    config.push(&[0.25, 1.0 / 3.0], 1.0).unwrap();
    let s = ThinnedSample {
        step: 42,
        energy: 0.0,
        config,
    };
    let (back, header) = parse_thinned_record(&thinned_record(&s, &c)).unwrap();
    assert_eq!(back, s);
    assert_eq!(header.z, 0.5);
}

#[test]
fn brute_force_trivial_cases() {
    let c = free_cfg(0.25);
    let opts = BruteForceOptions {
        cells_per_axis: 3,
        tolerance: 1e-6,
        ..Default::default()
    };
    let one = brute_force_gce(&c, 14, &BruteObservable::Constant(1.0), &opts).unwrap();
    assert_eq!(one.expectation, 1.0);
    let n = brute_force_gce(&c, 14, &BruteObservable::Count, &opts).unwrap();
    assert!((n.expectation - 1.0).abs() <= n.truncation_bound, "{n:?}");
    let strict = BruteForceOptions {
        tolerance: 1e-12,
        ..opts
    };
    match brute_force_gce(&c, 3, &BruteObservable::Count, &strict) {
        Err(GceError::Truncation { bound, .. }) => assert!(bound > 1e-12),
        other => panic!("expected a truncation error, got {other:?}"),
    }
}

#[test]
fn brute_force_lattice_sums_match_enumeration() {
    let c = hard_sphere_cfg(2.0, 0.5, 0.4);
    let opts = BruteForceOptions {
        cells_per_axis: 6,
        tolerance: 10.0,
        ..Default::default()
    };
    let fast = brute_force_gce(&c, 3, &BruteObservable::Count, &opts).unwrap();
    let f = Arc::new(|c: &ChargeConfiguration| c.len() as f64);
    let slow_obs = BruteObservable::Function {
        f,
        bound: Arc::new(|n| n as f64),
    };
    let slow = brute_force_gce(&c, 3, &slow_obs, &opts).unwrap();
    for (a, b) in fast.weights.iter().zip(&slow.weights) {
        assert!((a - b).abs() < 1e-12 * a.abs().max(1e-300), "{a} vs {b}");
    }
    assert!((fast.expectation - slow.expectation).abs() < 1e-12);
}

#[test]
fn cached_energy_matches_recomputation() {
    let mut c = smooth_cfg();
    c.domain.abs_tol = 1e-7;
    c.steps = 300;
    c.burn_in = 100;
    c.batch_size = 10;
    c.drift_interval = 50;
    let r = run_chain(&c, &[Observable::Energy, Observable::Count]).unwrap();
    assert!(r.max_drift < 10.0 * c.domain.abs_tol);
    let st = &r.final_states[0];
    let u = interaction_energy(&st.config, &c.kernel, &c.potential, &c.domain).unwrap();
    assert!((u - st.energy).abs() < 10.0 * c.domain.abs_tol);
}
