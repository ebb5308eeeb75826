//! Closed-form model checked against independent numerical routes.

use proptest::prelude::*;
use roomem::{
    co_cross_ratio, cpr, cpr_distance, mixing_constant, mixing_time, pds, pds_asymptote,
    pds_components, pds_conditional, reverberation_time, DistanceCondition, PdsParams, PolGain,
    RoomGeometry, WallMaterial,
};

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn room() -> RoomGeometry {
    RoomGeometry::new(3.0, 4.0, 3.0).unwrap()
}

fn params(g: f64, gamma: f64, xi: f64) -> PdsParams {
    let mu = PolGain::lossless(xi).unwrap();
    PdsParams::new(room(), WallMaterial::new(g, gamma).unwrap(), mu, mu, 5e-3).unwrap()
}

/// CPR by integrating the two components over `[from, from + 40T]`, plus an
/// optional co-polar spike.
fn integrated_cpr(p: &PdsParams, from: f64, spike: f64) -> f64 {
    let t = p.reverberation_time();
    let end = from + 40.0 * t;
    let co = simpson(|tau| pds_components(tau, p).0, from, end, 200_000);
    let cross = simpson(|tau| pds_components(tau, p).1, from, end, 200_000);
    (co + spike) / cross
}

#[test]
fn cpr_matches_integration_over_grid() {
    for g in [0.2, 0.4, 0.6] {
        for gamma in [0.01, 0.04, 0.2] {
            for xi in [0.0, 0.05, 0.25] {
                let p = params(g, gamma, xi);
                let closed = cpr(&p);
                let numeric = integrated_cpr(&p, 0.0, 0.0);
                if xi == 0.0 {
                    assert!(closed.is_infinite() && numeric.is_infinite());
                } else {
                    let rel = (closed - numeric).abs() / numeric;
                    assert!(rel < 1e-3, "g={g} γ={gamma} ξ={xi}: {closed} vs {numeric}");
                }
            }
        }
    }
}

#[test]
fn distance_cpr_matches_integration() {
    let p = params(0.4, 0.04, 0.1);
    let c = p.speed_of_light();
    for d in [0.5, 1.35, 1.8, 3.3] {
        for los in [false, true] {
            let cond = DistanceCondition::new(d, los).unwrap();
            let onset = d / c;
            // Integrate the conditional density itself, starting at the gate.
            let t = p.reverberation_time();
            let end = onset + 40.0 * t;
            let co = simpson(
                |tau| {
                    let dens = pds_conditional(tau, &p, &cond).density;
                    if dens == 0.0 {
                        0.0
                    } else {
                        pds_components(tau, &p).0
                    }
                },
                onset,
                end,
                200_000,
            );
            let cross = simpson(
                |tau| {
                    let dens = pds_conditional(tau, &p, &cond).density;
                    if dens == 0.0 {
                        0.0
                    } else {
                        pds_components(tau, &p).1
                    }
                },
                onset,
                end,
                200_000,
            );
            let spike = pds_conditional(onset, &p, &cond)
                .spike
                .map_or(0.0, |s| s.weight);
            let numeric = (co + spike) / cross;
            let closed = cpr_distance(&p, &cond);
            let rel = (closed - numeric).abs() / numeric;
            assert!(rel < 5e-3, "d={d} los={los}: {closed} vs {numeric}");
        }
    }
}

#[test]
fn classical_model_recovered_without_leakage() {
    let p = params(0.4, 0.0, 0.0);
    let t = p.reverberation_time();
    let scale = p.speed_of_light() * 25e-6 / 36.0;
    for i in 0..200 {
        let tau = i as f64 * 0.5e-9;
        let expect = scale * (-tau / t).exp();
        let got = pds(tau, &p);
        assert!((got - expect).abs() <= 1e-12 * expect);
        assert_eq!(pds_components(tau, &p).1, 0.0);
    }
}

#[test]
fn mixing_constant_is_geometry_free() {
    let m = WallMaterial::new(0.4, 0.04).unwrap();
    let k = mixing_constant(&m);
    for dims in [(3.0, 4.0, 3.0), (6.0, 10.0, 3.0), (2.0, 2.0, 2.0)] {
        let r = RoomGeometry::new(dims.0, dims.1, dims.2).unwrap();
        let ratio = mixing_time(&r, &m, 3e8) / reverberation_time(&r, &m, 3e8);
        assert!(
            (ratio - k).abs() <= 4.0 * f64::EPSILON * k,
            "{dims:?}: {ratio} vs {k}"
        );
    }
}

#[test]
fn asymptote_reached_after_five_mixing_times() {
    for (g, gamma) in [(0.4, 0.04), (0.3, 0.2), (0.6, 0.01)] {
        let p = params(g, gamma, 0.0);
        let tp = p.mixing_time();
        for i in 0..100 {
            let tau = 5.0 * tp + i as f64 * tp / 10.0;
            let db = 10.0 * (pds(tau, &p) / pds_asymptote(tau, &p)).log10();
            assert!(db <= 0.05, "g={g} γ={gamma} τ={tau}: {db}");
        }
    }
}

#[test]
fn gap_to_asymptote_decays_with_combined_rate() {
    let p = params(0.4, 0.04, 0.1);
    let rate = 1.0 / p.reverberation_time() + 1.0 / p.mixing_time();
    let gap = |tau: f64| pds(tau, &p) - pds_asymptote(tau, &p);
    let base = gap(1e-9) * (1e-9 * rate).exp();
    for tau in [5e-9, 2e-8, 6e-8] {
        let scaled = gap(tau) * (tau * rate).exp();
        assert!((scaled / base - 1.0).abs() < 1e-9);
    }
}

proptest! {
    #[test]
    fn decomposition_and_reciprocity(
        g in 0.05f64..0.95,
        gamma in 0.0f64..0.95,
        mt in (0.0f64..1.0, 0.0f64..1.0),
        mr in (0.0f64..1.0, 0.0f64..1.0),
        tau in 0.0f64..2e-7,
    ) {
        let mu_t = PolGain::new(mt.0, mt.1).unwrap();
        let mu_r = PolGain::new(mr.0, mr.1).unwrap();
        let p = PdsParams::new(room(), WallMaterial::new(g, gamma).unwrap(), mu_t, mu_r, 5e-3).unwrap();
        let q = p.with_antennas(mu_r, mu_t);
        let (co, cross) = pds_components(tau, &p);
        let total = pds(tau, &p);
        prop_assert!((total - (co + cross)).abs() <= 1e-15 * total.max(1e-300));
        prop_assert!(total >= 0.0);
        prop_assert_eq!(pds_components(tau, &q), (co, cross));
        prop_assert_eq!(pds(tau, &q), total);
        prop_assert_eq!(cpr(&q).to_bits(), cpr(&p).to_bits());
        prop_assert_eq!(co_cross_ratio(tau, &q).to_bits(), co_cross_ratio(tau, &p).to_bits());
    }

    #[test]
    fn ratio_strictly_decreasing(gamma in 0.001f64..0.9, xi in 0.01f64..0.99, t0 in 1e-3f64..10.0, dt in 1e-3f64..1.0) {
        // Delays in units of T_p; beyond ~30 T_p coth is 1 to double precision.
        let p = params(0.5, gamma, xi);
        let tp = p.mixing_time();
        let a = co_cross_ratio(t0 * tp, &p);
        let b = co_cross_ratio((t0 + dt) * tp, &p);
        prop_assert!(b < a, "{} !< {}", b, a);
    }
}
