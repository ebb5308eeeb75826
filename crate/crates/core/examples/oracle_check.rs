//! Runs the mirror-source simulator and prints the largest dB deviation
//! from the closed form over [2 ns, 5T].

use std::time::Instant;

use roomem::{
    pds_components, simulate_pdp, Execution, PdsParams, Placement, PolGain, RoomGeometry,
    SimConfig, WallMaterial,
};

fn main() {
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(100_000);
    for g in [0.3, 0.4, 0.5] {
        let v = PolGain::vertical();
        let p = PdsParams::new(
            RoomGeometry::new(3.0, 4.0, 3.0).unwrap(),
            WallMaterial::new(g, 0.04).unwrap(),
            v,
            v,
            5e-3,
        )
        .unwrap();
        let t = p.reverberation_time();
        let cfg = SimConfig {
            n_realizations: n,
            bin_width: 1e-9,
            max_delay: (5.0 * t / 1e-9).ceil() * 1e-9,
            rng_seed: 2024,
            placement: Placement::Uniform,
        };
        let start = Instant::now();
        let out = simulate_pdp(&p, &cfg, Execution::Parallel).unwrap();
        let elapsed = start.elapsed();
        let cross_p = p.with_antennas(p.mu_t, p.mu_r.swapped());
        let mut worst = (0.0f64, 0.0f64);
        for (i, tau) in out.co.delays().enumerate() {
            if tau < 2e-9 || tau > 5.0 * t {
                continue;
            }
            let lo = tau - 0.5e-9;
            let avg = |q: &PdsParams| {
                (0..=64)
                    .map(|k| {
                        let w = if k == 0 || k == 64 { 0.5 } else { 1.0 };
                        let x = pds_components(lo + k as f64 * 1e-9 / 64.0, q);
                        w * (x.0 + x.1)
                    })
                    .sum::<f64>()
                    / 64.0
            };
            let dco = 10.0 * (out.co.values()[i] / avg(&p)).log10();
            let dcr = 10.0 * (out.cross.values()[i] / avg(&cross_p)).log10();
            println!(
                "g={g} tau={:.1}ns co {dco:+.3} dB cross {dcr:+.3} dB",
                tau * 1e9
            );
            worst.0 = worst.0.max(dco.abs());
            worst.1 = worst.1.max(dcr.abs());
        }
        println!(
            "g={g}: worst co {:.3} dB, cross {:.3} dB, {:?}",
            worst.0, worst.1, elapsed
        );
    }
}
