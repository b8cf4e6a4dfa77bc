//! Marginalizing the joint density over one detection time recovers the one-particle density.
use ringtoa::detector::LocalizationMatrix;
use ringtoa::modes::ModeSpace;
use ringtoa::multitime::{kolmogorov_check, KolmogorovOptions, TwoParticleState};
use ringtoa::states::{coherent_state, CoherentParams};

fn main() -> ringtoa::Result<()> {
    let ms = ModeSpace::new(0.0, 1.0, 200)?;
    let c = |xi, alpha, th| coherent_state(&ms, &CoherentParams::new(th, xi, alpha).unwrap());
    let det = LocalizationMatrix::maximal(ms.modes());
    for (label, tps) in [
        ("product", TwoParticleState::product(c(100.0, 5.0, 0.0)?, ms, c(80.0, 4.0, 2.0)?, ms)?),
        ("symmetrized", TwoParticleState::symmetrized(c(100.0, 5.0, 0.0)?, c(90.0, 5.0, 0.5)?, ms)?),
    ] {
        let opts = KolmogorovOptions {
            t1_start: 0.3,
            window: tps.circulation_period(0),
            n_t1: 1024,
            t2: (0..40).map(|k| k as f64 * 0.16).collect(),
        };
        let rep = kolmogorov_check(&tps, &det, &det, 0.0, 1.0, &opts)?;
        println!("{label:>12}: window {:.4}, max relative deviation {:.2e}", rep.window, rep.max_rel_deviation);
    }
    Ok(())
}
