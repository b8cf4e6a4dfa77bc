//! Sagnac fringes at the entry point of a rotating ring, and where the counter-movers meet.
use std::f64::consts::PI;

use ringtoa::modes::{ModeSpace, RotationFrame};
use ringtoa::probability::Normalization;
use ringtoa::rotation::{coincidence_scan, sagnac_scan};
use ringtoa::states::{coherent_state, symmetric_superposition, CoherentParams, RingState};

fn main() -> ringtoa::Result<()> {
    let ms = ModeSpace::new(0.0, 1.0, 1200)?;
    let base = coherent_state(&ms, &CoherentParams::new(0.0, 1000.0, 10.0)?)?;
    let sym = symmetric_superposition(&base)?;
    let s = RingState::pure(&ms, sym.coefficients().unwrap().to_vec())?;

    let rf = RotationFrame::new(1e-4, ms)?;
    let times: Vec<f64> = (0..60_000).map(|j| 0.005 * j as f64).collect();
    let scan = sagnac_scan(&s, &rf, &times, Normalization::UnitPeriod)?;
    println!(
        "expected {:.6}, from zero crossings {:.6}, from phase slope {:.6}, mean visibility {:.3}",
        scan.expected_frequency,
        scan.crossing_frequency.unwrap_or(f64::NAN),
        scan.phase_frequency.unwrap_or(f64::NAN),
        scan.mean_visibility
    );
    for f in scan.fringes.iter().step_by(10) {
        println!("  t = {:>8.3}: signal {:+.4}, visibility {:.4}", f.t, f.signal, f.visibility);
    }

    let rf = RotationFrame::new(0.01, ms)?;
    let times: Vec<f64> = (0..200_000).map(|j| 0.002 * j as f64).collect();
    let c = coincidence_scan(&s, &rf, PI / 2.0, &times, f64::INFINITY, Normalization::UnitPeriod)?;
    let k = c.strongest_overlap.unwrap();
    println!(
        "phi = pi/2: strongest left/right overlap at t = {:.2}, kinematics predict {:.2}",
        c.ticks[k].t, c.kinematic_time
    );
    Ok(())
}
