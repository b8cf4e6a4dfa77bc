//! Joint two-detector probabilities and the measurement-independence inequalities.
use ringtoa::detector::LocalizationMatrix;
use ringtoa::modes::ModeSpace;
use ringtoa::multitime::{violation_scan, Inequality, JointEvaluator, ScanGrid, TwoParticleState};
use ringtoa::probability::Normalization;
use ringtoa::states::{coherent_state, line_state_on_ring, CoherentParams, LineFamily, LineState};

fn main() -> ringtoa::Result<()> {
    // b = 0 pair: a Gaussian and its first excitation
    let ms = ModeSpace::new(0.0, 1.0, 600)?;
    let sigma = 0.05;
    let g = line_state_on_ring(&ms, &LineState::gaussian(200.0, sigma)?, 0.0)?;
    let x = line_state_on_ring(&ms, &LineState::new(200.0, sigma, LineFamily::GaussianTimesX)?, 0.0)?;
    let tps = TwoParticleState::symmetrized(g, x, ms)?;
    let det = LocalizationMatrix::maximal(ms.modes());
    let ev = JointEvaluator::new(&tps, &det, &det, Normalization::default())?;
    println!("b = {:.1e}, lambda = {:.3}", tps.b(), tps.lambda());
    for s in [0.2, 0.4, 0.43, 1.0, 2.4, 2.43, 3.0] {
        let j = ev.margin_j(1.0 + s * sigma, 1.0)?;
        println!("  |tau|/sigma = {s:>4}: J margin {:+.4e} violated = {}", j.margin, j.violated);
    }

    // overlapping massive coherent pair
    let fr = ModeSpace::new(1000.0, 1.0, 1200)?;
    let c = |xi| coherent_state(&fr, &CoherentParams::new(0.0, xi, 10.0).unwrap());
    let pair = TwoParticleState::symmetrized(c(1005.0)?, c(995.0)?, fr)?;
    let t2: Vec<f64> = (0..600).map(|k| 40.0 + k as f64 * 0.05).collect();
    let rep = violation_scan(&pair, &LocalizationMatrix::maximal(fr.modes()), &ScanGrid::new(vec![50.0], t2, 0.0, 0.0))?;
    println!(
        "massive pair (b = {:.3}): {} J and {} CS violations over {} points",
        pair.b(),
        rep.count(Inequality::J),
        rep.count(Inequality::Cs),
        rep.rows.len()
    );
    Ok(())
}
