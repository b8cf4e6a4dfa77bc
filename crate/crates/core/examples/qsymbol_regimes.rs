//! Phase-space portrait of the arrival POVM: semiclassical, collapsed and revival regimes.
use ringtoa::modes::ModeSpace;
use ringtoa::probability::{autocorrelation_series, qsymbol_snapshot, timescales};
use ringtoa::states::{coherent_state, CoherentParams};

fn main() -> ringtoa::Result<()> {
    let ms = ModeSpace::new(1000.0, 1.0, 2000)?;
    let (xi, alpha, phi) = (1000.0, 10.0, std::f64::consts::PI);
    let ts = timescales(&ms, xi, alpha);
    println!("T_q = {:.3}, T_rec = {:.1}, tick period {:.5}", ts.t_q, ts.t_rec, ts.tau);
    for f in [0.07, 0.6, 1.5, 1.8, 4.2, 10.0] {
        let q = qsymbol_snapshot(&ms, xi, alpha, phi, f * ts.t_q, 4096)?;
        println!(
            "t = {f:>5} T_q: {:>3} peaks, dominant fraction {:.3}, largest peak FWHM {:.4}",
            q.peaks.len(),
            q.dominant_fraction,
            q.peak_fwhm
        );
    }
    let s = coherent_state(&ms, &CoherentParams::new(0.0, xi, alpha)?)?;
    // revival peaks are only ~0.1 wide in t
    let times: Vec<f64> = (0..2000).map(|j| ts.t_rec - 10.0 + 0.01 * j as f64).collect();
    let f = autocorrelation_series(&s, &ms, &times);
    let best = f.iter().copied().fold(0.0, f64::max);
    println!("max autocorrelation within T_rec +- 10: {best:.3}");
    Ok(())
}
