//! The ring as a clock: cumulative detection probability, ticks and breakdown for massive particles.
use ringtoa::clock::{clock_quality, cumulative, extract_ticks, TickOptions};
use ringtoa::detector::LocalizationMatrix;
use ringtoa::modes::ModeSpace;
use ringtoa::probability::{timescales, DensityEvaluator, Normalization};
use ringtoa::states::{coherent_state, CoherentParams};

fn main() -> ringtoa::Result<()> {
    let cp = CoherentParams::new(0.0, 1000.0, 10.0)?;
    let ms = ModeSpace::new(0.0, 1.0, 1200)?;
    let tau = 2.0 * std::f64::consts::PI;
    let times: Vec<f64> = (0..=8000).map(|j| j as f64 * 20.0 * tau / 8000.0).collect();
    let ev = DensityEvaluator::new(&coherent_state(&ms, &cp)?, &LocalizationMatrix::maximal(ms.modes()), &ms, None, Normalization::UnitPeriod)?;
    let p = ev.grid(&times, &[std::f64::consts::PI])?.density;
    let w = cumulative(&times, &p);
    let q = clock_quality(&extract_ticks(&times, &p, TickOptions::default())?, tau)?;
    println!("massless: {} ticks, mean spacing {:.9}, jitter {:.1e}, W(20 periods) = {:.6}", q.ticks.len(), q.mean_spacing, q.spacing_jitter, w.last().unwrap());

    let mm = ModeSpace::new(1000.0, 1.0, 1200)?;
    let ts = timescales(&mm, cp.xi, cp.alpha);
    let dt = ts.tau / 40.0;
    let times: Vec<f64> = (0..).map(|j| j as f64 * dt).take_while(|&t| t <= 2.5 * ts.t_q).collect();
    let ev = DensityEvaluator::new(&coherent_state(&mm, &cp)?, &LocalizationMatrix::maximal(mm.modes()), &mm, None, Normalization::UnitPeriod)?;
    let p = ev.grid(&times, &[0.0])?.density;
    let q = clock_quality(&extract_ticks(&times, &p, TickOptions::default())?, ts.tau)?;
    println!(
        "massive: tau = {:.5}, mean spacing {:.5}, width growth {:.2e}, last resolvable tick at {:.3} T_q",
        ts.tau,
        q.mean_spacing,
        q.width_growth,
        q.last_resolvable_time.unwrap_or(f64::NAN) / ts.t_q
    );
    Ok(())
}
