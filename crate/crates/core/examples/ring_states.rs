//! Coherent ring states, line Gaussians wrapped on the ring, dispersion and mirror superpositions.
use ringtoa::modes::ModeSpace;
use ringtoa::probability::timescales;
use ringtoa::states::{coherent_state, line_state_on_ring, spread_at_time, symmetric_superposition, CoherentParams, LineState};

fn main() -> ringtoa::Result<()> {
    let ms = ModeSpace::new(1000.0, 1.0, 1500)?;
    let cp = CoherentParams::new(0.0, 1000.0, 10.0)?;
    let s = coherent_state(&ms, &cp)?;
    println!("coherent: trace {:.15}, <m> = {:.6}", s.trace(), s.mean_momentum());

    let ts = timescales(&ms, cp.xi, cp.alpha);
    let line = LineState::gaussian(cp.xi / ms.r, cp.line_sigma(ms.r))?;
    println!("sigma(0) = {:.5}", spread_at_time(&line, &ms, 0.0));
    for f in [0.07, 0.5, 1.0, 2.0] {
        let t = f * ts.t_q;
        println!("sigma({f:>4} T_q) = {:.5}", spread_at_time(&line, &ms, t));
    }

    let g = line_state_on_ring(&ms, &LineState::gaussian(900.0, 0.05)?, 1.0)?;
    println!("wrapped line Gaussian: trace {:.12}, <m> = {:.4}", g.trace(), g.mean_momentum());

    let massless = ModeSpace::new(0.0, 1.0, 1200)?;
    let sym = symmetric_superposition(&coherent_state(&massless, &cp)?)?;
    println!("mirror superposition: asymmetry {:e}, <m> = {:.2e}", sym.asymmetry(), sym.mean_momentum());
    Ok(())
}
