//! The detection amplitude three ways: mode sum, Poisson image sum and stationary phase.
use ringtoa::amplitudes::{amp_massless_coherent, amp_poisson, amp_saddle, amp_state, PoissonOptions};
use ringtoa::modes::ModeSpace;
use ringtoa::states::{coherent_state, CoherentParams};

fn main() -> ringtoa::Result<()> {
    let cp = CoherentParams::new(0.0, 1000.0, 10.0)?;

    let ml = ModeSpace::new(0.0, 1.0, 1200)?;
    let s = coherent_state(&ml, &cp)?;
    println!("massless: mode sum vs closed form vs Poisson");
    for t in [0.0, 1.5, 2.0, 2.05, 8.3] {
        let a = amp_state(&s, &ml, t, 2.0)?;
        let b = amp_massless_coherent(&ml, &cp, t, 2.0)?;
        let p = amp_poisson(&ml, &cp, t, 2.0, PoissonOptions::default())?;
        println!("  t = {t:>5}: |A| = {:.6e}  |A - closed| = {:.1e}  |A - poisson| = {:.1e}", a.norm(), (a - b).norm(), (a - p.value).norm());
    }

    let ms = ModeSpace::new(1000.0, 1.0, 1200)?;
    let s = coherent_state(&ms, &cp)?;
    println!("massive: mode sum vs Poisson (windings used)");
    for (t, phi) in [(3.0, 2.0), (40.0, 1.0), (120.0, -2.0)] {
        let a = amp_state(&s, &ms, t, phi)?;
        let p = amp_poisson(&ms, &cp, t, phi, PoissonOptions::default())?;
        println!("  t = {t:>5}: |A| = {:.6e}  |A - poisson| = {:.1e}  n in [{}, {}]", a.norm(), (a - p.value).norm(), p.n_min, p.n_max);
    }

    // bare ring propagator far inside the light cone
    let heavy = ModeSpace::new(50.0, 1.0, 4000)?;
    for (t, phi) in [(20.0, 1.0), (35.0, 2.5)] {
        let z = amp_saddle(&heavy, t, phi, 0.1)?;
        println!("saddle point at t = {t}, phi = {phi}: {:.6} {:+.6}i", z.re, z.im);
    }
    Ok(())
}
