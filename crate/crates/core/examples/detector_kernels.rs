//! Detection kernels, localization operators, their Wigner–Weyl symbols and post-selection.
use std::f64::consts::PI;

use ringtoa::detector::{
    absorption, localization_matrix, marginal_tail, wigner_weyl, DetectorKernel, KernelTable, LocalizationMatrix,
};
use ringtoa::modes::ModeSpace;
use ringtoa::states::{coherent_state, post_select, CoherentParams};

fn main() -> ringtoa::Result<()> {
    let ms = ModeSpace::new(2.0, 1.0, 40)?;
    let ring = DetectorKernel::ring_exponential(1.0, 0.7)?;
    let l = localization_matrix(&ring, &ms, None, 1..=40)?;
    println!("ring-exponential kernel: maximal = {}", l.is_maximal());

    let ml = DetectorKernel::max_localization(1.0, 0.3, 0.5)?;
    let l = localization_matrix(&ml, &ms, None, 1..=40)?;
    println!("max-localization kernel: L(3, 17) = {}", l.get(3, 17));

    let dense = LocalizationMatrix::from_fn(1..=40, |m, mp| 2.0 * ((m * mp) as f64).sqrt() / (m + mp) as f64)?;
    println!("log-convex 1/m kernel: L(3, 17) = {:.6}", dense.get(3, 17));

    let omegas: Vec<f64> = (0..=600).map(|i| i as f64 * 0.01).collect();
    let mgrid: Vec<f64> = (-12..=12).map(|i| i as f64 * 0.5).collect();
    let table = KernelTable::tabulate(&omegas, &mgrid, |w, _| (-w * w).exp())?;
    let small = ModeSpace::new(0.0, 1.0, 5)?;
    match localization_matrix(&DetectorKernel::Custom { table }, &small, None, 1..=5) {
        Err(e) => println!("Gaussian kernel rejected: {e}"),
        Ok(_) => println!("Gaussian kernel unexpectedly accepted"),
    }

    for mmax in [50i64, 100, 200] {
        let l = LocalizationMatrix::maximal(-mmax..=mmax);
        let n = 16 * mmax as usize;
        let thetas: Vec<f64> = (0..n).map(|j| -PI + 2.0 * PI * j as f64 / n as f64).collect();
        let f = wigner_weyl(&l, &thetas, &[0.3]);
        let total = f.theta_integral(0) + marginal_tail(&l, 0.3);
        println!(
            "m_max {mmax:>3}: theta FWHM {:.5} (x m_max = {:.4}), marginal {:.12}",
            f.theta_fwhm(0).unwrap(),
            f.theta_fwhm(0).unwrap() * mmax as f64,
            total
        );
    }

    let s = coherent_state(&ms, &CoherentParams::new(0.0, 20.0, 3.0)?)?;
    let a = absorption(&ring, &ms, -40..=40);
    let after = post_select(&s, &a)?;
    println!("post-selected state: <m> {:.4} -> {:.4}", s.mean_momentum(), after.mean_momentum());
    Ok(())
}
