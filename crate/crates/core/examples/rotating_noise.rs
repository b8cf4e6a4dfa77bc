//! Vacuum noise of a co-rotating detector relative to a static one.
use ringtoa::detector::DetectorKernel;
use ringtoa::modes::ModeSpace;
use ringtoa::rotation::noise_curve;

fn main() -> ringtoa::Result<()> {
    let ms = ModeSpace::new(0.0, 1.0, 1)?;
    let grid = [0.0, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999];
    println!("{:>8} {:>12} {:>12} {:>12}", "Ω_D r", "a = 0.5", "a = 1", "a = 2");
    let curves: Vec<_> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&a| noise_curve(&DetectorKernel::ring_exponential(1.0, a)?, &ms, &grid))
        .collect::<ringtoa::Result<_>>()?;
    for (j, x) in grid.iter().enumerate() {
        println!("{x:>8} {:>12.6} {:>12.6} {:>12.6}", curves[0].eta[j], curves[1].eta[j], curves[2].eta[j]);
    }
    let dev = curves.iter().flat_map(|c| c.eta.iter().zip(&c.closed_form).map(|(e, f)| (e - f.unwrap()).abs())).fold(0.0, f64::max);
    println!("max |mode sum - closed form| = {dev:.1e}");
    Ok(())
}
