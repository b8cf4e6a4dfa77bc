//! Jacobi θ₃, the coherent-state normalization and the sinc kernel.
use ringtoa::specfun::{coherent_norm, sinc, theta3};

fn main() -> ringtoa::Result<()> {
    for (x, y) in [(0.0, 0.1), (0.3, 0.5), (1.0, 0.9)] {
        println!("theta3({x}, {y}) = {:.12}", theta3(x, y)?);
    }
    for (xi, alpha) in [(0.5, 0.5), (10.0, 3.0), (1000.0, 10.0)] {
        // N_ξα normalizes the Gaussian profile on the integer lattice
        println!("coherent_norm(xi = {xi}, alpha = {alpha}) = {:.9}", coherent_norm(xi, alpha)?);
    }
    println!("sinc(0) = {}, sinc(pi/2) = {:.6}", sinc(0.0), sinc(std::f64::consts::FRAC_PI_2));
    Ok(())
}
