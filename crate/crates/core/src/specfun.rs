//! Jacobi θ₃, sinc and the coherent-state normalization constant.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const THETA_TOL: f64 = 1e-15;
pub const THETA_MAX_TERMS: usize = 10_000;

/// θ₃(x, y) = 1 + 2 Σ_{n≥1} y^{n²} cos(2nx).
pub fn theta3(x: f64, y: f64) -> Result<f64> {
    theta3_with_tol(x, y, THETA_TOL)
}

pub fn theta3_with_tol(x: f64, y: f64, abs_tol: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&y) {
        return Err(Error::Domain(format!("theta3 nome must lie in [0, 1), got {y}")));
    }
    if y == 0.0 {
        return Ok(1.0);
    }
    let ln_y = y.ln();
    let mut sum = 0.0;
    for n in 1..=THETA_MAX_TERMS {
        let nf = n as f64;
        let term = (nf * nf * ln_y).exp() * (2.0 * nf * x).cos();
        sum += term;
        if (nf * nf * ln_y).exp() < abs_tol {
            break;
        }
        if n == THETA_MAX_TERMS {
            log::warn!("theta3 hit the {THETA_MAX_TERMS}-term cap at y = {y}");
        }
    }
    Ok(1.0 + 2.0 * sum)
}

/// sin(u)/u with a Taylor branch near zero.
pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        let u2 = u * u;
        1.0 - u2 / 6.0 + u2 * u2 / 120.0
    } else {
        u.sin() / u
    }
}

/// C_ξ = (πα²)^{-1/4} θ₃(−πξ, e^{−π²α²})^{-1/2}.
pub fn coherent_norm(xi: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be > 0, got {alpha}")));
    }
    let nome = (-PI * PI * alpha * alpha).exp();
    let th = theta3(-PI * xi, nome)?;
    Ok((PI * alpha * alpha).powf(-0.25) / th.sqrt())
}

/// Σ_{k≥0} (−1)^k / (k + a) for a > 0, via ½[ψ((a+1)/2) − ψ(a/2)].
pub fn alternating_inverse_sum(a: f64) -> f64 {
    use statrs::function::gamma::digamma;
    0.5 * (digamma(0.5 * (a + 1.0)) - digamma(0.5 * a))
}
