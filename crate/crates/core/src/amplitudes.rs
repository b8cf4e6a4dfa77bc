//! Detection amplitudes: mode sums, Poisson images, the saddle-point form, the massless
//! closed form and the rotating-frame split.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::modes::{truncation_remainder, ModeSpace, RotationFrame};
use crate::quad::{integrate, QuadOptions};
use crate::specfun::coherent_norm;
use crate::states::{CoherentParams, RingState};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeMethod {
    ModeSum,
    Poisson,
    Saddle,
    MasslessExact,
}

/// Complex amplitude samples on a (t, φ) grid; `values[it * phis.len() + iphi]`.
#[derive(Debug, Clone, Serialize)]
pub struct AmplitudeField {
    pub times: Vec<f64>,
    pub phis: Vec<f64>,
    #[serde(serialize_with = "ser_complex")]
    pub values: Vec<Complex64>,
    pub method: AmplitudeMethod,
    pub provenance: serde_json::Value,
}

fn ser_complex<S: serde::Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

impl AmplitudeField {
    /// Evaluate `f` on every grid point in parallel.
    pub fn evaluate<F>(
        times: &[f64],
        phis: &[f64],
        method: AmplitudeMethod,
        provenance: serde_json::Value,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<Complex64> + Sync,
    {
        let np = phis.len();
        let values = (0..times.len() * np)
            .into_par_iter()
            .map(|k| f(times[k / np], phis[k % np]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { times: times.to_vec(), phis: phis.to_vec(), values, method, provenance })
    }

    pub fn at(&self, it: usize, iphi: usize) -> Complex64 {
        self.values[it * self.phis.len() + iphi]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Precomputed terms ψ_m √|v_m| and energies for a pure state; the zero mode is dropped.
#[derive(Debug, Clone)]
pub struct StateAmplitude {
    modes: Vec<f64>,
    weights: Vec<Complex64>,
    energies: Vec<f64>,
    remainder: f64,
}

impl StateAmplitude {
    pub fn new(state: &RingState, ms: &ModeSpace) -> Result<Self> {
        Self::build(state, ms, |m| ms.omega(m), |_| true)
    }

    /// Same sum with ω̃_m in the phase and a mode filter: 𝒟₊ keeps ṽ_m ≥ 0, 𝒟₋ the rest.
    pub fn rotating(state: &RingState, rf: &RotationFrame, positive: bool) -> Result<Self> {
        let ms = rf.modes;
        let rim = rf.rim_speed();
        Self::build(state, &ms, |m| rf.rotating_omega(m), move |m| (ms.velocity_at(m as f64) - rim >= 0.0) == positive)
    }

    fn build(
        state: &RingState,
        ms: &ModeSpace,
        energy: impl Fn(i64) -> f64,
        keep: impl Fn(i64) -> bool,
    ) -> Result<Self> {
        let Some(_) = state.coefficients() else {
            return Err(Error::InvalidState("amplitude sums require a pure state".into()));
        };
        if state.m_max() > ms.m_max {
            return Err(Error::InvalidState("state cutoff exceeds the mode space".into()));
        }
        let mut out = Self { modes: vec![], weights: vec![], energies: vec![], remainder: 0.0 };
        let mm = state.m_max();
        for m in -mm..=mm {
            let psi = state.amplitude(m).unwrap();
            if m == 0 || psi == ZERO || !keep(m) {
                continue;
            }
            out.modes.push(m as f64);
            out.weights.push(psi * ms.velocity_at(m as f64).abs().sqrt());
            out.energies.push(energy(m));
        }
        let edge = state.amplitude(mm).unwrap().norm().max(state.amplitude(-mm).unwrap().norm());
        out.remainder = truncation_remainder(edge, out.modes.len());
        Ok(out)
    }

    /// Σ_m c_m e^{imφ − iω_m t}.
    pub fn eval(&self, t: f64, phi: f64) -> Complex64 {
        let mut acc = ZERO;
        for ((&m, &c), &w) in self.modes.iter().zip(&self.weights).zip(&self.energies) {
            let (s, co) = (m * phi - w * t).sin_cos();
            acc += c * Complex64::new(co, s);
        }
        acc
    }

    pub fn truncation_remainder(&self) -> f64 {
        self.remainder
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
}

/// Bare amplitude Σ_{m=1}^{m_max} w_m √|v_m| e^{imφ − iω_m t} with a cosine taper over the
/// last 10% of modes. Only state-contracted amplitudes are physical.
pub fn amp_ring(ms: &ModeSpace, t: f64, phi: f64) -> Complex64 {
    let mmax = ms.m_max as f64;
    let start = 0.9 * mmax;
    let mut acc = ZERO;
    for m in 1..=ms.m_max {
        let mf = m as f64;
        let w = if mf <= start { 1.0 } else { 0.5 * (1.0 + (PI * (mf - start) / (mmax - start)).cos()) };
        let (s, c) = (mf * phi - ms.omega(m) * t).sin_cos();
        acc += Complex64::new(c, s) * (w * ms.velocity_at(mf).abs().sqrt());
    }
    acc
}

/// Σ_m ψ_m √|v_m| e^{imφ − iω_m t}.
pub fn amp_state(state: &RingState, ms: &ModeSpace, t: f64, phi: f64) -> Result<Complex64> {
    Ok(StateAmplitude::new(state, ms)?.eval(t, phi))
}

#[derive(Debug, Clone, Copy)]
pub struct PoissonOptions {
    /// Images below `image_tol` times the largest one are neglected.
    pub image_tol: f64,
    /// Profile cut in units of α on each side of ξ.
    pub alpha_cut: f64,
    pub max_windings: usize,
}

impl Default for PoissonOptions {
    fn default() -> Self {
        Self { image_tol: 1e-12, alpha_cut: 12.0, max_windings: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PoissonAmplitude {
    #[serde(skip)]
    pub value: Complex64,
    /// Σ_n |image_n|², the no-overlap approximation to |value|².
    pub incoherent: f64,
    pub n_min: i64,
    pub n_max: i64,
}

/// One line-theory image ∫dy F(y) √|v(y)| e^{iy(φ+2πn) − iω(y)t} of the coherent profile
/// F(y) = C_ξ e^{−(y−ξ)²/2α² − iyθ}, by adaptive quadrature.
pub fn coherent_image(ms: &ModeSpace, cp: &CoherentParams, t: f64, phi: f64, n: i64, cut: f64) -> Result<Complex64> {
    let c = coherent_norm(cp.xi, cp.alpha)?;
    let u = phi - cp.theta + 2.0 * PI * n as f64;
    let w_xi = ms.omega_at(cp.xi);
    let (lo, hi) = (cp.xi - cut * cp.alpha, cp.xi + cut * cp.alpha);
    let n_split = 16usize;
    let mut points: Vec<f64> = (0..=n_split).map(|j| lo + (hi - lo) * j as f64 / n_split as f64).collect();
    if lo < 0.0 && hi > 0.0 {
        points.push(0.0);
        points.sort_by(f64::total_cmp);
    }
    // phase relative to the packet center keeps the integrand slowly varying near the peak
    let f = |y: f64| {
        let g = cp.profile(c, y) * ms.velocity_at(y).abs().sqrt();
        let phase = (y - cp.xi) * u - (ms.omega_at(y) - w_xi) * t;
        Complex64::from_polar(g, phase)
    };
    let scale = c * cp.alpha * (2.0 * PI).sqrt();
    let floor = scale * (1e-13 + 1e-15 * (u.abs() * cp.alpha + t.abs() * cp.alpha / ms.r));
    let opts = QuadOptions { rel_tol: 1e-12, abs_tol: floor, max_intervals: 20_000 };
    let r = integrate(f, &points, opts)?;
    Ok(r.value * Complex64::from_polar(1.0, cp.xi * u - w_xi * t))
}

/// Σ_n of coherent images, the window grown outward from the classical winding until
/// three consecutive images on each side fall below `image_tol` of the largest.
pub fn amp_poisson(
    ms: &ModeSpace,
    cp: &CoherentParams,
    t: f64,
    phi: f64,
    opts: PoissonOptions,
) -> Result<PoissonAmplitude> {
    let v = ms.velocity_at(cp.xi);
    let n0 = ((v * t / ms.r - (phi - cp.theta)) / (2.0 * PI)).round() as i64;
    let image = |n: i64| coherent_image(ms, cp, t, phi, n, opts.alpha_cut);
    let first = image(n0)?;
    let mut total = first;
    let mut incoherent = first.norm_sqr();
    // tolerance is relative to the packet scale C_ξα√(2π) at least, so a point far from the
    // packet (all images at roundoff level) still terminates
    let scale = coherent_norm(cp.xi, cp.alpha)? * cp.alpha * (2.0 * PI).sqrt();
    let mut biggest = first.norm().max(scale);
    let (mut n_min, mut n_max) = (n0, n0);
    for dir in [1i64, -1] {
        let mut quiet = 0;
        let mut n = n0;
        let mut used = 0usize;
        while quiet < 3 {
            n += dir;
            used += 1;
            if used > opts.max_windings {
                return Err(Error::WindowTooSmall { windings: used });
            }
            let z = image(n)?;
            total += z;
            incoherent += z.norm_sqr();
            biggest = biggest.max(z.norm());
            quiet = if z.norm() <= opts.image_tol * biggest { quiet + 1 } else { 0 };
        }
        if dir > 0 {
            n_max = n;
        } else {
            n_min = n;
        }
    }
    Ok(PoissonAmplitude { value: total, incoherent, n_min, n_max })
}

/// Massless coherent amplitude from Gaussian images: Σ_n C_ξ√(2π)α e^{iξu_n − α²u_n²/2},
/// u_n = φ − θ + 2πn − t/r. The zero mode's weight C_ξ e^{−ξ²/2α²} is the only difference
/// from the mode sum.
pub fn amp_massless_coherent(ms: &ModeSpace, cp: &CoherentParams, t: f64, phi: f64) -> Result<Complex64> {
    if ms.mu != 0.0 {
        return Err(Error::Domain("massless closed form requires mu = 0".into()));
    }
    let c = coherent_norm(cp.xi, cp.alpha)?;
    let base = phi - cp.theta - t / ms.r;
    let n0 = (-base / (2.0 * PI)).round() as i64;
    let reach = (40.0 / (2.0 * PI * cp.alpha)).ceil() as i64 + 1;
    let mut acc = ZERO;
    for n in (n0 - reach)..=(n0 + reach) {
        let u = base + 2.0 * PI * n as f64;
        acc += Complex64::from_polar((-0.5 * cp.alpha * cp.alpha * u * u).exp(), cp.xi * u);
    }
    Ok(acc * c * cp.alpha * (2.0 * PI).sqrt())
}

/// Default light-cone exclusion: max(3 grid steps, 10/μ).
pub fn default_light_cone_exclusion(mu: f64, dt: f64) -> f64 {
    (3.0 * dt).max(10.0 / mu)
}

/// Stationary-phase amplitude Σ_{x_n < t} √(2πμr²t x_n)/(t² − x_n²)^{3/4} e^{−iπ/4 − iμ√(t² − x_n²)},
/// x_n = r(φ + 2πn) > 0.
pub fn amp_saddle(ms: &ModeSpace, t: f64, phi: f64, delta_lc: f64) -> Result<Complex64> {
    if !(ms.mu > 0.0) {
        return Err(Error::Domain("saddle-point form requires mu > 0".into()));
    }
    let (mu, r) = (ms.mu, ms.r);
    let prefactor_phase = Complex64::from_polar(1.0, -PI / 4.0);
    let phi0 = phi.rem_euclid(2.0 * PI);
    let mut acc = ZERO;
    let mut n = 0i64;
    loop {
        let x = r * (phi0 + 2.0 * PI * n as f64);
        if x > t + delta_lc {
            break;
        }
        if (t - x).abs() < delta_lc {
            return Err(Error::LightConeProximity { winding: n, distance: (t - x).abs() });
        }
        if x > 0.0 && x < t {
            let d2 = t * t - x * x;
            let mag = (2.0 * PI * mu * r * r * t * x).sqrt() / d2.powf(0.75);
            acc += prefactor_phase * Complex64::from_polar(mag, -mu * d2.sqrt());
        }
        n += 1;
    }
    Ok(acc)
}

/// Precomputed (𝒟₊, 𝒟₋) sums for a rotating ring.
#[derive(Debug, Clone)]
pub struct RotatingAmplitude {
    plus: StateAmplitude,
    minus: StateAmplitude,
}

impl RotatingAmplitude {
    pub fn new(state: &RingState, rf: &RotationFrame) -> Result<Self> {
        Ok(Self { plus: StateAmplitude::rotating(state, rf, true)?, minus: StateAmplitude::rotating(state, rf, false)? })
    }

    pub fn eval(&self, t: f64, phi: f64) -> (Complex64, Complex64) {
        (self.plus.eval(t, phi), self.minus.eval(t, phi))
    }
}

/// 𝒟±(t, φ) = Σ_m Θ(±ṽ_m) ψ_m √|v_m| e^{imφ − iω̃_m t}; ṽ_m = 0 goes to 𝒟₊.
pub fn amp_rotating_split(state: &RingState, rf: &RotationFrame, t: f64, phi: f64) -> Result<(Complex64, Complex64)> {
    RotationFrame::new(rf.omega_d, rf.modes)?;
    Ok(RotatingAmplitude::new(state, rf)?.eval(t, phi))
}

/// Smallest m ≥ 1 with ṽ_m ≥ 0; modes below it (and all m ≤ 0) feed 𝒟₋.
pub fn rotating_split_index(rf: &RotationFrame) -> Option<i64> {
    (1..=rf.modes.m_max).find(|&m| rf.modes.velocity_at(m as f64) - rf.rim_speed() >= 0.0)
}
