//! Detection densities: the conditional density P_c, Q-symbols, vacuum noise, timescales
//! and the regularized-normalization check.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplitudes::{amp_poisson, PoissonOptions, StateAmplitude};
use crate::clock::{cumulative, extract_ticks, Tick, TickOptions};
use crate::detector::{absorption, DetectorKernel, LocalizationMatrix};
use crate::error::{Error, Result};
use crate::modes::{truncation_remainder, ModeSpace, RotationFrame};
use crate::quad::{integrate, QuadOptions};
use crate::states::{coherent_state, CoherentParams, RingState};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
/// Relative size of an imaginary residue that counts as a non-Hermitian input.
pub const RESIDUE_TOL: f64 = 1e-10;
/// Densities below −NEGATIVE_TOL fail; smaller negatives are clipped to zero.
pub const NEGATIVE_TOL: f64 = 1e-10;

/// Choice of the regulator-dependent constant B(γ) in P_c = (B/2πr) Σ ….
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// B = 1: one circulation period of a massless positive-momentum packet integrates to 1.
    #[default]
    UnitPeriod,
    /// B = 2πr, so P_c = Σ … with no prefactor.
    TwoPiR,
}

impl Normalization {
    pub fn b(self, r: f64) -> f64 {
        match self {
            Self::UnitPeriod => 1.0,
            Self::TwoPiR => 2.0 * PI * r,
        }
    }

    /// B/(2πr).
    pub fn prefactor(self, r: f64) -> f64 {
        self.b(r) / (2.0 * PI * r)
    }

    pub fn tag(self) -> &'static str {
        match self {
            Self::UnitPeriod => "unit-period",
            Self::TwoPiR => "b-equals-2pi-r",
        }
    }
}

enum Contraction {
    /// Pure state, maximal L: |Σ c_m e^{…}|².
    Factorized(StateAmplitude),
    /// K(m, m′) = ρ(m, m′) L(m, m′) √|v_m v_{m′}|.
    Matrix { ks: Vec<f64>, energies: Vec<f64>, k: DMatrix<Complex64> },
}

/// P_c(t, φ) for one state and detector, with the mode data precomputed.
pub struct DensityEvaluator {
    contraction: Contraction,
    prefactor: f64,
    /// Σ_m ρ(m, m)|v_m|, the size of the diagonal contribution.
    scale: f64,
    remainder: f64,
    pub normalization: Normalization,
}

impl DensityEvaluator {
    pub fn new(
        state: &RingState,
        det: &LocalizationMatrix,
        ms: &ModeSpace,
        frame: Option<&RotationFrame>,
        normalization: Normalization,
    ) -> Result<Self> {
        if (state.trace() - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidState(format!(
                "P_c needs a post-selected state with unit trace, got {}",
                state.trace()
            )));
        }
        if state.m_max() > ms.m_max {
            return Err(Error::InvalidState("state cutoff exceeds the mode space".into()));
        }
        let support = state.support();
        let outside: Vec<i64> = support.iter().copied().filter(|&m| !det.contains(m)).collect();
        if !outside.is_empty() {
            return Err(Error::SupportViolation { modes: outside });
        }
        let omega_d = frame.map_or(0.0, |f| f.omega_d);
        if (det.omega_d() - omega_d).abs() > 1e-15 {
            return Err(Error::Domain(format!(
                "localization matrix built for Omega_D = {}, frame has {omega_d}",
                det.omega_d()
            )));
        }
        let energy = |m: i64| frame.map_or(ms.omega(m), |f| f.rotating_omega(m));
        let speed = |m: i64| frame.map_or(ms.velocity_at(m as f64), |f| ms.velocity_at(m as f64) - f.rim_speed());
        let scale: f64 = support.iter().map(|&m| state.density(m, m).re * speed(m).abs()).sum();
        let prefactor = normalization.prefactor(ms.r);

        if state.is_pure() && det.is_maximal() && frame.is_none() {
            let amp = StateAmplitude::new(state, ms)?;
            let remainder = amp.truncation_remainder();
            return Ok(Self { contraction: Contraction::Factorized(amp), prefactor, scale, remainder, normalization });
        }
        let modes: Vec<i64> = support.into_iter().filter(|&m| speed(m) != 0.0).collect();
        let n = modes.len();
        let sv: Vec<f64> = modes.iter().map(|&m| speed(m).abs().sqrt()).collect();
        let k = DMatrix::from_fn(n, n, |i, j| {
            state.density(modes[i], modes[j]) * (det.get(modes[i], modes[j]) * sv[i] * sv[j])
        });
        let mm = state.m_max();
        let edge = state.density(mm, mm).re.max(state.density(-mm, -mm).re).max(0.0).sqrt();
        let remainder = truncation_remainder(edge, n);
        Ok(Self {
            contraction: Contraction::Matrix {
                ks: modes.iter().map(|&m| m as f64).collect(),
                energies: modes.iter().map(|&m| energy(m)).collect(),
                k,
            },
            prefactor,
            scale,
            remainder,
            normalization,
        })
    }

    /// Bound on the density error from the mode cutoff.
    pub fn truncation_error(&self) -> f64 {
        self.prefactor * self.remainder * (2.0 * self.scale.sqrt() + self.remainder)
    }

    /// Density before clipping; fails on a large imaginary residue.
    pub fn eval_raw(&self, t: f64, phi: f64) -> Result<f64> {
        let value = match &self.contraction {
            Contraction::Factorized(amp) => return Ok(self.prefactor * amp.eval(t, phi).norm_sqr()),
            Contraction::Matrix { ks, energies, k } => {
                let w: Vec<Complex64> = ks
                    .iter()
                    .zip(energies)
                    .map(|(&m, &e)| {
                        let (s, c) = (m * phi - e * t).sin_cos();
                        Complex64::new(c, s)
                    })
                    .collect();
                let mut acc = ZERO;
                for (j, wj) in w.iter().enumerate() {
                    let col = k.column(j);
                    let inner: Complex64 = col.iter().zip(&w).map(|(kij, wi)| kij * wi).sum();
                    acc += inner * wj.conj();
                }
                acc
            }
        };
        if value.im.abs() > RESIDUE_TOL * value.re.abs().max(self.scale) {
            return Err(Error::NonHermitian { residue: value.im });
        }
        Ok(self.prefactor * value.re)
    }

    /// P_c(t, φ), tiny negatives clipped to 0.
    pub fn eval(&self, t: f64, phi: f64) -> Result<f64> {
        clip(self.eval_raw(t, phi)?)
    }

    /// Parallel evaluation on a (t, φ) grid.
    pub fn grid(&self, times: &[f64], phis: &[f64]) -> Result<ProbabilityGrid> {
        let np = phis.len();
        let raw = (0..times.len() * np)
            .into_par_iter()
            .map(|k| self.eval_raw(times[k / np], phis[k % np]))
            .collect::<Result<Vec<_>>>()?;
        let clipped = raw.iter().filter(|&&v| v < 0.0).count();
        let density = raw.into_iter().map(clip).collect::<Result<Vec<_>>>()?;
        if clipped > 0 {
            log::warn!("clipped {clipped} slightly negative density samples to zero");
        }
        Ok(ProbabilityGrid {
            times: times.to_vec(),
            phis: phis.to_vec(),
            density,
            normalization: self.normalization,
            truncation_error: self.truncation_error(),
        })
    }
}

fn clip(v: f64) -> Result<f64> {
    if v < -NEGATIVE_TOL {
        return Err(Error::NegativeDensity { value: v });
    }
    Ok(v.max(0.0))
}

/// P_c(t, φ) = (B/2πr) Σ_{m,m′} ρ(m, m′) L(m, m′) √|v_m v_{m′}| e^{i(m−m′)φ − i(ω_m−ω_{m′})t};
/// with a frame, ω̃, ṽ and the rotating L.
pub fn pc_density(
    state: &RingState,
    det: &LocalizationMatrix,
    ms: &ModeSpace,
    t: f64,
    phi: f64,
    frame: Option<&RotationFrame>,
) -> Result<f64> {
    DensityEvaluator::new(state, det, ms, frame, Normalization::default())?.eval(t, phi)
}

/// Density samples on a (t, φ) grid; `density[it * phis.len() + iphi]`.
#[derive(Debug, Clone, Serialize)]
pub struct ProbabilityGrid {
    pub times: Vec<f64>,
    pub phis: Vec<f64>,
    pub density: Vec<f64>,
    pub normalization: Normalization,
    pub truncation_error: f64,
}

impl ProbabilityGrid {
    pub fn at(&self, it: usize, iphi: usize) -> f64 {
        self.density[it * self.phis.len() + iphi]
    }

    /// The time profile at the `iphi`-th detector angle.
    pub fn time_profile(&self, iphi: usize) -> Vec<f64> {
        (0..self.times.len()).map(|it| self.at(it, iphi)).collect()
    }

    pub fn max(&self) -> f64 {
        self.density.iter().copied().fold(0.0, f64::max)
    }
}

/// Q-symbol samples over t at fixed (θ, ξ, φ).
#[derive(Debug, Clone, Serialize)]
pub struct QSymbolField {
    pub theta: f64,
    pub xi: f64,
    pub alpha: f64,
    pub phi: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

fn warn_small_alpha(alpha: f64) {
    if alpha < 3.0 {
        log::warn!("alpha = {alpha} is outside the alpha >> 1 regime");
    }
}

/// Q(θ, ξ) = |ℬ_t(φ − θ, ξ)|², ℬ the coherent-state amplitude.
pub fn qsymbol(ms: &ModeSpace, cp: &CoherentParams, t: f64, phi: f64) -> Result<f64> {
    Ok(qsymbol_series(ms, cp, phi, &[t])?.values[0])
}

pub fn qsymbol_series(ms: &ModeSpace, cp: &CoherentParams, phi: f64, times: &[f64]) -> Result<QSymbolField> {
    warn_small_alpha(cp.alpha);
    let amp = StateAmplitude::new(&coherent_state(ms, cp)?, ms)?;
    let values = times.par_iter().map(|&t| amp.eval(t, phi).norm_sqr()).collect();
    Ok(QSymbolField { theta: cp.theta, xi: cp.xi, alpha: cp.alpha, phi, times: times.to_vec(), values })
}

/// No-overlap approximation Σ_n |image_n|² to the Q-symbol.
pub fn qsymbol_images(ms: &ModeSpace, cp: &CoherentParams, t: f64, phi: f64) -> Result<f64> {
    warn_small_alpha(cp.alpha);
    Ok(amp_poisson(ms, cp, t, phi, PoissonOptions::default())?.incoherent)
}

/// Q(θ) over one period of θ at a fixed time, with its peak structure.
#[derive(Debug, Clone, Serialize)]
pub struct QSymbolSnapshot {
    pub t: f64,
    pub phi: f64,
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
    /// Peaks above 5% prominence, θ unwrapped from the profile minimum.
    pub peaks: Vec<Tick>,
    /// θ of the tallest peak, reduced to [0, 2π).
    pub peak_theta: f64,
    /// FWHM in θ of the tallest peak.
    pub peak_fwhm: f64,
    /// Largest single-peak weight over the weight of the whole period.
    pub dominant_fraction: f64,
}

/// Q-symbol on θ_k = 2πk/n. ℬ_t(φ−θ, ξ) is the θ = 0 amplitude evaluated at φ − θ.
pub fn qsymbol_snapshot(ms: &ModeSpace, xi: f64, alpha: f64, phi: f64, t: f64, n_theta: usize) -> Result<QSymbolSnapshot> {
    if n_theta < 8 {
        return Err(Error::Domain("need at least 8 theta samples".into()));
    }
    let cp = CoherentParams::new(0.0, xi, alpha)?;
    warn_small_alpha(alpha);
    let amp = StateAmplitude::new(&coherent_state(ms, &cp)?, ms)?;
    let step = 2.0 * PI / n_theta as f64;
    let thetas: Vec<f64> = (0..n_theta).map(|k| k as f64 * step).collect();
    let values: Vec<f64> = thetas.par_iter().map(|&th| amp.eval(t, phi - th).norm_sqr()).collect();
    // start the unwrapped period at the minimum so no peak straddles the seam
    let k0 = (0..n_theta).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    let ut: Vec<f64> = (0..=n_theta).map(|j| (k0 + j) as f64 * step).collect();
    let uv: Vec<f64> = (0..=n_theta).map(|j| values[(k0 + j) % n_theta]).collect();
    let train = extract_ticks(&ut, &uv, TickOptions::default())?;
    let total = cumulative(&ut, &uv)[n_theta];
    let tallest = train.ticks.iter().max_by(|a, b| a.height.total_cmp(&b.height)).unwrap();
    let heaviest = train.ticks.iter().map(|k| k.weight).fold(0.0, f64::max);
    Ok(QSymbolSnapshot {
        t,
        phi,
        peak_theta: tallest.t.rem_euclid(2.0 * PI),
        peak_fwhm: tallest.width,
        dominant_fraction: heaviest / total,
        peaks: train.ticks,
        thetas,
        values,
    })
}

/// A mode sum with its truncation bookkeeping.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeriesSum {
    pub value: f64,
    pub terms: usize,
    pub tail_bound: f64,
}

pub const SERIES_TOL: f64 = 1e-12;
pub const SERIES_MAX_TERMS: usize = 5_000_000;

/// Σ_{m≥start} term(m) in direction `dir`, stopped once three successive ratios stay below 1
/// and the geometric tail bound falls under SERIES_TOL of the running sum.
fn one_sided_sum(start: i64, dir: i64, term: impl Fn(i64) -> f64) -> Result<SeriesSum> {
    let mut sum = 0.0;
    let mut prev = f64::NAN;
    let (mut zeros, mut decreasing) = (0usize, 0usize);
    let mut m = start;
    for j in 0..SERIES_MAX_TERMS {
        let x = term(m);
        if !x.is_finite() {
            return Err(Error::DivergentSeries { terms: j });
        }
        sum += x;
        if x == 0.0 {
            zeros += 1;
            // kernels with one-sided support vanish from here on
            if zeros >= 8 && j + 1 == zeros {
                return Ok(SeriesSum { value: sum, terms: j + 1, tail_bound: 0.0 });
            }
        } else {
            zeros = 0;
        }
        if prev.is_finite() && prev > 0.0 {
            let q = x / prev;
            decreasing = if q < 1.0 { decreasing + 1 } else { 0 };
            if decreasing >= 3 {
                let tail = x * q / (1.0 - q);
                if tail <= SERIES_TOL * sum.abs() {
                    return Ok(SeriesSum { value: sum, terms: j + 1, tail_bound: tail });
                }
            }
        } else if prev == 0.0 && x == 0.0 && zeros >= 8 {
            return Ok(SeriesSum { value: sum, terms: j + 1, tail_bound: 0.0 });
        }
        prev = x;
        m += dir;
    }
    Err(Error::DivergentSeries { terms: SERIES_MAX_TERMS })
}

/// P₀ = Σ_m R̃(ω_m, m)/(4πrω_m) with C = 1; rotating: R̃(ω_m − mΩ_D, m) on the literal argument.
/// The sum runs over all m until its tail is negligible; the zero mode is skipped at μ = 0.
pub fn vacuum_noise(dk: &DetectorKernel, ms: &ModeSpace, frame: Option<&RotationFrame>) -> Result<SeriesSum> {
    dk.validate()?;
    if let Some(f) = frame {
        RotationFrame::new(f.omega_d, f.modes)?;
    }
    let r = ms.r;
    let term = |m: i64| {
        let w = ms.omega(m);
        let k = match frame {
            Some(f) => dk.eval_unrestricted(f.rotating_omega(m), m as f64, r),
            None => dk.eval(w, m as f64, r),
        };
        k / (4.0 * PI * r * w)
    };
    let up = one_sided_sum(1, 1, term)?;
    let down = one_sided_sum(-1, -1, term)?;
    let zero = if ms.mu > 0.0 { term(0) } else { 0.0 };
    Ok(SeriesSum {
        value: up.value + down.value + zero,
        terms: up.terms + down.terms + usize::from(ms.mu > 0.0),
        tail_bound: up.tail_bound + down.tail_bound,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Timescales {
    pub t_q: f64,
    pub t_rec: f64,
    pub tau: f64,
}

/// T_q = ω_ξ³r²/(μ²α), T_rec = 4παT_q, τ = 2πr²ω_ξ/ξ (ω_ξ at m = ξ).
pub fn timescales(ms: &ModeSpace, xi: f64, alpha: f64) -> Timescales {
    let r = ms.r;
    let w = ms.omega_at(xi);
    let (t_q, t_rec) = if ms.mu > 0.0 {
        let base = w.powi(3) * r * r / (ms.mu * ms.mu);
        (base / alpha, 4.0 * PI * base)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let tau = if xi != 0.0 { 2.0 * PI * r * r * w / xi.abs() } else { f64::INFINITY };
    Timescales { t_q, t_rec, tau }
}

/// Survival probability F(t) = |Σ_m ρ(m, m) e^{−iω_m t}|².
pub fn autocorrelation(state: &RingState, ms: &ModeSpace, t: f64) -> f64 {
    autocorrelation_series(state, ms, &[t])[0]
}

pub fn autocorrelation_series(state: &RingState, ms: &ModeSpace, times: &[f64]) -> Vec<f64> {
    let mm = state.m_max();
    let terms: Vec<(f64, f64)> = (-mm..=mm)
        .map(|m| (state.density(m, m).re, ms.omega(m)))
        .filter(|&(p, _)| p != 0.0)
        .collect();
    times
        .par_iter()
        .map(|&t| {
            let acc: Complex64 = terms.iter().map(|&(p, w)| Complex64::from_polar(p, -w * t)).sum();
            acc.norm_sqr()
        })
        .collect()
}

/// B(γ) for the Gaussian regulator f_γ(y) = (πγ²)^{−1/2} e^{−y²/γ²}: 1/∫f_γ² = √(2π)γ.
pub fn gaussian_regulator_b(gamma: f64) -> f64 {
    (2.0 * PI).sqrt() * gamma
}

/// B(γ)·P_γ over the small-γ limit r Σ_m ρ(m, m) a(m), with P_γ from the smeared double sum
/// 2π ∫dy Σ f_γ(y−m) f_γ(y−m′) G(m, m′) r²ω_y/y. Tends to 1 as γ → 0.
pub fn regularized_normalization_ratio(
    state: &RingState,
    dk: &DetectorKernel,
    ms: &ModeSpace,
    gamma: f64,
) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Domain(format!("regulator width must lie in (0, 1], got {gamma}")));
    }
    let support = state.support();
    if support.iter().any(|&m| m <= 0) {
        return Err(Error::InvalidState("regularized normalization needs positive-momentum support".into()));
    }
    let r = ms.r;
    let reach = (12.0 * gamma).ceil() as i64;
    let fnorm = 1.0 / (PI * gamma * gamma);
    let opts = QuadOptions { rel_tol: 1e-12, abs_tol: 0.0, max_intervals: 200 };
    let mut smeared = 0.0;
    for &m in &support {
        for mp in (m - reach).max(1)..=(m + reach) {
            let rho = state.density(m, mp);
            if rho == ZERO {
                continue;
            }
            let (w, wp) = (ms.omega(m), ms.omega(mp));
            let rk = dk.eval(0.5 * (w + wp), 0.5 * (m + mp) as f64, r);
            let g = rho.re * rk / (4.0 * PI * r * (w * wp).sqrt());
            let (mf, mpf) = (m as f64, mp as f64);
            let center = 0.5 * (mf + mpf);
            let lo = (center - 8.0 * gamma).max(0.5 * center);
            let f = |y: f64| {
                let ff = fnorm * (-((y - mf).powi(2) + (y - mpf).powi(2)) / (gamma * gamma)).exp();
                Complex64::new(ff * r * r * ms.omega_at(y) / y, 0.0)
            };
            let q = integrate(f, &[lo, center, center + 8.0 * gamma], opts)?;
            smeared += 2.0 * PI * g * q.value.re;
        }
    }
    let prof = absorption(dk, ms, 1..=state.m_max());
    let limit: f64 = support.iter().map(|&m| r * state.density(m, m).re * prof.value(m)).sum();
    if !(limit > 0.0) {
        return Err(Error::ZeroDetection);
    }
    Ok(gaussian_regulator_b(gamma) * smeared / limit)
}
