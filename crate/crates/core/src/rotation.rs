//! Rotating ring: the noise ratio η, Sagnac fringes and the left/right coincidence.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::amplitudes::RotatingAmplitude;
use crate::clock::{extract_ticks, linear_fit, TickOptions};
use crate::detector::DetectorKernel;
use crate::error::{Error, Result};
use crate::modes::{ModeSpace, RotationFrame};
use crate::probability::{vacuum_noise, Normalization};
use crate::states::RingState;

/// Symmetric states must satisfy |ψ_m − ψ_{−m}| ≤ this times max |ψ|.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eta {
    pub mode_sum: f64,
    /// ln(1 − e^{−a(1−Ω_D r)})/ln(1 − e^{−a}); massless ring-exponential kernels only.
    pub closed_form: Option<f64>,
}

/// η = P₀(Ω_D)/P₀(0).
pub fn eta(dk: &DetectorKernel, ms: &ModeSpace, omega_d: f64) -> Result<Eta> {
    let rf = RotationFrame::new(omega_d, *ms)?;
    let rotating = vacuum_noise(dk, ms, Some(&rf))?;
    let rest = vacuum_noise(dk, ms, None)?;
    let closed_form = match *dk {
        DetectorKernel::RingExponential { decay, .. } if ms.mu == 0.0 => {
            let x = rf.rim_speed();
            Some((-(-decay * (1.0 - x)).exp()).ln_1p() / (-(-decay).exp()).ln_1p())
        }
        _ => None,
    };
    Ok(Eta { mode_sum: rotating.value / rest.value, closed_form })
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseCurve {
    pub kernel: DetectorKernel,
    pub omega_d_r: Vec<f64>,
    pub eta: Vec<f64>,
    pub closed_form: Vec<Option<f64>>,
    pub method: &'static str,
}

/// η sampled on a grid of rim speeds Ω_D r.
pub fn noise_curve(dk: &DetectorKernel, ms: &ModeSpace, omega_d_r: &[f64]) -> Result<NoiseCurve> {
    let vals = omega_d_r.par_iter().map(|&x| eta(dk, ms, x / ms.r)).collect::<Result<Vec<_>>>()?;
    let closed_form: Vec<Option<f64>> = vals.iter().map(|e| e.closed_form).collect();
    let method = if closed_form.iter().all(Option::is_some) { "mode-sum+closed-form" } else { "mode-sum" };
    Ok(NoiseCurve {
        kernel: dk.clone(),
        omega_d_r: omega_d_r.to_vec(),
        eta: vals.iter().map(|e| e.mode_sum).collect(),
        closed_form,
        method,
    })
}

/// Per-tick interference between the 𝒟₊ and 𝒟₋ contributions.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FringeSample {
    pub t: f64,
    /// 2 Re∫𝒟₊𝒟₋* / ∫(|𝒟₊|² + |𝒟₋|²); ≈ V cos(2ξΩ_D t).
    pub signal: f64,
    /// arg ∫𝒟₊𝒟₋*, unwrapped along the train; ≈ 2ξΩ_D t.
    pub phase: f64,
    pub visibility: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SagnacScan {
    pub omega_d: f64,
    pub times: Vec<f64>,
    /// P_c(t, 0).
    pub density: Vec<f64>,
    /// (B/2πr)(|𝒟₊| + |𝒟₋|)², the fully constructive envelope.
    pub envelope: Vec<f64>,
    /// arg 𝒟₊𝒟₋* at each sample.
    pub fringe_phase: Vec<f64>,
    pub fringes: Vec<FringeSample>,
    /// ξΩ_D with ξ the mean positive momentum.
    pub expected_frequency: f64,
    /// From the spacing of zero crossings of the per-tick signal.
    pub crossing_frequency: Option<f64>,
    /// Half the slope of the unwrapped per-tick phase.
    pub phase_frequency: Option<f64>,
    pub mean_visibility: f64,
    pub normalization: Normalization,
}

/// P_c(t, 0) = (B/2πr)|𝒟₊ + 𝒟₋|² for a symmetric state, with the fringe frequency read off
/// the tick train.
pub fn sagnac_scan(state: &RingState, rf: &RotationFrame, times: &[f64], norm: Normalization) -> Result<SagnacScan> {
    let rf = RotationFrame::new(rf.omega_d, rf.modes)?;
    let dev = state.asymmetry();
    if dev > SYMMETRY_TOL {
        return Err(Error::AsymmetricState { deviation: dev });
    }
    let amp = RotatingAmplitude::new(state, &rf)?;
    let pref = norm.prefactor(rf.modes.r);
    let pairs: Vec<(Complex64, Complex64)> = times.par_iter().map(|&t| amp.eval(t, 0.0)).collect();
    let density: Vec<f64> = pairs.iter().map(|(p, m)| pref * (p + m).norm_sqr()).collect();
    let envelope: Vec<f64> = pairs.iter().map(|(p, m)| pref * (p.norm() + m.norm()).powi(2)).collect();
    let fringe_phase: Vec<f64> = pairs.iter().map(|(p, m)| (p * m.conj()).arg()).collect();
    let incoherent: Vec<f64> = pairs.iter().map(|(p, m)| p.norm_sqr() + m.norm_sqr()).collect();

    let tt = extract_ticks(times, &incoherent, TickOptions::default())?;
    let mut fringes: Vec<FringeSample> = vec![];
    for tick in &tt.ticks {
        let (mut cross, mut inc) = (Complex64::new(0.0, 0.0), 0.0);
        for k in 1..times.len() {
            if times[k] <= tick.start || times[k - 1] >= tick.end {
                continue;
            }
            let h = 0.5 * (times[k] - times[k - 1]);
            cross += (pairs[k].0 * pairs[k].1.conj() + pairs[k - 1].0 * pairs[k - 1].1.conj()) * h;
            inc += (incoherent[k] + incoherent[k - 1]) * h;
        }
        if inc > 0.0 {
            fringes.push(FringeSample {
                t: tick.t,
                signal: 2.0 * cross.re / inc,
                phase: cross.arg(),
                visibility: 2.0 * cross.norm() / inc,
            });
        }
    }
    for j in 1..fringes.len() {
        let prev = fringes[j - 1].phase;
        let mut p = fringes[j].phase;
        while p - prev > PI {
            p -= 2.0 * PI;
        }
        while p - prev < -PI {
            p += 2.0 * PI;
        }
        fringes[j].phase = p;
    }
    let crossings: Vec<f64> = fringes
        .windows(2)
        .filter(|w| (w[0].signal > 0.0) != (w[1].signal > 0.0))
        .map(|w| w[0].t + (w[1].t - w[0].t) * w[0].signal / (w[0].signal - w[1].signal))
        .collect();
    // zeros of cos(2ξΩt) are π/(2ξΩ) apart
    let crossing_frequency = (crossings.len() >= 2).then(|| {
        let spacing = (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64;
        PI / (2.0 * spacing)
    });
    let phase_frequency = (fringes.len() >= 2).then(|| {
        let ts: Vec<f64> = fringes.iter().map(|f| f.t).collect();
        let ps: Vec<f64> = fringes.iter().map(|f| f.phase).collect();
        0.5 * linear_fit(&ts, &ps).slope
    });
    let mean_visibility = fringes.iter().map(|f| f.visibility).sum::<f64>() / fringes.len().max(1) as f64;
    let xi = state.mean_positive_momentum().unwrap_or(0.0);
    Ok(SagnacScan {
        omega_d: rf.omega_d,
        times: times.to_vec(),
        density,
        envelope,
        fringe_phase,
        fringes,
        expected_frequency: xi * rf.omega_d,
        crossing_frequency,
        phase_frequency,
        mean_visibility,
        normalization: norm,
    })
}

/// Winding count n = (π − φ)/(ξΩ_D) at which the left- and right-moving detections are
/// predicted to coincide.
pub fn coincidence_winding(phi: f64, xi: f64, omega_d: f64) -> Result<f64> {
    let d = xi * omega_d;
    if d == 0.0 || !d.is_finite() {
        return Err(Error::Domain("coincidence winding needs xi * Omega_D != 0".into()));
    }
    Ok((PI - phi) / d)
}

/// Envelope kinematics: 𝒟₊ arrives when (v/r − Ω_D)t = φ + 2πk and 𝒟₋ when
/// (v/r + Ω_D)t = 2πk′ − φ. The first overlap after t = 0 with k′ − k = 1 is at
/// t = (π − φ)/Ω_D, i.e. after t·v/(2πr) windings.
pub fn kinematic_coincidence(ms: &ModeSpace, xi: f64, phi: f64, omega_d: f64) -> Result<(f64, f64)> {
    if omega_d == 0.0 {
        return Err(Error::Domain("kinematic coincidence needs Omega_D != 0".into()));
    }
    let t = (PI - phi).rem_euclid(PI) / omega_d.abs();
    let t = if t == 0.0 { PI / omega_d.abs() } else { t };
    let windings = t * ms.velocity_at(xi).abs() / (2.0 * PI * ms.r);
    Ok((t, windings))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoincidenceTick {
    pub t: f64,
    /// Integrated P_c over the tick.
    pub weight: f64,
    pub peak: f64,
    /// ∫|𝒟₊||𝒟₋| / √(∫|𝒟₊|² ∫|𝒟₋|²) over the tick.
    pub overlap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoincidenceScan {
    pub phi: f64,
    pub ticks: Vec<CoincidenceTick>,
    /// Index of the tick with the largest left/right overlap.
    pub strongest_overlap: Option<usize>,
    /// Index of the tallest density peak.
    pub tallest: Option<usize>,
    pub formula_winding: f64,
    pub kinematic_time: f64,
    pub kinematic_winding: f64,
    /// Whether the formula's winding falls ahead of T_q.
    pub observable: bool,
}

/// Density ticks at a detector angle φ with their left/right overlap.
pub fn coincidence_scan(
    state: &RingState,
    rf: &RotationFrame,
    phi: f64,
    times: &[f64],
    t_q: f64,
    norm: Normalization,
) -> Result<CoincidenceScan> {
    let rf = RotationFrame::new(rf.omega_d, rf.modes)?;
    let amp = RotatingAmplitude::new(state, &rf)?;
    let pref = norm.prefactor(rf.modes.r);
    let pairs: Vec<(Complex64, Complex64)> = times.par_iter().map(|&t| amp.eval(t, phi)).collect();
    let density: Vec<f64> = pairs.iter().map(|(p, m)| pref * (p + m).norm_sqr()).collect();
    let incoherent: Vec<f64> = pairs.iter().map(|(p, m)| p.norm_sqr() + m.norm_sqr()).collect();
    let tt = extract_ticks(times, &incoherent, TickOptions::default())?;
    let trap = |f: &dyn Fn(usize) -> f64, a: f64, b: f64| {
        (1..times.len())
            .filter(|&k| times[k] > a && times[k - 1] < b)
            .map(|k| 0.5 * (times[k] - times[k - 1]) * (f(k) + f(k - 1)))
            .sum::<f64>()
    };
    let ticks: Vec<CoincidenceTick> = tt
        .ticks
        .iter()
        .map(|tk| {
            let (a, b) = (tk.start, tk.end);
            let both = trap(&|k| pairs[k].0.norm() * pairs[k].1.norm(), a, b);
            let pp = trap(&|k| pairs[k].0.norm_sqr(), a, b);
            let mm = trap(&|k| pairs[k].1.norm_sqr(), a, b);
            let peak = (0..times.len())
                .filter(|&k| times[k] >= a && times[k] <= b)
                .map(|k| density[k])
                .fold(0.0, f64::max);
            CoincidenceTick {
                t: tk.t,
                weight: trap(&|k| density[k], a, b),
                peak,
                overlap: if pp > 0.0 && mm > 0.0 { both / (pp * mm).sqrt() } else { 0.0 },
            }
        })
        .collect();
    let argmax = |f: &dyn Fn(&CoincidenceTick) -> f64| {
        (0..ticks.len()).max_by(|&a, &b| f(&ticks[a]).total_cmp(&f(&ticks[b])))
    };
    let xi = state.mean_positive_momentum().unwrap_or(0.0);
    let formula_winding = coincidence_winding(phi, xi, rf.omega_d)?;
    let (kinematic_time, kinematic_winding) = kinematic_coincidence(&rf.modes, xi, phi, rf.omega_d)?;
    let t_formula = formula_winding * 2.0 * PI * rf.modes.r / rf.modes.velocity_at(xi).abs();
    Ok(CoincidenceScan {
        phi,
        strongest_overlap: argmax(&|c| c.overlap),
        tallest: argmax(&|c| c.peak),
        ticks,
        formula_winding,
        kinematic_time,
        kinematic_winding,
        observable: t_formula.abs() < t_q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{coherent_state, symmetric_superposition, CoherentParams};

    fn massless() -> ModeSpace {
        ModeSpace::new(0.0, 1.0, 10).unwrap()
    }

    #[test]
    fn eta_examples() {
        let dk = DetectorKernel::ring_exponential(1.0, 1.0).unwrap();
        let ms = massless();
        let e0 = eta(&dk, &ms, 0.0).unwrap();
        assert_eq!(e0.mode_sum, 1.0);
        let e = eta(&dk, &ms, 0.5).unwrap();
        let cf = e.closed_form.unwrap();
        assert!((cf - 2.03358).abs() < 1e-5, "{cf}");
        assert!((e.mode_sum - cf).abs() < 1e-8);
        assert!(matches!(eta(&dk, &ms, 1.0), Err(Error::InvalidFrame { .. })));
    }

    #[test]
    fn eta_closed_form_agreement_across_grid() {
        let ms = massless();
        for a in [0.5, 1.0, 2.0] {
            let dk = DetectorKernel::ring_exponential(1.0, a).unwrap();
            for j in 0..20 {
                let x = 0.049 * j as f64;
                let e = eta(&dk, &ms, x).unwrap();
                assert!((e.mode_sum - e.closed_form.unwrap()).abs() < 1e-8, "a={a} x={x}");
                assert!(e.mode_sum >= 1.0);
            }
        }
    }

    #[test]
    fn noise_curve_shape() {
        let ms = massless();
        let grid: Vec<f64> = (0..=50).map(|j| 0.001 * j as f64).collect();
        let dk = DetectorKernel::ring_exponential(1.0, 1.0).unwrap();
        let c = noise_curve(&dk, &ms, &grid).unwrap();
        let dev: Vec<f64> = c.eta.iter().map(|e| e - 1.0).collect();
        assert!(linear_fit(&grid, &dev).r_squared > 0.999);
        let full: Vec<f64> = (0..99).map(|j| 0.01 * j as f64).collect();
        let curves: Vec<NoiseCurve> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&a| noise_curve(&DetectorKernel::ring_exponential(1.0, a).unwrap(), &ms, &full).unwrap())
            .collect();
        for c in &curves {
            assert!(c.eta.windows(2).all(|w| w[1] >= w[0]));
        }
        // at fixed Ω_D r the noise grows with a
        for j in 1..full.len() {
            assert!(curves[0].eta[j] < curves[1].eta[j] && curves[1].eta[j] < curves[2].eta[j], "{j}");
        }
    }

    #[test]
    fn eta_diverges_logarithmically() {
        let ms = massless();
        let dk = DetectorKernel::ring_exponential(1.0, 1.0).unwrap();
        let xs = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
        let u: Vec<f64> = xs.iter().map(|x: &f64| -x.ln()).collect();
        let e: Vec<f64> = xs.iter().map(|x| eta(&dk, &ms, 1.0 - x).unwrap().mode_sum).collect();
        let fit = linear_fit(&u, &e);
        let expect = -1.0 / (1.0 - (-1.0f64).exp()).ln();
        assert!((fit.slope - expect).abs() < 0.01 * expect, "{} vs {expect}", fit.slope);
    }

    fn sagnac_state(ms: &ModeSpace) -> RingState {
        let base = coherent_state(ms, &CoherentParams::new(0.0, 1000.0, 10.0).unwrap()).unwrap();
        let sym = symmetric_superposition(&base).unwrap();
        // rebuild on the massless space so the cutoffs line up
        RingState::pure(ms, sym.coefficients().unwrap().to_vec()).unwrap()
    }

    #[test]
    fn sagnac_fringe_frequency() {
        let ms = ModeSpace::new(0.0, 1.0, 1200).unwrap();
        let s = sagnac_state(&ms);
        let omega = 1e-4;
        let rf = RotationFrame::new(omega, ms).unwrap();
        let times: Vec<f64> = (0..60_000).map(|j| 0.005 * j as f64).collect();
        let scan = sagnac_scan(&s, &rf, &times, Normalization::UnitPeriod).unwrap();
        assert!((scan.expected_frequency - 0.1).abs() < 1e-9);
        let f = scan.crossing_frequency.unwrap();
        assert!((f - 0.1).abs() < 1e-3, "{f}");
        assert!((scan.phase_frequency.unwrap() - 0.1).abs() < 1e-3);
        // the n-th peak carries phase 2πn r²ω_ξ Ω_D (doubled in arg 𝒟₊𝒟₋*)
        for fr in scan.fringes.iter().take(5) {
            let n = (fr.t / (2.0 * PI)).round();
            let expect = 2.0 * PI * n * 1000.0 * omega;
            assert!((0.5 * fr.phase - expect).abs() < 0.01 * expect, "{n}");
        }
        // the shifted movers separate by 2Ω_D t, so contrast follows the packet overlap e^{−(αΩ_D t)²}
        for fr in &scan.fringes {
            let v = (-(10.0 * omega * fr.t).powi(2)).exp();
            assert!((fr.visibility - v).abs() < 1e-3, "t = {}: {} vs {v}", fr.t, fr.visibility);
        }
    }

    #[test]
    fn sagnac_static_has_no_fringes() {
        let ms = ModeSpace::new(0.0, 1.0, 1200).unwrap();
        let s = sagnac_state(&ms);
        let rf = RotationFrame::static_frame(ms);
        let times: Vec<f64> = (0..8000).map(|j| 0.005 * j as f64).collect();
        let scan = sagnac_scan(&s, &rf, &times, Normalization::UnitPeriod).unwrap();
        assert!(scan.crossing_frequency.is_none());
        assert!(scan.fringes.iter().all(|f| (f.signal - 1.0).abs() < 1e-9));
        for (d, e) in scan.density.iter().zip(&scan.envelope) {
            assert!((d - e).abs() <= 1e-9 * e.max(1e-12));
        }
    }

    #[test]
    fn sagnac_rejects_asymmetric() {
        let ms = ModeSpace::new(0.0, 1.0, 60).unwrap();
        let s = coherent_state(&ms, &CoherentParams::new(0.0, 30.0, 3.0).unwrap()).unwrap();
        let rf = RotationFrame::new(1e-3, ms).unwrap();
        assert!(matches!(
            sagnac_scan(&s, &rf, &[0.0, 1.0, 2.0], Normalization::UnitPeriod),
            Err(Error::AsymmetricState { .. })
        ));
    }

    #[test]
    fn coincidence_formula_examples() {
        assert_eq!(coincidence_winding(PI, 1000.0, 0.01).unwrap(), 0.0);
        assert!((coincidence_winding(0.0, 1000.0, PI / 1000.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(coincidence_winding(0.0, 1000.0, 0.0).is_err());
    }

    #[test]
    fn coincidence_follows_envelope_kinematics() {
        // detector at φ = π/2: the movers meet at t = (π − φ)/Ω_D, not at winding (π − φ)/(ξΩ_D)
        let ms = ModeSpace::new(0.0, 1.0, 1200).unwrap();
        let s = sagnac_state(&ms);
        let (phi, omega) = (PI / 2.0, 0.01);
        let rf = RotationFrame::new(omega, ms).unwrap();
        let times: Vec<f64> = (0..60_000).map(|j| 0.005 * j as f64).collect();
        let scan = coincidence_scan(&s, &rf, phi, &times, f64::INFINITY, Normalization::UnitPeriod).unwrap();
        let best = scan.ticks[scan.strongest_overlap.unwrap()];
        // exact meetings happen only at tick times, within half a winding of the prediction
        assert!((best.t - scan.kinematic_time).abs() <= PI, "{} vs {}", best.t, scan.kinematic_time);
        assert!(best.overlap > 0.9);
        let t_formula = scan.formula_winding * 2.0 * PI;
        assert!((best.t - t_formula).abs() > 10.0);
    }
}
