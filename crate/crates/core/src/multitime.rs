//! Two-detector joint densities, Kolmogorov compatibility and measurement-independence scans.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplitudes::StateAmplitude;
use crate::detector::LocalizationMatrix;
use crate::error::{Error, Result};
use crate::modes::ModeSpace;
use crate::probability::{DensityEvaluator, Normalization};
use crate::quad::trapezoid;
use crate::states::RingState;

/// Relative slack for the strict violation tests.
pub const VIOLATION_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

// (first-detector factor, second-detector factor) of each term in the symmetrized ket
const EXCHANGE: [(usize, usize); 2] = [(0, 1), (1, 0)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    Product,
    Symmetrized,
}

/// ψ₁⊗ψ₂, or (ψ₁⊗ψ₂ + ψ₂⊗ψ₁)/√(2(1+b)) with b = |⟨ψ₁|ψ₂⟩|².
#[derive(Debug, Clone)]
pub struct TwoParticleState {
    pairing: Pairing,
    states: [RingState; 2],
    spaces: [ModeSpace; 2],
    overlap: Complex64,
}

impl TwoParticleState {
    /// Factors may live on different rings.
    pub fn product(psi1: RingState, ms1: ModeSpace, psi2: RingState, ms2: ModeSpace) -> Result<Self> {
        for (psi, ms) in [(&psi1, &ms1), (&psi2, &ms2)] {
            if (psi.trace() - 1.0).abs() > 1e-8 {
                return Err(Error::InvalidState(format!("factor trace {} differs from 1", psi.trace())));
            }
            if psi.m_max() > ms.m_max {
                return Err(Error::InvalidState("factor cutoff exceeds its mode space".into()));
            }
        }
        let overlap = if ms1 == ms2 && psi1.is_pure() && psi2.is_pure() { psi1.overlap(&psi2)? } else { ZERO };
        Ok(Self { pairing: Pairing::Product, states: [psi1, psi2], spaces: [ms1, ms2], overlap })
    }

    /// Both factors pure and on the same ring.
    pub fn symmetrized(psi1: RingState, psi2: RingState, ms: ModeSpace) -> Result<Self> {
        if !(psi1.is_pure() && psi2.is_pure()) {
            return Err(Error::InvalidState("symmetrized pairs need pure factors".into()));
        }
        if psi1.m_max() > ms.m_max || psi2.m_max() > ms.m_max {
            return Err(Error::InvalidState("factor cutoff exceeds the mode space".into()));
        }
        let overlap = psi1.overlap(&psi2)?;
        Ok(Self { pairing: Pairing::Symmetrized, states: [psi1, psi2], spaces: [ms, ms], overlap })
    }

    pub fn pairing(&self) -> Pairing {
        self.pairing
    }

    pub fn factor(&self, i: usize) -> (&RingState, &ModeSpace) {
        (&self.states[i], &self.spaces[i])
    }

    /// b = |⟨ψ₁|ψ₂⟩|²; 0 when the factors sit on different rings.
    pub fn b(&self) -> f64 {
        self.overlap.norm_sqr()
    }

    /// λ = 2/(1+b) − 1.
    pub fn lambda(&self) -> f64 {
        2.0 / (1.0 + self.b()) - 1.0
    }

    /// 1/(2(1+b)), the squared normalization of the symmetrized ket.
    pub fn norm_sq(&self) -> f64 {
        0.5 / (1.0 + self.b())
    }

    // ⟨ψ_c|ψ_a⟩
    fn gram(&self, c: usize, a: usize) -> Complex64 {
        match (c, a) {
            (0, 0) | (1, 1) => Complex64::new(1.0, 0.0),
            (0, 1) => self.overlap,
            _ => self.overlap.conj(),
        }
    }

    /// 2πr/⟨|v|⟩ for the particle seen by detector `i`.
    pub fn circulation_period(&self, i: usize) -> f64 {
        2.0 * PI * self.spaces[i].r / self.mean_speed(i)
    }

    /// Mean speed Σ ρ(m,m)|v_m| of the factor seen by detector `i`, averaged over both
    /// factors when symmetrized.
    fn mean_speed(&self, i: usize) -> f64 {
        let speed = |k: usize| {
            let (s, ms) = (&self.states[k], &self.spaces[k]);
            let mm = s.m_max();
            s.populations().iter().enumerate().map(|(j, p)| p * ms.velocity_at((j as i64 - mm) as f64).abs()).sum::<f64>()
        };
        match self.pairing {
            Pairing::Product => speed(i),
            Pairing::Symmetrized => 0.5 * (speed(0) + speed(1)),
        }
    }
}

/// X(a, c) = Σ ψ_a(m) ψ_c*(m′) L(m, m′) √|v_m v_{m′}| e^{i(m−m′)φ − i(ω_m−ω_{m′})t} for one detector.
enum Bilinear {
    Maximal([StateAmplitude; 2]),
    Dense { ks: Vec<f64>, energies: Vec<f64>, u: [Vec<Complex64>; 2], l: DMatrix<f64> },
}

impl Bilinear {
    fn new(states: &[RingState; 2], ms: &ModeSpace, det: &LocalizationMatrix) -> Result<Self> {
        let mut outside: Vec<i64> = states.iter().flat_map(|s| s.support()).filter(|&m| !det.contains(m)).collect();
        if !outside.is_empty() {
            outside.sort_unstable();
            outside.dedup();
            return Err(Error::SupportViolation { modes: outside });
        }
        if det.omega_d() != 0.0 {
            return Err(Error::Domain("joint densities are implemented for static detectors only".into()));
        }
        if det.is_maximal() {
            return Ok(Self::Maximal([StateAmplitude::new(&states[0], ms)?, StateAmplitude::new(&states[1], ms)?]));
        }
        let mut modes: Vec<i64> = states.iter().flat_map(|s| s.support()).filter(|&m| m != 0 || ms.mu > 0.0).collect();
        modes.sort_unstable();
        modes.dedup();
        modes.retain(|&m| ms.velocity_at(m as f64) != 0.0);
        let coeff = |s: &RingState| -> Vec<Complex64> {
            modes
                .iter()
                .map(|&m| s.amplitude(m).unwrap_or(ZERO) * ms.velocity_at(m as f64).abs().sqrt())
                .collect()
        };
        let n = modes.len();
        Ok(Self::Dense {
            ks: modes.iter().map(|&m| m as f64).collect(),
            energies: modes.iter().map(|&m| ms.omega(m)).collect(),
            u: [coeff(&states[0]), coeff(&states[1])],
            l: DMatrix::from_fn(n, n, |i, j| det.get(modes[i], modes[j])),
        })
    }

    fn eval(&self, t: f64, phi: f64) -> [[Complex64; 2]; 2] {
        match self {
            Self::Maximal(amps) => {
                let a = [amps[0].eval(t, phi), amps[1].eval(t, phi)];
                [[a[0] * a[0].conj(), a[0] * a[1].conj()], [a[1] * a[0].conj(), a[1] * a[1].conj()]]
            }
            Self::Dense { ks, energies, u, l } => {
                let w: Vec<Complex64> =
                    ks.iter().zip(energies).map(|(&m, &e)| Complex64::from_polar(1.0, m * phi - e * t)).collect();
                let y: [Vec<Complex64>; 2] = [0, 1].map(|a| u[a].iter().zip(&w).map(|(c, wi)| c * wi).collect());
                let lyc: [Vec<Complex64>; 2] = [0, 1].map(|c| {
                    (0..w.len())
                        .map(|i| l.row(i).iter().zip(&y[c]).map(|(lij, yj)| lij * yj.conj()).sum())
                        .collect()
                });
                let form = |a: usize, c: usize| -> Complex64 { y[a].iter().zip(&lyc[c]).map(|(p, q)| p * q).sum() };
                // L is real symmetric, so the diagonal forms are real
                let x01 = form(0, 1);
                [[form(0, 0).re.into(), x01], [x01.conj(), form(1, 1).re.into()]]
            }
        }
    }

    fn amplitudes(&self, t: f64, phi: f64) -> Option<[Complex64; 2]> {
        match self {
            Self::Maximal(amps) => Some([amps[0].eval(t, phi), amps[1].eval(t, phi)]),
            Self::Dense { .. } => None,
        }
    }
}

enum Engine {
    Product([DensityEvaluator; 2]),
    Symmetrized([Bilinear; 2]),
}

/// Joint and marginal densities for a two-particle state and a pair of static detectors.
pub struct JointEvaluator {
    engine: Engine,
    prefactors: [f64; 2],
    norm_sq: f64,
    gram: [[Complex64; 2]; 2],
    lambda: f64,
    /// Σ_m √(ρ(m,m)|v_m|) per detector, a bound on |𝒜|.
    amp_scales: [f64; 2],
    pub normalization: Normalization,
}

/// The exact J margin together with the closed-form ratio test.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct JMargin {
    pub p2: f64,
    /// P₁⁽¹⁾(t,φ)·P₁⁽²⁾(t,φ); equals P₁² when both detectors see the same marginal.
    pub p1_product: f64,
    /// P₂(t,φ;t,φ) − P₁⁽¹⁾P₁⁽²⁾, negative on violation.
    pub margin: f64,
    pub violated: bool,
    pub ratio: Option<RatioTest>,
}

/// √(P₂(1,1)P₂(2,2)) − P₂(1,2) and the amplitude-ratio test.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CsMargin {
    pub p2: f64,
    pub diagonal: f64,
    pub margin: f64,
    pub violated: bool,
    pub ratio: Option<RatioTest>,
}

/// A ratio compared against a closed interval; outside means violation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioTest {
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub violated: bool,
}

impl RatioTest {
    fn new(ratio: f64, (lower, upper): (f64, f64)) -> Self {
        let violated = ratio < lower * (1.0 - VIOLATION_TOL) || ratio > upper * (1.0 + VIOLATION_TOL);
        Self { ratio, lower, upper, violated }
    }
}

/// [2λ+1 − 2√(λ(λ+1)), 2λ+1 + 2√(λ(λ+1))], the no-violation range of |𝒜₂/𝒜₁|².
pub fn jensen_interval(lambda: f64) -> (f64, f64) {
    let c = 2.0 * lambda + 1.0;
    let d = 2.0 * (lambda * (lambda + 1.0)).sqrt();
    (c - d, c + d)
}

/// [3 − 2√2, 3 + 2√2].
pub fn cs_interval() -> (f64, f64) {
    (3.0 - 2.0 * 2f64.sqrt(), 3.0 + 2.0 * 2f64.sqrt())
}

impl JointEvaluator {
    pub fn new(
        tps: &TwoParticleState,
        det1: &LocalizationMatrix,
        det2: &LocalizationMatrix,
        normalization: Normalization,
    ) -> Result<Self> {
        let engine = match tps.pairing {
            Pairing::Product => Engine::Product([
                DensityEvaluator::new(&tps.states[0], det1, &tps.spaces[0], None, normalization)?,
                DensityEvaluator::new(&tps.states[1], det2, &tps.spaces[1], None, normalization)?,
            ]),
            Pairing::Symmetrized => {
                let ms = &tps.spaces[0];
                Engine::Symmetrized([Bilinear::new(&tps.states, ms, det1)?, Bilinear::new(&tps.states, ms, det2)?])
            }
        };
        let scale = |k: usize| {
            let (s, ms) = (&tps.states[k], &tps.spaces[k]);
            let mm = s.m_max();
            s.populations()
                .iter()
                .enumerate()
                .map(|(j, p)| (p * ms.velocity_at((j as i64 - mm) as f64).abs()).sqrt())
                .sum::<f64>()
        };
        let amp_scales = match tps.pairing {
            Pairing::Product => [scale(0), scale(1)],
            Pairing::Symmetrized => [scale(0).max(scale(1)); 2],
        };
        Ok(Self {
            engine,
            amp_scales,
            prefactors: [normalization.prefactor(tps.spaces[0].r), normalization.prefactor(tps.spaces[1].r)],
            norm_sq: tps.norm_sq(),
            gram: [[tps.gram(0, 0), tps.gram(0, 1)], [tps.gram(1, 0), tps.gram(1, 1)]],
            lambda: tps.lambda(),
            normalization,
        })
    }

    /// P₂(t₁,φ₁; t₂,φ₂) = (B/2πr₁)(B/2πr₂) Tr[ρ̂₂ Π̂⁽¹⁾⊗Π̂⁽²⁾].
    pub fn p2(&self, t1: f64, phi1: f64, t2: f64, phi2: f64) -> Result<f64> {
        match &self.engine {
            Engine::Product(ev) => Ok(ev[0].eval(t1, phi1)? * ev[1].eval(t2, phi2)?),
            Engine::Symmetrized(forms) => {
                let (x1, x2) = (forms[0].eval(t1, phi1), forms[1].eval(t2, phi2));
                let (mut acc, mut size) = (ZERO, 0.0);
                for &(a, b) in &EXCHANGE {
                    for &(c, d) in &EXCHANGE {
                        let z = x1[a][c] * x2[b][d];
                        acc += z;
                        size += z.norm();
                    }
                }
                self.finish(acc, size, self.prefactors[0] * self.prefactors[1] * self.norm_sq)
            }
        }
    }

    /// One-detector marginal P₁⁽ⁱ⁾ (i = 0 or 1) from the reduced one-particle state.
    pub fn p1(&self, detector: usize, t: f64, phi: f64) -> Result<f64> {
        assert!(detector < 2, "detector index is 0 or 1");
        match &self.engine {
            Engine::Product(ev) => ev[detector].eval(t, phi),
            Engine::Symmetrized(forms) => {
                let x = forms[detector].eval(t, phi);
                let (mut acc, mut size) = (ZERO, 0.0);
                for &(a, b) in &EXCHANGE {
                    for &(c, d) in &EXCHANGE {
                        // trace over the other particle: ⟨ψ_d|ψ_b⟩ or ⟨ψ_c|ψ_a⟩
                        let z = if detector == 0 { x[a][c] * self.gram[d][b] } else { x[b][d] * self.gram[c][a] };
                        acc += z;
                        size += z.norm();
                    }
                }
                self.finish(acc, size, self.prefactors[detector] * self.norm_sq)
            }
        }
    }

    // `size` is Σ|term|, the scale for both the residue and the clipping floor
    fn finish(&self, acc: Complex64, size: f64, scale: f64) -> Result<f64> {
        if acc.im.abs() > 1e-10 * size {
            return Err(Error::NonHermitian { residue: acc.im });
        }
        let v = scale * acc.re;
        if v < -1e-10 * scale * size {
            return Err(Error::NegativeDensity { value: v });
        }
        Ok(v.max(0.0))
    }

    /// (𝒜₁, 𝒜₂) at one detector for symmetrized pairs with maximal localization.
    pub fn amplitudes(&self, detector: usize, t: f64, phi: f64) -> Option<[Complex64; 2]> {
        match &self.engine {
            Engine::Symmetrized(forms) => forms[detector].amplitudes(t, phi),
            Engine::Product(_) => None,
        }
    }

    fn degenerate(&self, a1: Complex64) -> bool {
        a1.norm() <= f64::EPSILON * self.amp_scales[0]
    }

    // Relative rounding error of a density fed by an amplitude of size √(p1/pref): the
    // mode sum carries an absolute error of a few ulps of Σ|c_m|.
    fn rel_noise(&self, detector: usize, p1: f64) -> f64 {
        if p1 <= 0.0 {
            return 1.0;
        }
        let amp = (p1 / self.prefactors[detector]).sqrt();
        (8.0 * f64::EPSILON * self.amp_scales[detector] / amp).min(1.0)
    }

    /// Closed-form test |𝒜₂/𝒜₁|² ∉ jensen_interval(λ); symmetrized, maximal detector only.
    pub fn jensen_ratio(&self, t: f64, phi: f64) -> Result<Option<RatioTest>> {
        let Some([a1, a2]) = self.amplitudes(0, t, phi) else { return Ok(None) };
        if self.degenerate(a1) {
            return Err(Error::DegenerateAmplitude);
        }
        Ok(Some(RatioTest::new((a2 / a1).norm_sqr(), jensen_interval(self.lambda))))
    }

    /// Closed-form test |𝒜₁(1)𝒜₂(2)| / |𝒜₁(2)𝒜₂(1)| ∉ cs_interval().
    pub fn cs_ratio(&self, t1: f64, phi1: f64, t2: f64, phi2: f64) -> Result<Option<RatioTest>> {
        let (Some([a11, a21]), Some([a12, a22])) = (self.amplitudes(0, t1, phi1), self.amplitudes(1, t2, phi2))
        else {
            return Ok(None);
        };
        let den = a12 * a21;
        if self.degenerate(den.norm().sqrt().into()) {
            return Err(Error::DegenerateAmplitude);
        }
        Ok(Some(RatioTest::new((a11 * a22).norm() / den.norm(), cs_interval())))
    }

    /// P₁(t,φ)² ≤ P₂(t,φ;t,φ), with P₁² read as P₁⁽¹⁾P₁⁽²⁾.
    pub fn margin_j(&self, t: f64, phi: f64) -> Result<JMargin> {
        let p2 = self.p2(t, phi, t, phi)?;
        let (q0, q1) = (self.p1(0, t, phi)?, self.p1(1, t, phi)?);
        let p1_product = q0 * q1;
        let margin = p2 - p1_product;
        let tol = VIOLATION_TOL + 2.0 * (self.rel_noise(0, q0) + self.rel_noise(1, q1));
        let ratio = match self.jensen_ratio(t, phi) {
            Err(Error::DegenerateAmplitude) => None,
            r => r?,
        };
        Ok(JMargin { p2, p1_product, margin, violated: margin < -tol * p2.max(p1_product), ratio })
    }

    /// P₂(1,2) ≤ √(P₂(1,1)P₂(2,2)).
    pub fn margin_cs(&self, t1: f64, phi1: f64, t2: f64, phi2: f64) -> Result<CsMargin> {
        let d1 = self.p2(t1, phi1, t1, phi1)?;
        let d2 = self.p2(t2, phi2, t2, phi2)?;
        if d1 <= 0.0 || d2 <= 0.0 {
            return Err(Error::DegenerateDiagonal);
        }
        let diagonal = (d1 * d2).sqrt();
        let p2 = self.p2(t1, phi1, t2, phi2)?;
        let margin = diagonal - p2;
        let mut tol = VIOLATION_TOL;
        for (t, phi) in [(t1, phi1), (t2, phi2)] {
            for k in 0..2 {
                tol += 2.0 * self.rel_noise(k, self.p1(k, t, phi)?);
            }
        }
        let ratio = match self.cs_ratio(t1, phi1, t2, phi2) {
            Err(Error::DegenerateAmplitude) => None,
            r => r?,
        };
        Ok(CsMargin { p2, diagonal, margin, violated: margin < -tol * diagonal.max(p2), ratio })
    }
}

/// P₂ with the default normalization.
#[allow(clippy::too_many_arguments)]
pub fn p2_joint(
    tps: &TwoParticleState,
    det1: &LocalizationMatrix,
    det2: &LocalizationMatrix,
    t1: f64,
    phi1: f64,
    t2: f64,
    phi2: f64,
) -> Result<f64> {
    JointEvaluator::new(tps, det1, det2, Normalization::default())?.p2(t1, phi1, t2, phi2)
}

/// Marginal density at detector `detector` (0 or 1), both detectors equal to `det`.
pub fn p1_marginal(tps: &TwoParticleState, det: &LocalizationMatrix, detector: usize, t: f64, phi: f64) -> Result<f64> {
    JointEvaluator::new(tps, det, det, Normalization::default())?.p1(detector, t, phi)
}

/// J margin with both detectors equal to `det`.
pub fn mi_inequality_j(tps: &TwoParticleState, det: &LocalizationMatrix, t: f64, phi: f64) -> Result<JMargin> {
    JointEvaluator::new(tps, det, det, Normalization::default())?.margin_j(t, phi)
}

/// CS margin with both detectors equal to `det`.
pub fn mi_inequality_cs(
    tps: &TwoParticleState,
    det: &LocalizationMatrix,
    t1: f64,
    phi1: f64,
    t2: f64,
    phi2: f64,
) -> Result<CsMargin> {
    JointEvaluator::new(tps, det, det, Normalization::default())?.margin_cs(t1, phi1, t2, phi2)
}

#[derive(Debug, Clone, Serialize)]
pub struct KolmogorovOptions {
    pub t1_start: f64,
    pub window: f64,
    /// Trapezoid intervals over the window.
    pub n_t1: usize,
    pub t2: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KolmogorovReport {
    pub t2: Vec<f64>,
    /// ∫dt₁ P₂(t₁,φ₁; t₂,φ₂) over the window.
    pub integral: Vec<f64>,
    /// P₁⁽²⁾(t₂, φ₂).
    pub marginal: Vec<f64>,
    /// max |integral − marginal| / max marginal.
    pub max_rel_deviation: f64,
    pub window: f64,
    pub period: f64,
}

/// Integrates the first detector out and compares with the second detector's marginal.
/// The window must cover at least one circulation period 2πr/⟨|v|⟩ of the first particle.
pub fn kolmogorov_check(
    tps: &TwoParticleState,
    det1: &LocalizationMatrix,
    det2: &LocalizationMatrix,
    phi1: f64,
    phi2: f64,
    opts: &KolmogorovOptions,
) -> Result<KolmogorovReport> {
    let period = tps.circulation_period(0);
    if !(opts.window >= period * (1.0 - 1e-12)) {
        return Err(Error::WindowInsufficient { window: opts.window, period });
    }
    if opts.n_t1 < 2 {
        return Err(Error::Domain("need at least two t1 intervals".into()));
    }
    let ev = JointEvaluator::new(tps, det1, det2, Normalization::default())?;
    let h = opts.window / opts.n_t1 as f64;
    let t1: Vec<f64> = (0..=opts.n_t1).map(|k| opts.t1_start + k as f64 * h).collect();
    let rows = opts
        .t2
        .par_iter()
        .map(|&t2| {
            let p2 = t1.iter().map(|&t| ev.p2(t, phi1, t2, phi2)).collect::<Result<Vec<_>>>()?;
            Ok((trapezoid(&t1, &p2), ev.p1(1, t2, phi2)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let (integral, marginal): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let top = marginal.iter().copied().fold(0.0, f64::max);
    let dev = integral.iter().zip(&marginal).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let max_rel_deviation = if top > 0.0 { dev / top } else { dev };
    log::info!("kolmogorov: window {} over period {period}, max relative deviation {max_rel_deviation:e}", opts.window);
    Ok(KolmogorovReport { t2: opts.t2.clone(), integral, marginal, max_rel_deviation, window: opts.window, period })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Inequality {
    J,
    Cs,
}

/// Scan points are the pairs (t₁, t₂) over both lists.
#[derive(Debug, Clone, Serialize)]
pub struct ScanGrid {
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
    pub phi1: f64,
    pub phi2: f64,
    /// Points whose scale falls below `floor` times the scan maximum are never flagged.
    pub floor: f64,
}

impl ScanGrid {
    pub fn new(t1: Vec<f64>, t2: Vec<f64>, phi1: f64, phi2: f64) -> Self {
        Self { t1, t2, phi1, phi2, floor: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ViolationRow {
    pub t1: f64,
    pub t2: f64,
    pub p2: f64,
    /// J margin at (t₂, φ₂).
    pub margin_j: f64,
    pub margin_cs: f64,
    pub violated_j: bool,
    pub violated_cs: bool,
    pub ratio_j: Option<RatioTest>,
    pub ratio_cs: Option<RatioTest>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ViolationReport {
    pub grid: ScanGrid,
    pub pairing: Pairing,
    pub b: f64,
    pub lambda: f64,
    pub rows: Vec<ViolationRow>,
}

impl ViolationReport {
    pub fn mask(&self, which: Inequality) -> Vec<bool> {
        self.rows
            .iter()
            .map(|r| match which {
                Inequality::J => r.violated_j,
                Inequality::Cs => r.violated_cs,
            })
            .collect()
    }

    pub fn margins(&self, which: Inequality) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| match which {
                Inequality::J => r.margin_j,
                Inequality::Cs => r.margin_cs,
            })
            .collect()
    }

    pub fn count(&self, which: Inequality) -> usize {
        self.mask(which).iter().filter(|&&v| v).count()
    }
}

/// Both margins over the grid, both detectors equal to `det`.
pub fn violation_scan(tps: &TwoParticleState, det: &LocalizationMatrix, grid: &ScanGrid) -> Result<ViolationReport> {
    let ev = JointEvaluator::new(tps, det, det, Normalization::default())?;
    let jm = grid.t2.par_iter().map(|&t| ev.margin_j(t, grid.phi2)).collect::<Result<Vec<_>>>()?;
    let n2 = grid.t2.len();
    let cs = (0..grid.t1.len() * n2)
        .into_par_iter()
        .map(|k| {
            let (t1, t2) = (grid.t1[k / n2], grid.t2[k % n2]);
            match ev.margin_cs(t1, grid.phi1, t2, grid.phi2) {
                Err(Error::DegenerateDiagonal) => Ok(None),
                r => r.map(Some),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let j_top = jm.iter().map(|m| m.p2.max(m.p1_product)).fold(0.0, f64::max);
    let cs_top = cs.iter().flatten().map(|m| m.diagonal.max(m.p2)).fold(0.0, f64::max);
    let rows = cs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let j = &jm[k % n2];
            let j_ok = j.p2.max(j.p1_product) > grid.floor * j_top;
            let (p2, margin_cs, violated_cs, ratio_cs) = match c {
                Some(c) => (c.p2, c.margin, c.violated && c.diagonal.max(c.p2) > grid.floor * cs_top, c.ratio),
                None => (0.0, 0.0, false, None),
            };
            ViolationRow {
                t1: grid.t1[k / n2],
                t2: grid.t2[k % n2],
                p2,
                margin_j: j.margin,
                margin_cs,
                violated_j: j.violated && j_ok,
                violated_cs,
                ratio_j: j.ratio,
                ratio_cs,
            }
        })
        .collect();
    Ok(ViolationReport { grid: grid.clone(), pairing: tps.pairing, b: tps.b(), lambda: tps.lambda(), rows })
}
