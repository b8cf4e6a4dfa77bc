//! Detector kernels R̃(ω, m), localization matrices, absorption profiles and the ring
//! Wigner–Weyl transform.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{ModeSpace, RotationFrame};
use crate::specfun::{alternating_inverse_sum, sinc};

const UNIT_TOL: f64 = 1e-12;
const UNPHYSICAL_TOL: f64 = 1e-12;

/// Tabulated kernel on a rectangular (ω, m) grid, bilinear in between, zero outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 3]>", into = "Vec<[f64; 3]>")]
pub struct KernelTable {
    omegas: Vec<f64>,
    ms: Vec<f64>,
    values: Vec<f64>,
}

impl KernelTable {
    /// Build from (ω, m, value) triples covering a full rectangular grid.
    pub fn from_triples(triples: &[[f64; 3]]) -> Result<Self> {
        let mut omegas: Vec<f64> = triples.iter().map(|t| t[0]).collect();
        let mut ms: Vec<f64> = triples.iter().map(|t| t[1]).collect();
        for v in [&mut omegas, &mut ms] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        if omegas.len() < 2 || ms.len() < 2 || omegas.len() * ms.len() != triples.len() {
            return Err(Error::Config(
                "custom kernel table must cover a rectangular grid with at least 2x2 nodes".into(),
            ));
        }
        let mut values = vec![f64::NAN; omegas.len() * ms.len()];
        for t in triples {
            if !(t[2] >= 0.0) {
                return Err(Error::Config(format!("kernel value must be >= 0, got {}", t[2])));
            }
            let i = omegas.binary_search_by(|w| w.total_cmp(&t[0])).unwrap();
            let j = ms.binary_search_by(|m| m.total_cmp(&t[1])).unwrap();
            values[i * ms.len() + j] = t[2];
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Config("duplicate node in custom kernel table".into()));
        }
        Ok(Self { omegas, ms, values })
    }

    /// Tabulate a function on the given grid.
    pub fn tabulate(omegas: &[f64], ms: &[f64], f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let triples: Vec<[f64; 3]> =
            omegas.iter().flat_map(|&w| ms.iter().map(move |&m| [w, m, 0.0])).map(|[w, m, _]| [w, m, f(w, m)]).collect();
        Self::from_triples(&triples)
    }

    pub fn eval(&self, omega: f64, m: f64) -> f64 {
        let (Some((i, u)), Some((j, v))) = (bracket(&self.omegas, omega), bracket(&self.ms, m)) else {
            return 0.0;
        };
        let n = self.ms.len();
        let f = |a: usize, b: usize| self.values[a * n + b];
        (1.0 - u) * (1.0 - v) * f(i, j) + u * (1.0 - v) * f(i + 1, j) + (1.0 - u) * v * f(i, j + 1)
            + u * v * f(i + 1, j + 1)
    }
}

impl TryFrom<Vec<[f64; 3]>> for KernelTable {
    type Error = Error;
    fn try_from(t: Vec<[f64; 3]>) -> Result<Self> {
        Self::from_triples(&t)
    }
}

impl From<KernelTable> for Vec<[f64; 3]> {
    fn from(k: KernelTable) -> Self {
        let n = k.ms.len();
        k.omegas
            .iter()
            .enumerate()
            .flat_map(|(i, &w)| k.ms.iter().enumerate().map(move |(j, &m)| (i, j, w, m)))
            .map(|(i, j, w, m)| [w, m, k.values[i * n + j]])
            .collect()
    }
}

fn bracket(grid: &[f64], x: f64) -> Option<(usize, f64)> {
    let (first, last) = (grid[0], grid[grid.len() - 1]);
    if !(x >= first && x <= last) {
        return None;
    }
    let i = grid.partition_point(|&g| g <= x).saturating_sub(1).min(grid.len() - 2);
    Some((i, (x - grid[i]) / (grid[i + 1] - grid[i])))
}

/// Detector kernel families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum DetectorKernel {
    /// A e^{−γ₁|k| − γ₀ω}, k = m/r.
    MaxLocalization { amplitude: f64, gamma0: f64, gamma1: f64 },
    /// A e^{−a r ω} θ(m); on shell and massless this is e^{−am} for m ≥ 1.
    RingExponential { amplitude: f64, decay: f64 },
    Custom { table: KernelTable },
}

impl DetectorKernel {
    pub fn max_localization(amplitude: f64, gamma0: f64, gamma1: f64) -> Result<Self> {
        if !(amplitude > 0.0) || !(gamma0 >= 0.0) || !(gamma1 >= 0.0) {
            return Err(Error::Domain("max-localization kernel needs A > 0 and gamma0, gamma1 >= 0".into()));
        }
        Ok(Self::MaxLocalization { amplitude, gamma0, gamma1 })
    }

    pub fn ring_exponential(amplitude: f64, decay: f64) -> Result<Self> {
        if !(amplitude > 0.0) || !(decay > 0.0) {
            return Err(Error::Domain("ring-exponential kernel needs A > 0 and a > 0".into()));
        }
        Ok(Self::RingExponential { amplitude, decay })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::MaxLocalization { amplitude, gamma0, gamma1 } => {
                Self::max_localization(amplitude, gamma0, gamma1).map(|_| ())
            }
            Self::RingExponential { amplitude, decay } => Self::ring_exponential(amplitude, decay).map(|_| ()),
            Self::Custom { .. } => Ok(()),
        }
    }

    /// ln R̃ at the literal arguments, without the static support rule; None where R̃ = 0.
    pub fn log_eval_unrestricted(&self, omega: f64, m: f64, r: f64) -> Option<f64> {
        match *self {
            Self::MaxLocalization { amplitude, gamma0, gamma1 } => {
                Some(amplitude.ln() - gamma1 * (m / r).abs() - gamma0 * omega)
            }
            Self::RingExponential { amplitude, decay } => {
                (m > 0.0).then(|| amplitude.ln() - decay * r * omega)
            }
            Self::Custom { ref table } => {
                let v = table.eval(omega, m);
                (v > 0.0).then(|| v.ln())
            }
        }
    }

    pub fn eval_unrestricted(&self, omega: f64, m: f64, r: f64) -> f64 {
        match self {
            Self::Custom { table } => table.eval(omega, m),
            _ => self.log_eval_unrestricted(omega, m, r).map_or(0.0, f64::exp),
        }
    }

    /// R̃(ω, m) with the support rule: zero for ω < 0 or |m|/r > ω.
    pub fn eval(&self, omega: f64, m: f64, r: f64) -> f64 {
        if omega < 0.0 || (m / r).abs() > omega {
            return 0.0;
        }
        self.eval_unrestricted(omega, m, r)
    }

    fn log_eval(&self, omega: f64, m: f64, r: f64) -> Option<f64> {
        if omega < 0.0 || (m / r).abs() > omega {
            return None;
        }
        self.log_eval_unrestricted(omega, m, r)
    }

    /// Whether the kernel support continues below / above a finite mode window.
    fn open_ends(&self) -> (bool, bool) {
        match self {
            Self::MaxLocalization { .. } => (true, true),
            Self::RingExponential { .. } => (false, true),
            Self::Custom { .. } => (false, false),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum LocEntries {
    Unit,
    Dense(Vec<f64>),
}

/// L(m, m′) over a contiguous mode window.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationMatrix {
    lo: i64,
    hi: i64,
    omega_d: f64,
    entries: LocEntries,
    open_below: bool,
    open_above: bool,
}

impl LocalizationMatrix {
    /// The maximum-localization operator L ≡ 1 on `range`, support unbounded on both sides.
    pub fn maximal(range: RangeInclusive<i64>) -> Self {
        Self { lo: *range.start(), hi: *range.end(), omega_d: 0.0, entries: LocEntries::Unit, open_below: true, open_above: true }
    }

    /// Explicit operator on a closed window; checked for symmetry, unit diagonal and 0 ≤ L ≤ 1.
    pub fn from_fn(range: RangeInclusive<i64>, f: impl Fn(i64, i64) -> f64) -> Result<Self> {
        let (lo, hi) = (*range.start(), *range.end());
        let n = (hi - lo + 1) as usize;
        let mut v = vec![0.0; n * n];
        for m in lo..=hi {
            for mp in lo..=hi {
                let x = if m == mp { 1.0 } else { f(m, mp) };
                if !(x >= 0.0 && x <= 1.0 + UNPHYSICAL_TOL) || (x - f(mp, m)).abs() > 1e-15 && m != mp {
                    return Err(Error::UnphysicalKernel { m, m_prime: mp, value: x });
                }
                v[(m - lo) as usize * n + (mp - lo) as usize] = x;
            }
        }
        Ok(Self { lo, hi, omega_d: 0.0, entries: LocEntries::Dense(v), open_below: false, open_above: false })
    }

    pub fn range(&self) -> RangeInclusive<i64> {
        self.lo..=self.hi
    }

    pub fn omega_d(&self) -> f64 {
        self.omega_d
    }

    pub fn is_maximal(&self) -> bool {
        self.entries == LocEntries::Unit
    }

    pub fn contains(&self, m: i64) -> bool {
        (self.lo..=self.hi).contains(&m)
    }

    pub fn get(&self, m: i64, mp: i64) -> f64 {
        if !self.contains(m) || !self.contains(mp) {
            return 0.0;
        }
        match &self.entries {
            LocEntries::Unit => 1.0,
            LocEntries::Dense(v) => {
                let n = (self.hi - self.lo + 1) as usize;
                v[(m - self.lo) as usize * n + (mp - self.lo) as usize]
            }
        }
    }
}

/// L(m, m′) = R̃((ω_m+ω_{m′})/2, (m+m′)/2)/√(R̃(ω_m, m)R̃(ω_{m′}, m′)); rotating frames
/// substitute ω̃ and evaluate the kernel without the static support rule.
pub fn localization_matrix(
    dk: &DetectorKernel,
    ms: &ModeSpace,
    frame: Option<&RotationFrame>,
    range: RangeInclusive<i64>,
) -> Result<LocalizationMatrix> {
    let (lo, hi) = (*range.start(), *range.end());
    if lo > hi {
        return Err(Error::Domain("empty mode range".into()));
    }
    let r = ms.r;
    let energy = |m: i64| frame.map_or(ms.omega(m), |f| f.rotating_omega(m));
    let log_r = |w: f64, k: f64| match frame {
        Some(_) => dk.log_eval_unrestricted(w, k, r),
        None => dk.log_eval(w, k, r),
    };
    let n = (hi - lo + 1) as usize;
    let energies: Vec<f64> = (lo..=hi).map(energy).collect();
    let diag: Vec<Option<f64>> = (lo..=hi).zip(&energies).map(|(m, &w)| log_r(w, m as f64)).collect();
    let missing: Vec<i64> = (lo..=hi).zip(&diag).filter(|(_, d)| d.is_none()).map(|(m, _)| m).collect();
    if !missing.is_empty() {
        return Err(Error::SupportViolation { modes: missing });
    }
    let diag: Vec<f64> = diag.into_iter().map(Option::unwrap).collect();
    let entries: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|ij| {
            let (i, j) = (ij / n, ij % n);
            if i == j {
                return 1.0;
            }
            let (m, mp) = (lo + i as i64, lo + j as i64);
            let w = 0.5 * (energies[i] + energies[j]);
            log_r(w, 0.5 * (m + mp) as f64).map_or(0.0, |lm| (lm - 0.5 * (diag[i] + diag[j])).exp())
        })
        .collect();
    if let Some((ij, &value)) =
        entries.iter().enumerate().find(|(_, &v)| v > 1.0 + UNPHYSICAL_TOL || v.is_nan())
    {
        return Err(Error::UnphysicalKernel { m: lo + (ij / n) as i64, m_prime: lo + (ij % n) as i64, value });
    }
    let unit = entries.iter().all(|&v| (v - 1.0).abs() <= UNIT_TOL);
    let (open_below, open_above) = dk.open_ends();
    Ok(LocalizationMatrix {
        lo,
        hi,
        omega_d: frame.map_or(0.0, |f| f.omega_d),
        entries: if unit { LocEntries::Unit } else { LocEntries::Dense(entries) },
        open_below,
        open_above,
    })
}

/// a(m) = R̃(ω_m, m)/(2|m|), zero at m = 0 and outside the stored window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionProfile {
    lo: i64,
    values: Vec<f64>,
}

impl AbsorptionProfile {
    pub fn from_values(lo: i64, values: Vec<f64>) -> Self {
        Self { lo, values }
    }

    pub fn value(&self, m: i64) -> f64 {
        if m == 0 || m < self.lo {
            return 0.0;
        }
        self.values.get((m - self.lo) as usize).copied().unwrap_or(0.0)
    }

    pub fn range(&self) -> RangeInclusive<i64> {
        self.lo..=(self.lo + self.values.len() as i64 - 1)
    }
}

pub fn absorption(dk: &DetectorKernel, ms: &ModeSpace, range: RangeInclusive<i64>) -> AbsorptionProfile {
    let lo = *range.start();
    let values = range
        .map(|m| if m == 0 { 0.0 } else { dk.eval(ms.omega(m), m as f64, ms.r) / (2.0 * m.abs() as f64) })
        .collect();
    AbsorptionProfile { lo, values }
}

/// L̃(θ, p) sampled on a grid; `values[ip * thetas.len() + itheta]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WignerWeylField {
    pub thetas: Vec<f64>,
    pub ps: Vec<f64>,
    pub values: Vec<f64>,
}

impl WignerWeylField {
    pub fn at(&self, ip: usize, itheta: usize) -> f64 {
        self.values[ip * self.thetas.len() + itheta]
    }

    pub fn row(&self, ip: usize) -> &[f64] {
        let n = self.thetas.len();
        &self.values[ip * n..(ip + 1) * n]
    }

    /// ∫dθ over one period, trapezoid on a uniform periodic grid that excludes the endpoint.
    pub fn theta_integral(&self, ip: usize) -> f64 {
        self.row(ip).iter().sum::<f64>() * 2.0 * PI / self.thetas.len() as f64
    }

    /// Full width at half maximum of the θ profile at `ip`, by linear interpolation.
    pub fn theta_fwhm(&self, ip: usize) -> Option<f64> {
        let row = self.row(ip);
        let (imax, &peak) = row.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
        let half = 0.5 * peak;
        let n = row.len();
        let h = self.thetas[1] - self.thetas[0];
        let walk = |dir: isize| -> Option<f64> {
            let mut i = imax as isize;
            for _ in 0..n {
                let j = (i + dir).rem_euclid(n as isize);
                if row[j as usize] < half {
                    let (a, b) = (row[i.rem_euclid(n as isize) as usize], row[j as usize]);
                    let steps = (i - imax as isize).abs() as f64;
                    return Some(h * (steps + (a - half) / (a - b)));
                }
                i += dir;
            }
            None
        };
        Some(walk(1)? + walk(-1)?)
    }
}

/// L̃(θ, p) = (1/2π) Σ L(m, m′) e^{i(m′−m)θ} sinc(π(p − (m+m′)/2)), real for symmetric L.
pub fn wigner_weyl(op: &LocalizationMatrix, thetas: &[f64], ps: &[f64]) -> WignerWeylField {
    let (lo, hi) = (op.lo, op.hi);
    let values: Vec<f64> = ps
        .iter()
        .flat_map(|&p| thetas.iter().map(move |&th| (p, th)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(p, th)| {
            let mut acc = 0.0;
            // group by s = m + m′ so each sinc is evaluated once
            for s in (2 * lo)..=(2 * hi) {
                let w = sinc(PI * (p - 0.5 * s as f64));
                let mut inner = 0.0;
                let m_lo = (s - hi).max(lo);
                let m_hi = (s - lo).min(hi);
                for m in m_lo..=m_hi {
                    let mp = s - m;
                    inner += op.get(m, mp) * (((mp - m) as f64) * th).cos();
                }
                acc += w * inner;
            }
            acc / (2.0 * PI)
        })
        .collect();
    WignerWeylField { thetas: thetas.to_vec(), ps: ps.to_vec(), values }
}

/// Σ_m sinc(π(p − m)) over the modes the kernel supports beyond the stored window, in
/// closed form: sinc(π(p−m)) = (−1)^m sin(πp)/(π(p−m)).
pub fn marginal_tail(op: &LocalizationMatrix, p: f64) -> f64 {
    let s = (PI * p).sin() / PI;
    if s == 0.0 {
        return 0.0;
    }
    let sign = |m: i64| if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let mut tail = 0.0;
    if op.open_above {
        // Σ_{m>hi} (−1)^m/(p−m) = (−1)^{hi} S(hi+1−p)
        tail += sign(op.hi) * alternating_inverse_sum(op.hi as f64 + 1.0 - p);
    }
    if op.open_below {
        // Σ_{m<lo} (−1)^m/(p−m) = (−1)^{lo−1} S(p−lo+1)
        tail += sign(op.lo - 1) * alternating_inverse_sum(p - op.lo as f64 + 1.0);
    }
    s * tail
}

/// ∫dθ L̃(θ, p) of the stored window, exactly: Σ_m L(m, m) sinc(π(p − m)).
pub fn marginal_window(op: &LocalizationMatrix, p: f64) -> f64 {
    (op.lo..=op.hi).map(|m| op.get(m, m) * sinc(PI * (p - m as f64))).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_thetas(n: usize) -> Vec<f64> {
        (0..n).map(|j| -PI + 2.0 * PI * j as f64 / n as f64).collect()
    }

    #[test]
    fn kernel_examples() {
        let ml = DetectorKernel::max_localization(1.0, 0.0, 0.0).unwrap();
        assert_eq!(ml.eval(3.0, 2.0, 1.0), 1.0);
        assert_eq!(ml.eval(-1.0, 0.0, 1.0), 0.0);
        assert_eq!(ml.eval(1.0, 2.0, 1.0), 0.0);
        let re = DetectorKernel::ring_exponential(1.0, 1.0).unwrap();
        let ms = ModeSpace::new(0.0, 1.0, 10).unwrap();
        assert!((re.eval(ms.omega(2), 2.0, 1.0) - (-2.0f64).exp()).abs() < 1e-16);
        assert!((re.eval(ms.omega(2), 2.0, 1.0) - 0.13534).abs() < 1e-5);
        assert_eq!(re.eval(ms.omega(2), -2.0, 1.0), 0.0);
        assert_eq!(re.eval(0.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn max_localization_is_unit() {
        let ms = ModeSpace::new(2.0, 1.0, 50).unwrap();
        let ml = DetectorKernel::max_localization(2.5, 0.3, 0.7).unwrap();
        let l = localization_matrix(&ml, &ms, None, 1..=50).unwrap();
        assert!(l.is_maximal());
        assert_eq!(l.get(3, 17), 1.0);
        let rf = RotationFrame::new(0.4, ms).unwrap();
        let lr = localization_matrix(&ml, &ms, Some(&rf), 1..=50).unwrap();
        assert!(lr.is_maximal());
        for m in 1..=50 {
            for mp in 1..=50 {
                assert_eq!(lr.get(m, mp), 1.0);
            }
        }
    }

    #[test]
    fn opposite_signs_with_gamma1_are_unphysical() {
        let ms = ModeSpace::new(0.0, 1.0, 5).unwrap();
        let ml = DetectorKernel::max_localization(1.0, 0.0, 0.5).unwrap();
        assert!(matches!(
            localization_matrix(&ml, &ms, None, -5..=5),
            Err(Error::UnphysicalKernel { .. })
        ));
    }

    #[test]
    fn ring_exponential_stays_maximal_when_massive() {
        // the energy argument is the mean of the endpoint energies, so e^{-a r ω} cancels exactly
        let ms = ModeSpace::new(3.0, 1.0, 30).unwrap();
        let re = DetectorKernel::ring_exponential(1.0, 0.8).unwrap();
        assert!(localization_matrix(&re, &ms, None, 1..=30).unwrap().is_maximal());
    }

    #[test]
    fn tabulated_log_convex_kernel() {
        // R̃ = 1/m gives L(m, m′) = 2√(mm′)/(m+m′)
        let mgrid: Vec<f64> = (1..=80).map(|i| i as f64 * 0.5).collect();
        let table = KernelTable::tabulate(&[0.0, 100.0], &mgrid, |_, m| 1.0 / m).unwrap();
        let k = DetectorKernel::Custom { table };
        let ms = ModeSpace::new(3.0, 1.0, 30).unwrap();
        let l = localization_matrix(&k, &ms, None, 1..=30).unwrap();
        assert!(!l.is_maximal());
        for m in 1..=30i64 {
            assert_eq!(l.get(m, m), 1.0);
            for mp in 1..=30i64 {
                let expect = 2.0 * ((m * mp) as f64).sqrt() / (m + mp) as f64;
                assert!((l.get(m, mp) - expect).abs() < 1e-14);
                assert_eq!(l.get(m, mp), l.get(mp, m));
                assert!(l.get(m, mp) <= 1.0);
            }
        }
    }

    #[test]
    fn gaussian_counterexample_rejected() {
        let omegas: Vec<f64> = (0..=600).map(|i| i as f64 * 0.01).collect();
        let mgrid: Vec<f64> = (-12..=12).map(|i| i as f64 * 0.5).collect();
        let table = KernelTable::tabulate(&omegas, &mgrid, |w, _| (-w * w).exp()).unwrap();
        let g = DetectorKernel::Custom { table };
        let ms = ModeSpace::new(0.0, 1.0, 5).unwrap();
        let r = localization_matrix(&g, &ms, None, 1..=5);
        assert!(matches!(r, Err(Error::UnphysicalKernel { .. })), "{r:?}");
    }

    #[test]
    fn support_violation_lists_modes() {
        let ms = ModeSpace::new(0.0, 1.0, 5).unwrap();
        let re = DetectorKernel::ring_exponential(1.0, 1.0).unwrap();
        match localization_matrix(&re, &ms, None, -2..=3) {
            Err(Error::SupportViolation { modes }) => assert_eq!(modes, vec![-2, -1, 0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn table_bilinear_and_zero_outside() {
        let t = KernelTable::from_triples(&[[0.0, 0.0, 1.0], [1.0, 0.0, 3.0], [0.0, 1.0, 2.0], [1.0, 1.0, 4.0]]).unwrap();
        assert!((t.eval(0.5, 0.5) - 2.5).abs() < 1e-15);
        assert_eq!(t.eval(1.5, 0.5), 0.0);
        let round: Vec<[f64; 3]> = t.clone().into();
        assert_eq!(KernelTable::from_triples(&round).unwrap(), t);
        assert!(KernelTable::from_triples(&[[0.0, 0.0, 1.0], [1.0, 1.0, 1.0]]).is_err());
    }

    #[test]
    fn kernel_json_roundtrip() {
        let k = DetectorKernel::ring_exponential(1.0, 2.0).unwrap();
        let s = serde_json::to_string(&k).unwrap();
        assert_eq!(s, r#"{"family":"ring-exponential","amplitude":1.0,"decay":2.0}"#);
        let c: DetectorKernel = serde_json::from_str(
            r#"{"family":"custom","table":[[0,0,1],[1,0,1],[0,1,1],[1,1,1]]}"#,
        )
        .unwrap();
        assert!(matches!(c, DetectorKernel::Custom { .. }));
    }

    #[test]
    fn absorption_examples() {
        let ms = ModeSpace::new(0.0, 1.0, 10).unwrap();
        let flat = DetectorKernel::max_localization(1.0, 0.0, 0.0).unwrap();
        let a = absorption(&flat, &ms, 1..=10);
        for m in 1..=10 {
            assert!((a.value(m) - 0.5 / m as f64).abs() < 1e-16);
        }
        let re = DetectorKernel::ring_exponential(1.0, 1.0).unwrap();
        let a = absorption(&re, &ms, -10..=10);
        assert!((a.value(3) - (-3.0f64).exp() / 6.0).abs() < 1e-16);
        assert_eq!(a.value(0), 0.0);
        assert_eq!(a.value(-3), 0.0);
    }

    #[test]
    fn wigner_weyl_diagonal_is_theta_independent() {
        let l = LocalizationMatrix::from_fn(1..=8, |_, _| 0.0).unwrap();
        let f = wigner_weyl(&l, &uniform_thetas(16), &[2.3, 4.0]);
        for ip in 0..2 {
            let row = f.row(ip);
            assert!(row.iter().all(|v| (v - row[0]).abs() < 1e-14));
        }
    }

    #[test]
    fn wigner_weyl_marginal_with_tails() {
        let l = LocalizationMatrix::maximal(-60..=60);
        let f = wigner_weyl(&l, &uniform_thetas(256), &[-3.7, 0.0, 0.25, 12.5, 30.9]);
        for (ip, &p) in f.ps.iter().enumerate() {
            let exact_window = marginal_window(&l, p);
            assert!((f.theta_integral(ip) - exact_window).abs() < 1e-12);
            let total = f.theta_integral(ip) + marginal_tail(&l, p);
            assert!((total - 1.0).abs() < 1e-10, "p = {p}: {total}");
        }
    }

    #[test]
    fn max_localization_width_scales_inverse_cutoff() {
        let mut w = vec![];
        for &mmax in &[50i64, 100, 200] {
            let l = LocalizationMatrix::maximal(-mmax..=mmax);
            let f = wigner_weyl(&l, &uniform_thetas(16 * mmax as usize), &[0.3]);
            w.push(f.theta_fwhm(0).unwrap() * mmax as f64);
        }
        assert!(w.iter().all(|x| (x / w[0] - 1.0).abs() < 0.05), "{w:?}");
    }

    #[test]
    fn truncated_maximal_window_goes_negative() {
        // positivity of L̃ needs the whole lattice; a hard cutoff rings below zero
        let l = LocalizationMatrix::maximal(-40..=40);
        let f = wigner_weyl(&l, &uniform_thetas(1024), &[10.0]);
        let row = f.row(0);
        let (lo, hi) = row.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(lo / hi < -0.1, "{}", lo / hi);
    }
}
