//! Ring dispersion, mode velocities and rotating-frame energies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Field mass, ring radius and mode cutoff. All sums run over `-m_max..=m_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSpace {
    pub mu: f64,
    pub r: f64,
    pub m_max: i64,
}

impl ModeSpace {
    pub fn new(mu: f64, r: f64, m_max: i64) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::Domain(format!("mass must be finite and >= 0, got {mu}")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!("radius must be finite and > 0, got {r}")));
        }
        if m_max < 1 {
            return Err(Error::Domain(format!("m_max must be >= 1, got {m_max}")));
        }
        Ok(Self { mu, r, m_max })
    }

    /// ω_m = √(μ² + m²/r²).
    pub fn omega(&self, m: i64) -> f64 {
        self.omega_at(m as f64)
    }

    /// Continuous dispersion, used at half-integer midpoints.
    pub fn omega_at(&self, m: f64) -> f64 {
        (self.mu * self.mu + (m / self.r).powi(2)).sqrt()
    }

    /// v_m = m/(ω_m r).
    pub fn velocity(&self, m: i64) -> Result<f64> {
        if m == 0 && self.mu == 0.0 {
            return Err(Error::UndefinedVelocity);
        }
        Ok(self.velocity_at(m as f64))
    }

    /// Continuous velocity; 0 at m = 0 (massless included, where the zero mode is excluded anyway).
    pub fn velocity_at(&self, m: f64) -> f64 {
        if m == 0.0 {
            return 0.0;
        }
        if self.mu == 0.0 {
            return m.signum();
        }
        m / (self.omega_at(m) * self.r)
    }

    pub fn modes(&self) -> std::ops::RangeInclusive<i64> {
        -self.m_max..=self.m_max
    }

    pub fn dim(&self) -> usize {
        (2 * self.m_max + 1) as usize
    }

    /// Storage index of mode `m`.
    pub fn index(&self, m: i64) -> usize {
        (m + self.m_max) as usize
    }

    pub fn mode_at(&self, index: usize) -> i64 {
        index as i64 - self.m_max
    }

    pub fn contains(&self, m: i64) -> bool {
        m.abs() <= self.m_max
    }
}

/// A ring rotating with angular velocity Ω_D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationFrame {
    pub omega_d: f64,
    pub modes: ModeSpace,
}

impl RotationFrame {
    pub fn new(omega_d: f64, modes: ModeSpace) -> Result<Self> {
        let rim_speed = (omega_d * modes.r).abs();
        if !(rim_speed < 1.0) {
            return Err(Error::InvalidFrame { rim_speed });
        }
        Ok(Self { omega_d, modes })
    }

    pub fn static_frame(modes: ModeSpace) -> Self {
        Self { omega_d: 0.0, modes }
    }

    /// Ω_D r.
    pub fn rim_speed(&self) -> f64 {
        self.omega_d * self.modes.r
    }

    /// ω̃_m = ω_m − mΩ_D.
    pub fn rotating_omega(&self, m: i64) -> f64 {
        self.rotating_omega_at(m as f64)
    }

    pub fn rotating_omega_at(&self, m: f64) -> f64 {
        self.modes.omega_at(m) - m * self.omega_d
    }

    /// ṽ_m = v_m − rΩ_D.
    pub fn rotating_velocity(&self, m: i64) -> Result<f64> {
        Ok(self.modes.velocity(m)? - self.rim_speed())
    }
}

/// Truncation estimate for a series: last retained term times the number of comparable terms.
pub fn truncation_remainder(last_term: f64, comparable_terms: usize) -> f64 {
    last_term.abs() * comparable_terms.max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn dispersion_examples() {
        assert_eq!(ModeSpace::new(0.0, 1.0, 10).unwrap().omega(5), 5.0);
        let ms = ModeSpace::new(1000.0, 1.0, 2000).unwrap();
        assert!(close(ms.omega(1000), 1000.0 * 2f64.sqrt(), 1e-9));
        assert_eq!(ModeSpace::new(3.0, 2.0, 4).unwrap().omega(0), 3.0);
    }

    #[test]
    fn velocity_examples() {
        let ms0 = ModeSpace::new(0.0, 1.0, 10).unwrap();
        assert_eq!(ms0.velocity(7).unwrap(), 1.0);
        assert_eq!(ms0.velocity(0), Err(Error::UndefinedVelocity));
        let ms = ModeSpace::new(1000.0, 1.0, 2000).unwrap();
        assert!(close(ms.velocity(1000).unwrap(), 0.5f64.sqrt(), 1e-12));
        let ms5 = ModeSpace::new(5.0, 1.0, 10).unwrap();
        assert!(close(ms5.velocity(-3).unwrap(), -3.0 / 34f64.sqrt(), 1e-15));
        assert!(close(ms5.velocity(-3).unwrap(), -0.51450, 1e-5));
    }

    #[test]
    fn rotating_examples() {
        let ms0 = ModeSpace::new(0.0, 1.0, 10).unwrap();
        let st = RotationFrame::static_frame(ms0);
        assert_eq!(st.rotating_omega(3), ms0.omega(3));
        let rf = RotationFrame::new(0.5, ms0).unwrap();
        assert_eq!(rf.rotating_omega(4), 2.0);
        let rf1 = RotationFrame::new(0.9, ModeSpace::new(1.0, 1.0, 10).unwrap()).unwrap();
        assert!(close(rf1.rotating_omega(-2), 5f64.sqrt() + 1.8, 1e-14));
        assert!(close(rf1.rotating_omega(-2), 4.0361, 1e-4));
        let rf3 = RotationFrame::new(0.3, ms0).unwrap();
        assert!(close(rf3.rotating_velocity(5).unwrap(), 0.7, 1e-15));
        let rf4 = RotationFrame::new(0.1, ModeSpace::new(1000.0, 1.0, 2000).unwrap()).unwrap();
        assert!(close(rf4.rotating_velocity(1000).unwrap(), 0.60711, 1e-5));
    }

    #[test]
    fn frame_must_be_timelike() {
        let ms = ModeSpace::new(0.0, 2.0, 10).unwrap();
        assert!(matches!(RotationFrame::new(0.6, ms), Err(Error::InvalidFrame { .. })));
        assert!(RotationFrame::new(-0.49, ms).is_ok());
    }

    #[test]
    fn invalid_mode_space() {
        assert!(ModeSpace::new(-1.0, 1.0, 3).is_err());
        assert!(ModeSpace::new(1.0, 0.0, 3).is_err());
        assert!(ModeSpace::new(1.0, 1.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn dispersion_parity_and_monotonicity(mu in 0.0f64..50.0, r in 0.1f64..10.0, m in 1i64..5000) {
            let ms = ModeSpace::new(mu, r, 5000).unwrap();
            prop_assert_eq!(ms.omega(m), ms.omega(-m));
            prop_assert!(ms.omega(m) > ms.omega(m - 1));
            prop_assert!(ms.omega(m) > mu);
            prop_assert_eq!(ms.omega(0), mu);
        }

        #[test]
        fn subluminal_velocity(mu in 1e-3f64..50.0, r in 0.1f64..10.0, m in -5000i64..5000) {
            let ms = ModeSpace::new(mu, r, 5000).unwrap();
            let v = ms.velocity(m).unwrap();
            prop_assert!(v.abs() < 1.0);
            prop_assert!(v == 0.0 || v.signum() == (m as f64).signum());
        }

        #[test]
        fn rotating_energies_positive(mu in 0.0f64..5.0, r in 0.2f64..3.0, s in -0.999f64..0.999) {
            let ms = ModeSpace::new(mu, r, 400).unwrap();
            let rf = RotationFrame::new(s / r, ms).unwrap();
            for m in ms.modes().filter(|&m| m != 0) {
                prop_assert!(rf.rotating_omega(m) > 0.0);
            }
        }
    }

    #[test]
    fn velocity_tends_to_sign() {
        let ms = ModeSpace::new(1.0, 1.0, 10).unwrap();
        assert!(1.0 - ms.velocity(1_000_000).unwrap() < 1e-11);
        assert!(1.0 + ms.velocity(-1_000_000).unwrap() < 1e-11);
    }
}
