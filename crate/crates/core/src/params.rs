//! Physical inputs and the derived coefficients of the effective two-level model.
//!
//! Angular frequencies are stored in rad/us and times in us, so a rate quoted as
//! `2*pi x 3.0 MHz` enters as `2*pi*3.0`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Saturation parameters at or above this value break the adiabatic
/// elimination the model rests on.
pub const CHI_VALIDITY_LIMIT: f64 = 0.1;

/// Convert a linear frequency in MHz to rad/us.
pub fn mhz(f: f64) -> f64 {
    TAU * f
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Hyperfine splitting. Kept as metadata; it does not enter the dynamics.
    pub omega_ud: f64,
    pub delta_up: f64,
    pub delta_dn: f64,
    pub kappa: f64,
    pub g: f64,
    pub gamma: f64,
    pub eta: f64,
    pub beta_in: f64,
    /// Probe polarization angle (rad).
    pub vartheta: f64,
    pub n_atoms: usize,
    /// Coherent-spin-state polar angle (rad).
    pub theta: f64,
    /// Coherent-spin-state azimuth (rad).
    pub phi: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl PhysicalParams {
    /// Reference parameter set used throughout the simulations.
    pub fn reference() -> Self {
        Self {
            omega_ud: mhz(1560.0),
            delta_up: mhz(1000.0),
            delta_dn: mhz(1000.0),
            kappa: mhz(3.0),
            g: mhz(1.5),
            gamma: mhz(4.9),
            eta: 0.6,
            beta_in: 120.0,
            vartheta: 0.0,
            n_atoms: 100,
            theta: 0.5 * PI,
            phi: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("omega_ud", self.omega_ud),
            ("delta_up", self.delta_up),
            ("delta_dn", self.delta_dn),
            ("kappa", self.kappa),
            ("g", self.g),
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("beta_in", self.beta_in),
            ("vartheta", self.vartheta),
            ("theta", self.theta),
            ("phi", self.phi),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite, got {v}")));
            }
        }
        if self.kappa == 0.0 {
            return Err(Error::SingularParams("cavity loss kappa is zero".into()));
        }
        if self.kappa < 0.0 {
            return Err(Error::Domain(format!(
                "kappa must be > 0, got {}",
                self.kappa
            )));
        }
        if self.gamma < 0.0 {
            return Err(Error::Domain(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        if self.g < 0.0 {
            return Err(Error::Domain(format!("g must be >= 0, got {}", self.g)));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::Domain(format!(
                "eta must lie in [0, 1], got {}",
                self.eta
            )));
        }
        if self.beta_in < 0.0 {
            return Err(Error::Domain(format!(
                "beta_in must be >= 0, got {}",
                self.beta_in
            )));
        }
        if self.n_atoms == 0 {
            return Err(Error::Domain("n_atoms must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub physical: PhysicalParams,
    pub beta_up: f64,
    pub beta_dn: f64,
    pub chi_up: f64,
    pub chi_dn: f64,
    pub xi_up: C64,
    pub xi_dn: C64,
    /// Raman pumping down -> up, `gamma chi_up / 3`.
    pub rate_pump: f64,
    /// Raman decay up -> down, `gamma chi_dn / 3`.
    pub rate_decay: f64,
    pub rate_deph_ind_up: f64,
    pub rate_deph_ind_dn: f64,
    pub rate_deph_coll_up: f64,
    pub rate_deph_coll_dn: f64,
    pub coop: f64,
    pub n_coop: f64,
    /// Rotating-frame frequency subtracted from the Raman light shift.
    pub frame_shift: f64,
    pub warnings: Vec<String>,
}

impl DerivedParams {
    /// `2 (Delta_up chi_up - Delta_dn chi_dn)`, the differential light shift.
    pub fn light_shift(&self) -> f64 {
        2.0 * (self.physical.delta_up * self.chi_up - self.physical.delta_dn * self.chi_dn)
    }

    /// Coherence rotation rate left over after moving to the rotating frame.
    pub fn residual_rotation(&self) -> f64 {
        self.light_shift() - self.frame_shift
    }

    pub fn with_frame_shift(mut self, frame_shift: f64) -> Self {
        self.frame_shift = frame_shift;
        self
    }

    /// Copy with the measurement coupling removed.
    pub fn without_measurement(mut self) -> Self {
        self.xi_up = C64::new(0.0, 0.0);
        self.xi_dn = C64::new(0.0, 0.0);
        self
    }

    pub fn n_atoms(&self) -> usize {
        self.physical.n_atoms
    }

    pub fn is_valid_regime(&self) -> bool {
        self.warnings.is_empty()
    }
}

pub fn derive_params(p: &PhysicalParams) -> Result<DerivedParams> {
    p.validate()?;

    let (cos_t, sin_t) = (cos_pi(p.vartheta / PI), sin_pi(p.vartheta / PI));
    // cos^2 and sin^2 from cos(2 vartheta) so equal projections come out bit-equal.
    let cos2 = cos_pi(2.0 * p.vartheta / PI);
    let beta_in_sq = p.beta_in * p.beta_in;
    let beta_up_sq = beta_in_sq * (1.0 + cos2) * 0.5;
    let beta_dn_sq = beta_in_sq * (1.0 - cos2) * 0.5;

    let g2 = p.g * p.g;
    let gamma_half_sq = 0.25 * p.gamma * p.gamma;
    let chi = |beta_sq: f64, delta: f64| {
        let den = delta * delta + gamma_half_sq;
        if beta_sq == 0.0 {
            0.0
        } else {
            g2 * beta_sq / den
        }
    };
    let chi_up = chi(beta_up_sq, p.delta_up);
    let chi_dn = chi(beta_dn_sq, p.delta_dn);
    if !(chi_up.is_finite() && chi_dn.is_finite()) {
        return Err(Error::SingularParams(
            "saturation parameter diverges (zero detuning and gamma)".into(),
        ));
    }

    let xi = |beta_sq: f64, delta: f64| -> C64 {
        if p.beta_in == 0.0 || beta_sq == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let amp = (beta_sq / p.beta_in) * (p.eta * p.kappa).sqrt() * (2.0 * g2 / p.kappa);
        amp / C64::new(delta, -0.5 * p.gamma)
    };
    let xi_up = xi(beta_up_sq, p.delta_up);
    let xi_dn = xi(beta_dn_sq, p.delta_dn);

    let coop = if p.gamma > 0.0 {
        4.0 * g2 / (p.kappa * p.gamma)
    } else {
        f64::INFINITY
    };

    let mut warnings = Vec::new();
    for (name, v) in [("chi_up", chi_up), ("chi_dn", chi_dn)] {
        if v >= CHI_VALIDITY_LIMIT {
            let msg = format!("{name} = {v:.4} is not small; adiabatic elimination is unreliable");
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }

    let frame_shift = 2.0 * (p.delta_up * chi_up - p.delta_dn * chi_dn);

    Ok(DerivedParams {
        physical: p.clone(),
        beta_up: p.beta_in * cos_t,
        beta_dn: p.beta_in * sin_t,
        chi_up,
        chi_dn,
        xi_up,
        xi_dn,
        rate_pump: p.gamma * chi_up / 3.0,
        rate_decay: p.gamma * chi_dn / 3.0,
        rate_deph_ind_up: 2.0 * p.gamma * chi_up / 3.0,
        rate_deph_ind_dn: 2.0 * p.gamma * chi_dn / 3.0,
        rate_deph_coll_up: 4.0 * g2 * chi_up / p.kappa,
        rate_deph_coll_dn: 4.0 * g2 * chi_dn / p.kappa,
        coop,
        n_coop: p.n_atoms as f64 * coop,
        frame_shift,
        warnings,
    })
}

/// `cos(pi x)`, exact at multiples of one half.
pub fn cos_pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r == 0.0 {
        1.0
    } else if r == 0.5 || r == 1.5 {
        0.0
    } else if r == 1.0 {
        -1.0
    } else {
        (PI * r).cos()
    }
}

/// `sin(pi x)`, exact at multiples of one half.
pub fn sin_pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r == 0.0 || r == 1.0 {
        0.0
    } else if r == 0.5 {
        1.0
    } else if r == 1.5 {
        -1.0
    } else {
        (PI * r).sin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn reference_values() {
        let d = derive_params(&PhysicalParams::reference()).unwrap();
        // Quoted values are mutually consistent only to ~2%.
        assert!(rel(d.chi_up, 3.22e-2) < 0.02, "chi_up = {}", d.chi_up);
        assert_eq!(d.chi_dn, 0.0);
        assert!(rel(d.rate_deph_coll_up, mhz(96.4e-3)) < 0.02);
        assert!(rel(d.rate_pump, mhz(53.6e-3)) < 0.02);
        assert!(rel(d.rate_deph_ind_up, mhz(107.1e-3)) < 0.02);
        assert!(rel(d.coop, 0.6) < 0.03, "coop = {}", d.coop);
        assert!(rel(d.n_coop, 60.0) < 0.03);
        assert_eq!(d.rate_decay, 0.0);
        assert_eq!(d.xi_dn, C64::new(0.0, 0.0));
        assert!(d.is_valid_regime());
    }

    #[test]
    fn no_drive_no_dynamics() {
        let p = PhysicalParams {
            beta_in: 0.0,
            ..PhysicalParams::reference()
        };
        let d = derive_params(&p).unwrap();
        assert_eq!((d.chi_up, d.chi_dn), (0.0, 0.0));
        assert_eq!((d.rate_pump, d.rate_decay), (0.0, 0.0));
        assert_eq!(d.xi_up, C64::new(0.0, 0.0));
        assert_eq!(d.xi_dn, C64::new(0.0, 0.0));
    }

    #[test]
    fn balanced_polarization_cancels_exactly() {
        let p = PhysicalParams {
            vartheta: 0.25 * PI,
            ..PhysicalParams::reference()
        };
        let d = derive_params(&p).unwrap();
        assert_eq!(d.xi_dn - d.xi_up, C64::new(0.0, 0.0));
        assert_eq!(d.chi_up, d.chi_dn);
    }

    #[test]
    fn singular_and_domain_errors() {
        let base = PhysicalParams::reference();
        assert!(matches!(
            derive_params(&PhysicalParams {
                kappa: 0.0,
                ..base.clone()
            }),
            Err(Error::SingularParams(_))
        ));
        assert!(matches!(
            derive_params(&PhysicalParams {
                eta: 1.5,
                ..base.clone()
            }),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            derive_params(&PhysicalParams { n_atoms: 0, ..base }),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn strong_drive_warns() {
        let p = PhysicalParams {
            delta_up: mhz(100.0),
            ..PhysicalParams::reference()
        };
        let d = derive_params(&p).unwrap();
        assert!(d.chi_up >= CHI_VALIDITY_LIMIT);
        assert!(!d.is_valid_regime());
    }

    #[test]
    fn default_frame_cancels_light_shift() {
        let d = derive_params(&PhysicalParams::reference()).unwrap();
        assert_eq!(d.residual_rotation(), 0.0);
        assert!(rel(d.light_shift() / 2.0, mhz(32.2)) < 0.02);
    }

    #[test]
    fn exact_trig() {
        assert_eq!(cos_pi(0.5), 0.0);
        assert_eq!(cos_pi(-0.5), 0.0);
        assert_eq!(sin_pi(1.0), 0.0);
        assert_eq!(cos_pi(2.0), 1.0);
        assert!((cos_pi(0.3) - (0.3 * PI).cos()).abs() < 1e-15);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn params(vartheta: f64, beta_in: f64, eta: f64) -> PhysicalParams {
        PhysicalParams {
            vartheta,
            beta_in,
            eta,
            ..PhysicalParams::reference()
        }
    }

    proptest! {
        #[test]
        fn xi_modulus_matches_dephasing(v in 0.0..PI, beta in 1.0..300.0f64, eta in 0.0..=1.0f64) {
            let p = params(v, beta, eta);
            let d = derive_params(&p).unwrap();
            let rows = [
                (d.xi_up, d.beta_up, d.rate_deph_coll_up),
                (d.xi_dn, d.beta_dn, d.rate_deph_coll_dn),
            ];
            for (xi, b, coll) in rows {
                let lhs = xi.norm_sqr();
                let rhs = (b / beta).powi(2) * eta * coll;
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs), "{lhs} vs {rhs}");
            }
        }

        #[test]
        fn beta_components_sum(v in -PI..PI, beta in 0.0..500.0f64) {
            let d = derive_params(&params(v, beta, 0.6)).unwrap();
            let s = d.beta_up.powi(2) + d.beta_dn.powi(2);
            prop_assert!((s - beta * beta).abs() <= 1e-12 * (1.0 + beta * beta));
        }

        #[test]
        fn cos2_antisymmetry(v in 0.0..(0.5 * PI), beta in 1.0..300.0f64) {
            let a = derive_params(&params(v, beta, 0.6)).unwrap();
            let b = derive_params(&params(0.5 * PI - v, beta, 0.6)).unwrap();
            let da = a.xi_dn - a.xi_up;
            let db = b.xi_dn - b.xi_up;
            prop_assert!((da + db).norm() <= 1e-12 * (1.0 + da.norm()));
        }

        #[test]
        fn rates_scale_with_intensity(v in 0.0..PI, beta in 1.0..200.0f64, k in 0.1..4.0f64) {
            let a = derive_params(&params(v, beta, 0.6)).unwrap();
            let b = derive_params(&params(v, beta * k.sqrt(), 0.6)).unwrap();
            let pairs = [
                (a.chi_up, b.chi_up), (a.chi_dn, b.chi_dn),
                (a.rate_pump, b.rate_pump), (a.rate_decay, b.rate_decay),
                (a.rate_deph_coll_up, b.rate_deph_coll_up),
                (a.xi_up.norm_sqr(), b.xi_up.norm_sqr()), (a.xi_dn.norm_sqr(), b.xi_dn.norm_sqr()),
            ];
            for (x, y) in pairs {
                prop_assert!((y - k * x).abs() <= 1e-10 * (1.0 + y.abs()));
            }
        }
    }
}
