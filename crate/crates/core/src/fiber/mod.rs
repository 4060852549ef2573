//! Nonlinear dual-polarization fiber propagation over dispersion-managed spans.

mod ase;
mod link;
mod ssfm;

pub use ase::{ase_psd_per_pol, lumped_ase};
pub use link::propagate_link;
pub use ssfm::{dispersion_all_pass, inline_dispersion_comp, ssfm_span, SsfmStats};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One fiber span. Units follow the usual datasheet conventions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberSpanConfig {
    pub length_km: f64,
    /// Dispersion parameter D in ps/(nm·km).
    pub dispersion_ps_nm_km: f64,
    /// Nonlinear coefficient γ in 1/(W·km).
    pub gamma_per_w_km: f64,
    pub alpha_db_km: f64,
    /// Fraction of the span dispersion left after inline compensation.
    pub rdps_fraction: f64,
    #[serde(default = "default_wavelength")]
    pub wavelength_nm: f64,
}

fn default_wavelength() -> f64 {
    crate::units::DEFAULT_WAVELENGTH_NM
}

impl FiberSpanConfig {
    /// 80 km NZDSF span with 5 % residual dispersion.
    pub fn nzdsf_80km() -> Self {
        Self {
            length_km: 80.0,
            dispersion_ps_nm_km: 3.9,
            gamma_per_w_km: 1.6,
            alpha_db_km: 0.2,
            rdps_fraction: 0.05,
            wavelength_nm: default_wavelength(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_km > 0.0) {
            return Err(Error::Config("span length must be positive".into()));
        }
        if !(self.alpha_db_km >= 0.0) {
            return Err(Error::Config("attenuation must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.rdps_fraction) {
            return Err(Error::Config("residual dispersion fraction must lie in [0, 1]".into()));
        }
        if !(self.wavelength_nm > 0.0) || !self.dispersion_ps_nm_km.is_finite() {
            return Err(Error::Config("wavelength and dispersion must be finite and positive".into()));
        }
        if !self.gamma_per_w_km.is_finite() {
            return Err(Error::Config("nonlinear coefficient must be finite".into()));
        }
        Ok(())
    }

    pub fn beta2(&self) -> f64 {
        crate::units::beta2_from_dispersion(self.dispersion_ps_nm_km, self.wavelength_nm)
    }

    /// Power attenuation coefficient in 1/m.
    pub fn alpha_per_m(&self) -> f64 {
        self.alpha_db_km / (10.0 * std::f64::consts::LOG10_E) / 1e3
    }

    /// Linear span loss (equal to the restoring amplifier gain).
    pub fn span_loss(&self) -> f64 {
        crate::units::db_to_linear(self.alpha_db_km * self.length_km)
    }
}

/// A chain of identical spans with lumped amplification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub spans: usize,
    pub span: FiberSpanConfig,
    /// Amplifier noise figure in dB; `None` disables ASE.
    pub edfa_nf_db: Option<f64>,
    pub launch_power_dbm: f64,
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        self.span.validate()
    }

    pub fn center_wavelength_nm(&self) -> f64 {
        self.span.wavelength_nm
    }
}

/// Split-step step-size control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SsfmSettings {
    /// Constant step.
    Fixed { step_km: f64 },
    /// Step bounded so the peak nonlinear phase per step stays below
    /// `max_phase_rad`, and never longer than `max_step_km`.
    NonlinearPhase { max_phase_rad: f64, max_step_km: f64 },
}

impl Default for SsfmSettings {
    fn default() -> Self {
        SsfmSettings::NonlinearPhase {
            max_phase_rad: 1e-3,
            max_step_km: 1.0,
        }
    }
}

impl SsfmSettings {
    pub fn validate(&self, span_km: f64) -> Result<()> {
        match *self {
            SsfmSettings::Fixed { step_km } => {
                if !(step_km > 0.0) {
                    return Err(Error::Config("step must be positive".into()));
                }
                if step_km > span_km {
                    return Err(Error::Config(format!(
                        "step {step_km} km exceeds the {span_km} km span"
                    )));
                }
            }
            SsfmSettings::NonlinearPhase {
                max_phase_rad,
                max_step_km,
            } => {
                if !(max_phase_rad > 0.0 && max_step_km > 0.0) {
                    return Err(Error::Config("phase bound and step cap must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// The same control with every bound halved.
    pub fn refined(&self) -> Self {
        match *self {
            SsfmSettings::Fixed { step_km } => SsfmSettings::Fixed {
                step_km: step_km / 2.0,
            },
            SsfmSettings::NonlinearPhase {
                max_phase_rad,
                max_step_km,
            } => SsfmSettings::NonlinearPhase {
                max_phase_rad: max_phase_rad / 2.0,
                max_step_km: max_step_km / 2.0,
            },
        }
    }
}
