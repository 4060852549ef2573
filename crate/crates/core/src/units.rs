//! Physical constants and unit conversions.

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Default carrier wavelength.
pub const DEFAULT_WAVELENGTH_NM: f64 = 1550.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Carrier frequency in Hz for a wavelength in nm.
pub fn carrier_frequency(wavelength_nm: f64) -> f64 {
    SPEED_OF_LIGHT / (wavelength_nm * 1e-9)
}

/// Group-velocity dispersion β₂ in s²/m from D in ps/(nm·km).
pub fn beta2_from_dispersion(d_ps_nm_km: f64, wavelength_nm: f64) -> f64 {
    let d_si = d_ps_nm_km * 1e-6; // s/m²
    let lambda = wavelength_nm * 1e-9;
    -d_si * lambda * lambda / (2.0 * std::f64::consts::PI * SPEED_OF_LIGHT)
}
