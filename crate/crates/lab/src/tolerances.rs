use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Version of the tolerance table layout; override files must match it.
pub const TOLERANCES_VERSION: u32 = 1;

/// Reference values and pass/fail thresholds shared by the CLI and the acceptance run.
///
/// Any field may be overridden from a JSON file; missing fields keep their default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub version: u32,
    pub bessel_root_abs: f64,
    pub bessel_root_seconds: f64,
    pub gamma_star_ref: f64,
    pub gamma_star_rel: f64,
    pub table_seconds: f64,
    pub gamma_bullet_ref: f64,
    pub gamma_bullet_rel: f64,
    pub gamma_bullet_cost_max: f64,
    pub gamma_circ_ref: f64,
    pub gamma_circ_rel: f64,
    pub gamma_circ_cost_rel: f64,
    pub i2_abs: f64,
    pub i0_abs: f64,
    pub exponent_ref: f64,
    pub exponent_abs: f64,
    pub exponent_seconds: f64,
    pub second_difference_floor: f64,
    pub j_at_091_min: f64,
    pub detour_rel: f64,
    /// Monte Carlo agreement in standard errors.
    pub se_multiplier: f64,
    pub ray_knight_seconds: f64,
    pub survival_slope_rel: f64,
    pub survival_seconds: f64,
    pub ks_occupation0: f64,
    pub ks_occupation2: f64,
    pub wirtinger_floor: f64,
    pub convexity_margin: f64,
    pub round_trip_abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            version: TOLERANCES_VERSION,
            bessel_root_abs: 1e-10,
            bessel_root_seconds: 1e-3,
            gamma_star_ref: 4.586,
            gamma_star_rel: 5e-3,
            table_seconds: 60.0,
            gamma_bullet_ref: 3.513,
            gamma_bullet_rel: 1e-2,
            gamma_bullet_cost_max: 13.26,
            gamma_circ_ref: 1.983,
            gamma_circ_rel: 1e-2,
            gamma_circ_cost_rel: 1e-3,
            i2_abs: 1e-4,
            i0_abs: 1e-6,
            exponent_ref: 3.0,
            exponent_abs: 0.05,
            exponent_seconds: 5.0,
            second_difference_floor: -1e-8,
            j_at_091_min: 26.87,
            detour_rel: 1e-2,
            se_multiplier: 3.0,
            ray_knight_seconds: 300.0,
            survival_slope_rel: 1e-3,
            survival_seconds: 120.0,
            ks_occupation0: 0.05,
            ks_occupation2: 0.10,
            wirtinger_floor: -1e-8,
            convexity_margin: 1e-6,
            round_trip_abs: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn from_json(text: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(text)?;
        if t.version != TOLERANCES_VERSION {
            return Err(LabError::Usage(format!(
                "tolerance table version {} does not match {TOLERANCES_VERSION}",
                t.version
            )));
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
