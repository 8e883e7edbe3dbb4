//! Monte Carlo checks of the probabilistic side: BESQ paths, the integral
//! time change, local times, survival and conditioned occupation.

mod besq;
mod local_time;
mod occupation;
mod parallel;

pub use besq::{
    besq0_integral_with, besq0_step, f_cdf, f_density, sample_besq0, sample_besq0_with,
    sample_besq2, sample_besq2_with, time_change, DiffusionPath, TimeChange, MAX_STEPS,
};
pub use local_time::{
    bridge_local_time, local_time_field, ray_knight_first, ray_knight_second, LocalTimeField,
    RayKnightConfig, RayKnightReport, NEAR_ZERO_BINS,
};
pub use occupation::{
    conditioned_occupation, f_density_experiment, mc_conditioned_occupation, survival_eigen,
    survival_mc, FDensityReport, HorizonResult, OccupationConfig, OccupationHistogram,
    OCCUPATION_BINS, OCCUPATION_DT,
};
pub use parallel::{mc_estimate, run_workers, share, Estimate, Merge, Moments, RngSpec};
