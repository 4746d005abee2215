//! Pointwise overcertification bounds on the error process `E = Ŝ² − S²`.

pub mod joint;
pub mod ou;
pub mod overcert;
pub mod supermartingale;

pub use joint::{
    e_drift_diffusion, error_value, joint_euler_step, joint_sde_coefficients, EDrift,
    JointCoefficients, JointState,
};
pub use ou::{fit_ou, ou_tail, OuAccumulator, OuFit, OuParams};
pub use overcert::{
    overcert_stats, polar_alignment, ErrorProcessObserver, OvercertStats, MIN_PAIRS,
};
pub use supermartingale::{
    supermartingale_bound, DriftLandscape, SearchSettings, SupermartingaleBound,
};
