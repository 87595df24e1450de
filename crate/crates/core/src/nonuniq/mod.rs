//! Nonuniqueness for subcritical pairs: `k_p` indicators, Levin products, cardinal
//! interpolant families, the free-interpolation iteration and the witness pipeline.

pub mod family;
pub mod iteration;
pub mod kp;
pub mod levin;
pub mod witness;

pub use family::{build_interpolant_family, FamilyConstants, FamilySide, InterpolantFamily};
pub use iteration::{solve_free_interpolation, CrossOperator, FreeSolution, ResidualState, Target};
pub use kp::{build_kp, find_b0, KpFunction};
pub use levin::{build_levin_product, smooth_ray_zeros, truncation_stability, verify_levin_bounds, LevinCheckConfig, LevinProduct, LevinReport, RayZeros};
pub use witness::{construct_nonuniqueness_witness, prepare_witness, Witness, WitnessConfig, WitnessReport, WitnessSetup};
