//! Camera intrinsic self-calibration from image triplets.
//!
//! A projective trifocal tensor estimated from pixel correspondences becomes
//! a calibrated tensor once expressed in normalized coordinates `K⁻¹ x`.
//! Calibrated tensors satisfy 15 quartic polynomial identities, so the
//! intrinsics `(fx, fy, cx, cy)` are recovered by minimizing the violation
//! of those identities over `K`.
//!
//! * [`geometry`]: intrinsics, poses and exact tensor constructions.
//! * [`constraints`]: the 15 quartic residuals.
//! * [`estimation`]: linear tensor estimation and point transfer.
//! * [`calibration`]: Direct, MSAC and MSAC-Opt calibration.
//! * [`fundamental`]: the fundamental-matrix baseline.
//! * [`synth`] and [`bench`]: synthetic scenes and experiment grids.
//! * [`io`]: correspondence files consumed by the command-line tool.
//!
//! ```
//! use trifocal_calib::prelude::*;
//!
//! let scene = generate_scene(&SceneConfig { num_points: 60, seed: 7, ..Default::default() }).unwrap();
//! let (tensor, _) = linear_estimate(&scene.triples().unwrap()).unwrap();
//! let k0 = Intrinsics::new(1030.0, 980.0, 655.0, 350.0).unwrap();
//! let report = calibrate_direct(&[tensor], &k0, &CalibrationConfig::default()).unwrap();
//! assert!(mean_relative_error(&report.intrinsics, &scene.k_true).mean < 0.1);
//! ```

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod calibration;
pub mod cli;
pub mod constraints;
pub mod dual;
pub mod error;
pub mod estimation;
pub mod fundamental;
pub mod geometry;
pub mod io;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::bench::{run_experiment, ExperimentConfig, Method};
    pub use crate::calibration::{
        calibrate_direct, calibrate_msac, calibrate_msac_opt, constraint_cost, msac_score, CalibrationConfig,
        CalibrationReport,
    };
    pub use crate::constraints::{quartic_residuals, ConstraintResiduals};
    pub use crate::error::{Error, Result};
    pub use crate::estimation::{linear_estimate, transfer_error, transfer_point};
    pub use crate::fundamental::{calibrate_fundamental, estimate_fundamental, fundamentals_from_triples};
    pub use crate::geometry::{
        apply_intrinsics_transform, calibrated_trifocal_from_poses, normalize_tensor, project, trifocal_from_cameras,
        trifocal_from_projections, CameraPose, Intrinsics, PointTriple, ProjectionMatrix, TrifocalTensor,
    };
    pub use crate::synth::{generate_scene, mean_relative_error, perturb_intrinsics, Perturbation, SceneConfig};
}
