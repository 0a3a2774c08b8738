//! Gait design for serially connected multi-legged and limbless robots.
//!
//! Gaits are prescribed by the extended Hildebrand parameters (duty factor,
//! lateral phase lag, amplitudes and a body-leg phase offset), evaluated by
//! quasi-static force balance under Coulomb friction, and integrated on
//! SE(2). Height functions over the toroidal shape space give Stokes
//! estimates of the per-cycle displacement; a static stability metric
//! scores every gait.
//!
//! ```
//! use gaitlab::{make_reference_robot, GaitParams, Undulation};
//! use gaitlab::simulate::cycle_displacement;
//!
//! let hexapod = make_reference_robot("hexapod")?;
//! let tripod = GaitParams::for_robot(&hexapod, 0.5, 0.5, 0.0, Undulation::FixedStraight);
//! let step = cycle_displacement(&hexapod, &tripod, 128)?;
//! assert!(step.x > 0.0);
//! # Ok::<(), gaitlab::Error>(())
//! ```

// Checks are written `!(x > 0.0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod analysis;
pub mod contact;
pub mod error;
pub mod gait;
pub mod geomech;
pub mod morphology;
pub mod numeric;
pub mod se2;
pub mod simulate;
pub mod stability;
pub mod sweep;

pub use contact::{BodyVelocity, FrictionKind, FrictionModel, LocalConnection};
pub use error::{Error, Result};
pub use gait::{GaitParams, ShapePoint, ShapeVelocity, Undulation};
pub use morphology::{make_reference_robot, Configuration, Mode, PlanarPoseSet, ReferenceRobot, RobotSpec, Side};
pub use se2::Pose2;
pub use simulate::Trajectory;
pub use stability::StabilityClass;

// The guide's code blocks run as doc-tests so they stay in step with the
// library.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/robots.md")]
    mod robots {}
    #[doc = include_str!("../../../book/src/gaits.md")]
    mod gaits {}
    #[doc = include_str!("../../../book/src/contact.md")]
    mod contact {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/height-functions.md")]
    mod height_functions {}
    #[doc = include_str!("../../../book/src/coordination.md")]
    mod coordination {}
    #[doc = include_str!("../../../book/src/stability.md")]
    mod stability {}
    #[doc = include_str!("../../../book/src/sweeps.md")]
    mod sweeps {}
    #[doc = include_str!("../../../book/src/estimation.md")]
    mod estimation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
