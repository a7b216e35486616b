//! kineflow-core: symplectic phase-space mechanics, small-dimension exterior
//! calculus, kinematic clustering of sparse image flows around vanishing
//! points, Coulomb-style vanishing-point dynamics, motion structure and
//! moment-map tensors, and a synthetic ground-truth flow generator.

pub mod error;
pub mod exterior;
pub mod flow_analysis;
pub mod moment_tensor;
pub mod phase_space;
pub mod synthgen;
pub mod util;
pub mod vp_dynamics;

pub use error::{Error, Result};
