//! Random versus average Lyapunov exponents for rotated twist maps of the
//! sphere, and for the linear SO(2) analogue.
//!
//! The family studied is `{g ∘ f_ε : g ∈ SO(3)}`, where `f_ε` twists each
//! latitude circle by `πε(1 + z)`. Two quantities are compared: the random
//! exponent `R(ε)` of i.i.d. compositions with Haar-distributed `g`, and the
//! average exponent `Λ(ε)`, the Haar average of each map's own exponent.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod exponents;
pub mod fixedpoints;
pub mod geometry;
pub mod linear;
pub mod rng;
pub mod stats;
pub mod quadrature;
pub mod twistmap;
pub mod vec3;

pub use error::{Error, Result};
pub use exponents::{Estimator, ExponentEstimate, MegnoAccumulator};
pub use geometry::{HaarSample, Quaternion, Rotation, SpherePoint, TangentState};
pub use rng::Seed;
pub use twistmap::{CylinderPoint, ShearMatrix, TwistFamily};
pub use vec3::Vec3;
