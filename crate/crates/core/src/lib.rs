//! Numerical differential geometry of surfaces in the Minkowski 3-space.
//!
//! The crate implements the Möbius inversion `p -> p / <p,p>` on points and
//! on parametric patches, the fundamental forms and their closed-form
//! pushforward under inversion, the curvature loci (locus of degeneracy,
//! lightlike principal locus, parabolic set), integration of principal
//! curvature lines, and the convexity criteria for inverted Euclidean
//! spheres together with the translation search for ovaloids.

#![allow(non_snake_case)]

pub mod error;
pub mod flow;
pub mod fmt;
pub mod forms;
pub mod loci;
pub mod mesh;
pub mod minkowski;
pub mod mobius_forms;
pub mod sphere;
pub mod surface;

pub use error::{Error, Result};
pub use forms::{BdeCoefficients, FormBundle};
pub use minkowski::{CausalType, Region, Vec3, LIGHT_CONE_TOL};
pub use surface::{Domain, Jet2, SurfacePatch};
