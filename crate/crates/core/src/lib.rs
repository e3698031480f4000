//! Numerical laboratory for dynamical stability of holomorphic families
//! of endomorphisms of projective space.
//!
//! The crate computes and cross-checks several equivalent stability
//! criteria for one-parameter families `λ ↦ f_λ`:
//!
//! * harmonicity of the Lyapunov function `L(λ)` and the bifurcation
//!   raster given by its discrete Laplacian ([`lyapunov`]),
//! * boundedness of post-critical graph masses and convergence of the
//!   ramification series ([`postcritical`]),
//! * the inverse-branch/equilibrium-web construction over a base point,
//!   with invariance-defect and acriticality diagnostics ([`webbuilder`]),
//! * Misiurewicz parameter detection ([`misiurewicz`]).
//!
//! Families are described symbolically by homogeneous lifts with
//! coefficients polynomial in the parameter ([`family`]); the phase
//! dimension is 1 (fully supported) or 2 (Monte Carlo current masses
//! only). All randomness is seeded and per-index substreamed, so every
//! pipeline is reproducible bit-for-bit.

pub mod equilibrium;
pub mod error;
pub mod family;
pub mod io;
pub mod lyapunov;
pub mod misiurewicz;
pub mod postcritical;
pub mod poly;
pub mod stats;
pub mod webbuilder;

pub use error::{Error, Result};
pub use family::{Cx, FamilySpec, MotionTrack, ParamGrid, ParamRect, ProjPoint};
