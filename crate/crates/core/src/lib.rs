//! Polynomial decision variables in the `dpvar` form.
//!
//! A matrix-valued polynomial that is affine in its decision variables is
//! stored as
//!
//! ```text
//! S(x; ξ) = (I_m1 ⊗ [1; ξ])ᵀ · C · (I_m2 ⊗ Z(x))
//! ```
//!
//! where `Z(x)` is a sparse monomial basis in the independent variables and
//! `C` a sparse coefficient matrix with one row per decision variable (plus
//! one for the constant part). Decision variables never enter the monomial
//! basis, so basis work does not grow with their number.
//!
//! Modules, bottom up:
//!
//! * [`sparse`]: compressed sparse column kernel.
//! * [`monomial`]: degree matrices, basis merging and products.
//! * [`dpvar`]: the [`DPoly`] type and its algebra.
//! * [`pvar`]: the flattened baseline where decision variables join the basis.
//! * [`sosprog`]: SOS program construction and extraction of SDP data.
//! * [`sdp`]: SDPA export/import and a small interior-point solver.

pub mod dpvar;
pub mod error;
pub mod monomial;
pub mod pvar;
pub mod sdp;
pub mod sosprog;
pub mod sparse;

pub use dpvar::{DPoly, PPoly, Side, Term};
pub use error::{Error, Result};
pub use monomial::{DegreeMatrix, VarSet};
pub use pvar::FlatPoly;
pub use sdp::{SdpProblem, Solution, SolveOptions, Status};
pub use sosprog::{QuadOption, Sense, SosProgram};

pub use sparse::SparseMat;
