//! Exact computational experiments on projections `x -> x + W` of point sets
//! in `F_p^n`: Grassmannians, subspace duality, non-degenerate families,
//! incidences, and verifiers for the inequalities relating them.

pub mod error;
pub mod families;
pub mod fflinalg;
pub mod gen;
pub mod grassmann;
pub mod incidence;
pub mod project;
pub mod subspace;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use families::SubspaceFamily;
pub use fflinalg::{Ambient, Matrix, Prime, Scalar, Vector};
pub use project::PointSet;
pub use subspace::Subspace;
