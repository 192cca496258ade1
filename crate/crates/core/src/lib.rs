//! Condition-number-driven selection of spherical sampling subsets.
//!
//! The crate builds spherical harmonic matrices (SHMs) for point sets on the
//! sphere, selects column subsets that minimize the SHM condition number by a
//! sweep over lower bounds on the smallest gram eigenvalue, and evaluates the
//! resulting layouts for Ambisonics reproduction and HRTF interpolation.

pub mod ambisonics;
pub mod direction;
pub mod eigen;
pub mod error;
pub mod hrtf;
pub mod io;
pub mod mask;
pub mod optimizer;
pub mod sampling;
pub mod sh;
pub mod shm;
pub mod voronoi;

pub use direction::{Convention, Direction, PointSet};
pub use eigen::{eigen_summary, CMatrix, EigenSummary};
pub use error::{Error, ErrorKind, Result};
pub use mask::SelectionMask;
pub use sh::{eval_sh, Basis};
pub use shm::{build_shm, build_shm_with, condition_number, gram, AngleMapping, ShMatrix, ShmOptions};
