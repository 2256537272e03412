//! Jet calculus for flat partial connections, transverse linear ODEs and
//! Schwarzian calculus, and the prolonged projective-linear group action on
//! second prolongations of projective space.
//!
//! Everything works on coordinate charts with truncated power-series data,
//! either exactly over ℚ(i) or in double-precision complex arithmetic.

pub mod connection;
pub mod error;
pub mod jets;
pub mod linalg;
pub mod multi_index;
pub mod ode;
pub mod psl;
pub mod random;
pub mod scalar;
pub mod series;
pub mod series_matrix;

pub use error::{Error, Result};
pub use linalg::Mat;
pub use multi_index::MultiIndex;
pub use scalar::{q, Dual, GaussRat, Scalar};
pub use series::TruncatedSeries;
pub use series_matrix::SeriesMatrix;
