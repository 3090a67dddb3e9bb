pub mod combinatorics;
pub mod error;
pub mod exterior;
pub mod feforms;
pub mod linalg;
pub mod mesh;
pub mod poly;
pub mod random;
pub mod report;
pub mod simplex;
pub mod tnbasis;

pub use error::{Error, Result};
