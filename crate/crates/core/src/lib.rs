pub mod cli;
pub mod elliptic;
pub mod error;
pub mod finite_gap;
pub mod fuchsian;
pub mod hk;
pub mod jet;
pub mod linalg;
pub mod painleve;
pub mod poly;
pub mod quad;
pub mod xi;

pub use error::{Error, Result};
