pub mod error;
pub mod numerics;
pub mod poly_garnier;
pub mod quantization;
pub mod garnier_okamoto;
pub mod scenario;
pub mod schlesinger;

pub use error::{LabError, Result};
