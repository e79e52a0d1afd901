//! Semi-infinite polynomial programming by moment relaxations and an exchange method.

pub mod conic;
pub mod error;
pub mod exchange;
pub mod extract;
pub mod homogenize;
pub mod io;
pub mod jacobian;
pub mod local;
pub mod moment;
pub mod par;
pub mod pmi;
pub mod poly;

pub use error::{Error, Result};
