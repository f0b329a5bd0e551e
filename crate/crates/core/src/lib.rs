//! Certification toolkit for quantum network compatibility.
//!
//! The crate decides whether multipartite states or covariance data are
//! consistent with preparation on a fixed network of independent (or
//! classically correlated) sources. Covariance-based criteria are phrased as
//! conic feasibility problems; norm- and inflation-based criteria are closed
//! form. See the `certify` module for the criterion catalogue and `conic` for
//! the shared feasibility engine.

use openblas_src as _;

pub mod bounds;
pub mod certify;
pub mod conic;
pub mod error;
pub mod io;
pub mod linalg;
pub mod network;
pub mod states;

pub use error::{Error, Result};
