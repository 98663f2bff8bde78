//! Special functions, small dense linear algebra and seeded random streams.

pub mod linalg;
pub mod rng;
pub mod special;

pub use linalg::{cholesky_factor, mahalanobis_sq, mean_and_cov, Cholesky, SymMatrix};
pub use rng::{normal_stream, RngStream};
pub use special::{chisq_cdf, chisq_pdf, chisq_quantile, gamma_p, gamma_q, ln_gamma};
