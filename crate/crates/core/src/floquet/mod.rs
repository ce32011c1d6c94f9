//! Floquet normal form `Phi(t) = V(t) e^{Ct}` along the branch and the
//! location of the exponents.

pub mod float;
pub mod nk;
pub mod spectral;
