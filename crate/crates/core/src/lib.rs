//! Validated continuation and stability proofs for a family of periodic
//! orbits of a two-predator/one-prey chemostat model.
//!
//! The pipeline is: float approximation at Chebyshev nodes ([`numerics`]),
//! a Newton–Kantorovich proof on the Fourier–Chebyshev space
//! ([`contraction`]), boundary-crossing and sign checks ([`posteriori`]) and a
//! Floquet normal-form proof with spectral localization ([`floquet`]).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod contraction;
pub mod decimal;
pub mod error;
pub mod floquet;
pub mod interval;
pub mod model;
pub mod numerics;
pub mod pipeline;
pub mod polymat;
pub mod posteriori;
pub mod seqspace;
pub mod textfmt;
pub mod zero_problem;

pub use error::{Error, Result};
pub use interval::{pi, Interval, RectComplex};
pub use seqspace::{ChebSeq, FcArr, FcBall, FourierChebSeq, Prec, UVec};
