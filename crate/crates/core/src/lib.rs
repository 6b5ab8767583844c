//! Exact symbolic engine for genus-0 permutation-equivariant quantum K-theory of a point.

pub mod config;
pub mod error;
pub mod expand;
pub mod identities;
pub mod lambda;
pub mod loopspace;
pub mod novikov;
pub mod qfun;
pub mod qk_point;
pub mod ring;
pub mod scalars;
pub mod toyk;

pub use error::{EngineError, Result};
pub use lambda::{LambdaElement, LambdaGenerator, Monomial};
pub use scalars::{Cyclotomic, Rational};
