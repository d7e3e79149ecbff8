//! Concrete Hadamard manifolds.

mod euclidean;
mod hyperbolic;
pub mod linalg;
mod product;
mod spd;

use std::sync::Arc;

pub use euclidean::EuclideanSpace;
pub use hyperbolic::{minkowski, HyperbolicSpace};
pub use product::ProductManifold;
pub use spd::SpdManifold;

use crate::error::{Error, Result};
use crate::geometry::Manifold;

/// Kind and size of a base manifold, as written on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ManifoldSpec {
    Euclidean(usize),
    Hyperbolic(usize),
    Spd(usize),
}

impl ManifoldSpec {
    pub fn build(&self) -> Arc<dyn Manifold> {
        match *self {
            ManifoldSpec::Euclidean(d) => Arc::new(EuclideanSpace::new(d)),
            ManifoldSpec::Hyperbolic(d) => Arc::new(HyperbolicSpace::new(d)),
            ManifoldSpec::Spd(n) => Arc::new(SpdManifold::new(n)),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ManifoldSpec::Euclidean(_) => "euclidean",
            ManifoldSpec::Hyperbolic(_) => "hyperbolic",
            ManifoldSpec::Spd(_) => "spd",
        }
    }

    pub fn size(&self) -> usize {
        match *self {
            ManifoldSpec::Euclidean(d) | ManifoldSpec::Hyperbolic(d) | ManifoldSpec::Spd(d) => d,
        }
    }
}

impl std::fmt::Display for ManifoldSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.kind(), self.size())
    }
}

impl std::str::FromStr for ManifoldSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, size) = s
            .split_once(':')
            .ok_or_else(|| Error::Domain(format!("manifold `{s}` is not of the form kind:dim")))?;
        let size: usize = size
            .trim()
            .parse()
            .map_err(|_| Error::Domain(format!("manifold dimension `{size}` is not an integer")))?;
        if size == 0 {
            return Err(Error::Domain("manifold dimension must be positive".into()));
        }
        match kind.trim() {
            "euclidean" => Ok(ManifoldSpec::Euclidean(size)),
            "hyperbolic" => Ok(ManifoldSpec::Hyperbolic(size)),
            "spd" => Ok(ManifoldSpec::Spd(size)),
            other => Err(Error::Domain(format!(
                "unknown manifold kind `{other}` (expected euclidean, hyperbolic or spd)"
            ))),
        }
    }
}
