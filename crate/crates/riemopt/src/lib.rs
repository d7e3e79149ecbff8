//! Inexact implicit online learning and min-max optimization on Hadamard
//! manifolds.
//!
//! The crate is layered bottom-up:
//!
//! * [`geometry`] and [`manifolds`]: points, tangent vectors and the
//!   Euclidean, hyperbolic, SPD and product geometries.
//! * [`constraints`]: geodesic balls and products of them.
//! * [`oracle`] and [`subsolvers`]: objectives and the gradient methods that
//!   solve proximal subproblems to a certified relative accuracy.
//! * [`riod`]: the optimistic implicit online learner with regret accounting.
//! * [`rioda`]: the min-max driver built on four prox solves per round.
//! * [`karcher`]: the robust Karcher-mean benchmark.
//!
//! Parallelism is confined to [`exec`]; with the default `parallel` feature
//! the independent block solves of a min-max round and grid searches run on
//! rayon, otherwise everything runs on the calling thread with identical
//! results.

// Range checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constraints;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod karcher;
pub mod manifolds;
pub mod oracle;
pub mod riod;
pub mod rioda;
pub mod rng;
pub mod subsolvers;
pub mod suite;
pub mod trace;

pub mod prelude {
    pub use crate::constraints::{ConstraintSet, GeodesicBall};
    pub use crate::error::{Error, Result};
    pub use crate::exec::Execution;
    pub use crate::geometry::{zeta, CurvatureBounds, Manifold, Point, Tangent};
    pub use crate::manifolds::{
        EuclideanSpace, HyperbolicSpace, ManifoldSpec, ProductManifold, SpdManifold,
    };
    pub use crate::oracle::{Objective, SquaredDistance};
    pub use crate::subsolvers::{ProxMethod, StoppingRule, SubsolverReport};
}
