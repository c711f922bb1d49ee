//! Almost complex structures on products of momentum-map level sets.
//!
//! Given two Kähler manifolds carrying isometric actions of the same group `G`
//! with momentum maps `μ₁, μ₂`, the product `N₁ × N₂` of regular level sets
//! inherits an almost complex structure `J`: multiplication by `i` on the
//! horizontal spaces, and a quarter-turn exchanging the two vertical
//! (orbit) directions. This crate constructs `J` numerically and verifies:
//!
//! * `J² = −id`;
//! * vanishing of the Nijenhuis tensor exactly when `G` is abelian;
//! * holomorphy of the mixed torus action `Ψ` and its exact period lattice;
//! * chart maps and transition functions of the resulting principal bundle.
//!
//! Concrete instances live in [`gallery`]: Hopf circles on odd spheres,
//! `U(k)` on complex Stiefel manifolds, and torus subgroups of `U(k)`.

pub mod ambient;
pub mod campaign;
pub mod charts;
pub mod error;
pub mod gallery;
pub mod group;
pub mod holomorphy;
pub mod level;
pub mod linalg;
pub mod nijenhuis;
pub mod product;

pub use error::{GeometryError, Result};
