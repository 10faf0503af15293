//! Periodic Lorentz gas on `ℤ²` with disk scatterers: collision map,
//! self-intersection counts, ensemble estimators and the analytic constants
//! of the `V_n` asymptotics.
//!
//! The crate is `no_std` with `alloc`; file formats, threads and the CLI
//! live in `lorentz-lab`.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod constants;
pub mod dynamics;
pub mod estimators;
pub mod geometry;
pub mod quadrature;
pub mod real;
pub mod selfintersect;
pub mod special;
pub mod walk;

pub use dynamics::{Billiard, CollisionState, DynamicsError, HorizonMode, Init, Trajectory};
pub use estimators::{Band, DiffusionMatrix, EnsembleSummary, EstimatorError};
pub use geometry::{BilliardTable, Disk, FiniteHorizonReport, GeometryError};
pub use real::{Real, Vec2};
pub use selfintersect::{Site, VisitCounter};
pub use walk::{LazyLatticeWalk, SiteWalk, WalkSource};
