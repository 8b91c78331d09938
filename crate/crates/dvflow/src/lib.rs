//! Discrete exterior calculus for incompressible flow on Delaunay-Voronoi
//! complexes.
//!
//! Velocities are 1-cochains on the circumcentric dual. The modules build
//! the complex ([`mesh`]), assemble Hodge stars and dual coboundaries
//! ([`dec`]), reconstruct pointwise velocities and the extrusion operator
//! ([`recon`]), project onto discretely divergence-free fields and recover
//! the pressure ([`leray`]), integrate the Euler and Navier-Stokes systems
//! ([`dynamics`]) and verify rates against exact solutions ([`verify`]).
//!
//! ```
//! use dvflow::dynamics::{FlowContext, FlowState, Stepper, Viscosity};
//! use dvflow::mesh::{build_torus_mesh, Family};
//! use dvflow::recon::Extrusion;
//! use dvflow::verify::{interpolate, Reference};
//! use std::sync::Arc;
//!
//! let mesh = Arc::new(build_torus_mesh(8, Family::Perturbed, 0.15, 1)?);
//! let ctx = FlowContext::new(mesh, Extrusion::DualCell)?;
//! let r = Reference::taylor_green_2d(0.0)?;
//! let v0 = ctx.leray.project_force(interpolate(ctx.mesh(), &r, 0.0))?;
//! let s = ctx.run(&FlowState::new(v0.clone()), 0.05, 4, &Viscosity::None, 1e-13, Stepper::ImplicitMidpoint)?;
//! assert!((ctx.energy(&s.v) - ctx.energy(&v0)).abs() < 1e-12 * ctx.energy(&v0));
//! # Ok::<(), dvflow::Error>(())
//! ```

pub mod dec;
pub mod dynamics;
pub mod error;
pub mod geom;
pub mod helicity;
pub mod invariants;
pub mod io;
pub mod leray;
pub mod mesh;
pub mod recon;
pub mod sparse;
pub mod spectral;
pub mod verify;
pub use error::{Error, Result};

/// Scalar type of every cochain and measure.
pub type Real = f64;
