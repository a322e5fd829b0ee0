//! Variational quantum dynamics of a 1D wavefunction parameterized by a tiny
//! complex-valued neural network.
//!
//! The wavefunction's log-amplitude is a 1–h–1 sigmoid network with complex
//! weights, sampled on a fixed spatial grid. Projecting the Schrödinger
//! equation onto the tangent space of that ansatz (the time-dependent
//! variational principle) turns quantum dynamics into an ODE for the network
//! parameters: imaginary time relaxes to ground states, real time propagates
//! quench dynamics. Everything is validated against closed-form
//! harmonic-oscillator solutions.
//!
//! ```
//! use tdnqs::prelude::*;
//!
//! let net = Network::default_shape();
//! let grid = Grid::default_grid();
//! let ham = Hamiltonian::new(1.0, 1.0);
//! let theta0 = net.init(174);
//! let gs = ground_state(
//!     &net,
//!     AmplitudeMap::ExpOfF,
//!     &ham,
//!     &grid,
//!     &theta0.view(),
//!     &GsOptions::default(),
//! )
//! .unwrap();
//! assert!((gs.energy - 0.5).abs() < 1e-6);
//! ```

pub mod ansatz;
pub mod book;
pub mod error;
pub mod integrate;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod tdvp;

/// The commonly used names in one import.
pub mod prelude {
    pub use crate::ansatz::Network;
    pub use crate::error::{Error, Result};
    pub use crate::integrate::{
        evolve, evolve_observed, ground_state, ground_state_observed, rk4_step, EvolveOptions,
        Evolution, GsOptions, GsRun, TrajPoint,
    };
    pub use crate::model::{
        density, local_energy, observables, sample, AmplitudeMap, Grid, Hamiltonian, Observables,
        Sampled,
    };
    pub use crate::tdvp::{equation_of_motion, forces, qgt, EomOutput, EvolutionMode};
}
