//! Line-of-sight blockage modeling for UAV-to-UAV links flying over a
//! built-up patch.
//!
//! * [`scene`] builds synthetic patches from the ITU (α, β, γ) description.
//! * [`los`] tests links against building prisms exactly.
//! * [`analytic`] evaluates the closed-form average LOS probability.
//! * [`markov`] fits the two-state LOS/NLOS distance Markov model.
//! * [`experiments`] runs Monte Carlo cross-checks and height sweeps.
//! * [`config`] and [`io`] cover the run configuration and CSV formats.

pub mod analytic;
pub mod config;
pub mod error;
pub mod experiments;
mod index;
pub mod io;
pub mod los;
pub mod markov;
pub mod quad;
pub mod rng;
pub mod scene;

pub use analytic::{DistanceMoments, HeightPair, MomentMode, PdfChoice};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use experiments::{MarkovFit, McEstimate, SweepConfig, SweepRow, SweepTable};
pub use los::{Link, Point3};
pub use markov::{LinkState, MarkovRates, StateTrace, TransitionEstimate};
pub use scene::{Building, ItuParams, UrbanScene};
