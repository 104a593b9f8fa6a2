//! Secrecy performance of a fluid-antenna (FAS) receiver pair behind a
//! reconfigurable intelligent surface (RIS).
//!
//! The crate has two independent routes to the same quantities:
//!
//! * [`analytics`]: the block-correlation / CLT approximation of the best-port
//!   gain distribution, with average secrecy capacity (ASC) and secrecy outage
//!   probability (SOP) evaluated by Gauss-Chebyshev quadrature.
//! * [`montecarlo`]: an exact channel simulator drawing correlated Rayleigh
//!   port channels and performing best-port selection trial by trial.
//!
//! [`experiment`] ties both together into parameter sweeps, a validation
//! battery and the block-fit report used by the `fasris` CLI.

pub mod analytics;
pub mod cascade;
pub mod config;
pub mod correlation;
pub mod error;
pub mod experiment;
pub mod montecarlo;
pub mod quadrature;
pub mod special;
pub mod stats;

pub use analytics::{DistributionEval, MaxGainDistribution, WiretapScenario};
pub use cascade::{GaussianApprox, LinkStats};
pub use config::{LatentMode, Receiver, SystemConfig};
pub use correlation::{BlockModel, CorrelationMatrix, PortGeometry};
pub use error::{Error, Result};
pub use montecarlo::{BestPortSample, EstimateWithCI, ScenarioKind, SimulationConfig};
pub use quadrature::{ChebyshevRule, QuadratureGrid};
