//! Simulation-and-verification laboratory for ancestor-counting statistics
//! `N_n(k)`, `N_{n,r}(k)` in random fragmentation trees.
//!
//! The crate is organized bottom-up:
//!
//! * [`special`] — scalar special functions (log-gamma, digamma, zeta, the
//!   analytically continued Beta function).
//! * [`quad`] — tanh–sinh and adaptive Gauss–Kronrod quadrature.
//! * [`model`] — the dislocation-measure families (Dirichlet-binary, Ford
//!   alpha, stable, Beta-type) and their basic scalars γ, c_ν.
//! * [`theory`] — every closed-form constant the limit theorems reference:
//!   Laplace exponent φ, φ′(0+), C^sub, C^cr, E\[X_k\], E\[A_k\], regime
//!   classification, f_k, and Ford's potential density.
//! * [`tree`] — rooted arena trees, O(1) LCA via Euler tour + block
//!   range-min, and the ancestor-counting statistics on a fixed tree.
//! * [`generate`] — samplers of the random tree models (Rémy, Ford,
//!   beta-splitting, conditioned Galton–Watson) and the lazy fragmentation
//!   cascade that produces ancestor statistics without materializing a tree.
//! * [`urn`] — Karlin occupancy engine: infinite-urn sampling, the urn
//!   distribution function S_x, and exact expectation oracles.
//! * [`subordinator`] — tagged-fragment subordinator Monte Carlo: leaf
//!   depth, the area functional A_k, and the urn-expectation function g_k.
//! * [`harness`] — experiment orchestration: reproducible replica streams,
//!   scaling fits, multiplicity-ratio reports, CSV emission, self-test.

pub mod generate;
pub mod harness;
pub mod model;
pub mod quad;
pub mod special;
pub mod subordinator;
pub mod theory;
pub mod tree;
pub mod urn;

pub use harness::{
    ExperimentConfig, FitResult, RunRow, SelftestReport, TreeModel, UrnExperimentConfig,
};
pub use model::{DislocationModel, Family};
pub use subordinator::{MonteCarloEstimate, SubordinatorPath, TaggedJumpSampler};
pub use theory::{Limit, Regime, RegimePrediction};
pub use tree::{AncestorStats, LeafGrouping, Tree};

/// Crate-wide error type.
///
/// The CLI maps these onto process exit codes: domain/usage problems that
/// clap cannot catch map to exit 1, everything else (numeric failures,
/// guards) to exit 2.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Argument outside an operation's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Parent array does not encode a single rooted tree.
    #[error("invalid tree: {0}")]
    InvalidTree(String),

    /// Quadrature failed to reach the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    QuadratureNonconvergence(String),

    /// A series evaluation failed to converge.
    #[error("series did not converge: {0}")]
    SeriesNonconvergence(String),

    /// Parameter combination where a closed form degenerates
    /// (e.g. the Ford potential-density connection formula near a = 1/2).
    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),

    /// The cascade recursion guard tripped (model misconfiguration).
    #[error("recursion depth guard exceeded ({0} levels)")]
    DepthGuard(usize),

    /// Rejection sampling exhausted its retry budget.
    #[error("rejection budget exhausted after {0} attempts")]
    RejectionBudget(usize),

    /// Operation needs an explicit binary dislocation density the model
    /// does not have (stable β < 2 is not binary).
    #[error("no explicit binary density: {0}")]
    DensityUnavailable(String),

    /// Urn law truncation is inadequate for the requested draw count.
    #[error("urn truncation inadequate: {0}")]
    TruncationInadequate(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
