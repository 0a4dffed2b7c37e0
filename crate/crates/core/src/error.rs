use thiserror::Error;

/// Errors raised anywhere in the analytic or oracle paths.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the operation.
    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// An adaptive series (or block range) hit its hard cap before the stop rule fired.
    #[error("{context}: no convergence after {terms} terms (last term {last_term:e}, partial sum {partial_sum:e})")]
    Convergence {
        context: String,
        terms: usize,
        last_term: f64,
        partial_sum: f64,
    },

    /// The Fock cutoff cannot hold the requested tail tolerance.
    #[error("cutoff n_max = {n_max} leaves norm deficit {achieved:e}, above the requested tail tolerance {requested:e}")]
    Truncation {
        n_max: usize,
        achieved: f64,
        requested: f64,
    },

    /// A conditioned branch has (numerically) zero probability.
    #[error("heralding probability {probability:e} is below the floor {floor:e}")]
    EmptyBranch { probability: f64, floor: f64 },

    /// A density matrix has coherences outside the photon-number-correlated family.
    #[error("off-block mass {mass:e} of the partial transpose exceeds {tol:e}")]
    Structure { mass: f64, tol: f64 },

    /// A block fails the symmetry (or double symmetry) precondition.
    #[error("block K = {k} deviates from {property} by {deviation:e} (tolerance {tol:e})")]
    Symmetry {
        k: usize,
        property: &'static str,
        deviation: f64,
        tol: f64,
    },

    #[error("outcome {outcome} is not a valid label for a {detector} detector")]
    InvalidOutcome { outcome: String, detector: String },

    /// A quantity with no meaning at the given point (e.g. a conditional state at λ = 0).
    #[error("{quantity} is undefined: {reason}")]
    Undefined {
        quantity: &'static str,
        reason: &'static str,
    },

    #[error("{0} is not available on the analytic path")]
    Unsupported(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// The distillation gain never changes sign on the scanned transmittance range.
    #[error("no distillation window for λ = {lambda}, η = {eta}: {detail}")]
    NoDistillationWindow {
        lambda: f64,
        eta: f64,
        detail: String,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures caused by series convergence or Fock truncation.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Convergence { .. } | Error::Truncation { .. })
    }

    /// True for failures caused by bad user input.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::InvalidOutcome { .. }
                | Error::InvalidSpec(_)
                | Error::Unsupported(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    domain: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            domain,
        })
    }
}
