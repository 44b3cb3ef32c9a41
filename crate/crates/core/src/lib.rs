//! Remote phase sensing with a coherently delocalized single-photon addition.
//!
//! Two identical coherent states `|alpha>|alpha>` receive one photon in the
//! superposition `a1^dag + e^{i phi} a2^dag`, where the remote phase `phi` is
//! set in a distant heralding interferometer. Homodyne measurements of the
//! observable `p1 - p2` on the heralded modes reveal `phi`.
//!
//! - [`fock`]: brute-force truncated Fock-space states, loss channel and
//!   partial-transpose negativity.
//! - [`moments`]: closed-form first and second quadrature moments.
//! - [`metrology`]: optimal linear observable, QFI, entanglement, herald rate.
//! - [`noise`]: preparation/detection efficiencies and lossy closed forms.
//! - [`sampler`]: exact Monte Carlo quadrature records.
//! - [`estimator`]: calibration-curve inversion and bootstrap errors.
//! - [`cli`]: configuration and the commands behind the `herald-sense` binary.
//!
//! Quadratures follow the half convention `q(theta) = (a e^{-i theta} +
//! a^dag e^{i theta}) / 2` with vacuum variance `1/4`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimator;
pub mod fock;
pub mod interp;
pub mod metrology;
pub mod moments;
pub mod noise;
pub mod sampler;

pub use error::{Error, ErrorKind, Result};
pub use fock::{FockCutoff, Mode, Operator, TwoModeDensityMatrix, TwoModeState};
pub use metrology::{ObservableCoefficients, SensitivityReport};
pub use moments::{HeraldedStateSpec, MomentSet};
pub use noise::{EfficiencyPair, EmpiricalEtaP};
pub use sampler::{QuadratureRecord, SamplerConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
