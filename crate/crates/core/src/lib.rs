// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod fft;
pub mod green;
pub mod malliavin;
pub mod noise;
pub mod params;
pub mod quad;
pub mod rng;
pub mod solver;
pub mod spectral_measure;

pub use error::{Error, Result};
pub use green::{GreenFunction, Operator, ScalingReport};
pub use noise::{GridSpec, Lattice, NoiseBatch};
pub use solver::{Coefficient, Coefficients, SolutionPath, Solver};
pub use spectral_measure::{CorrelationKernel, DalangReport, KernelFamily, Verdict};
