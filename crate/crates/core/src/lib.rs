//! Style transfer with a content transformation block, local feature
//! normalization and conditional adversarial training.

pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod lfn;
pub mod losses;
pub mod networks;
pub mod ops;
pub mod optim;
pub mod params;
pub mod scalar;
pub mod tape;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
pub use lfn::{LfnConfig, LfnMode, LfnParams};
pub use networks::{NetworkSpec, Networks};
pub use params::ParameterStore;
pub use scalar::Scalar;
pub use tape::{Bound, Gradients, Tape, Var};
pub use tensor::{Shape, Tensor};
