//! A small convolutional-network framework with hand-written backward passes,
//! and the experiment harness built on it: synthetic diagram generation,
//! backbone pre-training, frozen-backbone transfer, sample-size sweeps, and
//! class activation maps.

pub mod cam;
pub mod data;
pub mod error;
pub mod experiment;
pub mod imageio;
pub mod kernels;
pub mod manifest;
pub mod models;
pub mod nn;
pub mod optim;
pub mod rng;
pub mod split;
pub mod synth;
pub mod tensor;
pub mod train;
pub mod transfer;

pub use error::{Error, Result};
pub use models::{ArchId, ArchSpec, FreezePolicy, Model, ParamCount, Snapshot, WidthMult};
pub use rng::SeededRng;
pub use tensor::{Scalar, Tensor};
