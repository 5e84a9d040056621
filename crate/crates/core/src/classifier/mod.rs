//! Feedforward classifiers, the Gaussian noise model and the distortion objective.

mod adf;
mod distortion;
mod network;
mod noise;

pub use adf::{adf_forward, relu_moments, ReluMoments};
pub use distortion::{DistortionObjective, McEstimate, BOX_TOL};
pub use network::{Activation, FeedforwardNetwork, Layer};
pub use noise::{fit_gaussian, GaussianInputModel, STD_FLOOR};
