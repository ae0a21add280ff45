//! Bit-exact simulation of a temporal neural network for online learning.
//!
//! The front end is a hierarchy of clustering columns built from ramp
//! integrate-and-fire neurons with winner-take-all inhibition, trained
//! online by a local STDP rule. The back end is a supervised decoder of
//! per-column voters and a tally block. All state is low-precision
//! integer arithmetic, so every run is reproducible bit for bit.

pub mod column;
pub mod decode;
pub mod encode;
pub mod fixed;
pub mod metrics;
pub mod network;
pub mod neuron;
pub mod time;

pub use column::{Cid, Column, ColumnParams, StdpGate};
pub use decode::{LabelVolley, Prediction, VoterBank, VoterParams};
pub use fixed::{FixedWeight, Fraction, WeightFormat};
pub use network::{Network, NetworkConfig, StepResult};
pub use neuron::NeuronModel;
pub use time::{SpikeTime, Volley};
