//! Baseband simulation library for two multicarrier waveforms: the
//! staggered filter-bank waveform (FBMC-OQAM) and cyclic-prefix OFDM.
//!
//! The crate builds complete transmit/receive chains around them:
//! Gray-mapped QAM symbols on a time-frequency grid, synthesis through
//! either modulator, multipath fading with optional mobility, additive
//! noise and synchronization impairments, then preamble-based or genie
//! channel estimation, one-tap equalization, and per-subcarrier
//! MSE/BER/PSD metrics. [`run_chain`] drives the whole pipeline from a
//! parsed [`RunConfig`] and aggregates Monte-Carlo trials
//! deterministically: every random draw derives from the configured
//! seed, so identical configurations reproduce identical reports.
//!
//! The modules mirror the chain order: [`symbols`] makes the payload,
//! [`prototype`]/[`fbmc`]/[`ofdm`] turn grids into sample streams,
//! [`channel`] distorts them, [`receiver`] undoes what it can, and
//! [`metrics`] measures what is left.

pub mod chain;
pub mod channel;
pub mod error;
pub mod fbmc;
pub mod metrics;
pub mod ofdm;
pub mod params;
pub mod prototype;
pub mod receiver;
pub mod seeds;
pub mod stream;
pub mod symbols;

pub use chain::{run_chain, transmit_stream};
pub use channel::{ChannelRealization, PowerDelayProfile};
pub use error::{Error, Result};
pub use metrics::{MetricReport, ReportFiles};
pub use params::{
    ChainParameters, ChannelMode, EstimationMethod, RunConfig, SyncMode, Waveform,
};
pub use prototype::PrototypeFilter;
pub use receiver::ChannelEstimate;
pub use stream::SampleStream;
pub use symbols::{ComplexGrid, Grid, RealGrid, SymbolGrid};
