//! Speech emotion recognition with a source/filter split and two spiking
//! reservoirs.
//!
//! The pipeline runs LP analysis on each utterance, turns the residual and
//! the all-pole envelopes into ERB-spaced log maps, drives one liquid state
//! machine per map, and classifies the mean firing rates with PCA + LDA.

pub mod audio;
pub mod frontend;
pub mod lp;
pub mod pipeline;
pub mod readout;
pub mod reservoir;
