//! Actor-behavior-enriched forecasting of daily process throughput time.
//!
//! The pipeline reads an event log, labels every consecutive same-case event
//! pair with an actor behavior (continuation, interruption, handover to an
//! idle or busy actor), aggregates daily throughput-time and behavior series,
//! engineers lag/rolling features, and forecasts the next day's smoothed
//! change in throughput time with boosted regression trees and simple
//! benchmarks.

pub mod behavior;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod event_log;
pub mod features;
pub mod models;
pub mod pipeline;
pub mod rng;
pub mod synthetic;
pub mod timeseries;

pub use error::{Error, Result};
