//! Link-level simulator for coherent joint transmission (CJT) from two
//! transmission/reception points (TRxPs) with unequal analog fronthaul
//! delays.
//!
//! The chain is: resource grid and QAM mapping ([`numerology`]), OFDM and
//! optional digital IF ([`waveform`]), per-TRxP delay/gain paths and noise
//! ([`channel`]), carrier recovery, sync, ZF equalization and EVM
//! ([`rx_dsp`]), LSE estimation and delay measurement ([`estimation`]),
//! precoding and gain arithmetic ([`cjt_core`]), and scenario orchestration
//! ([`experiments`]).

pub mod error;
pub mod numerology;
pub mod waveform;
pub mod channel;
pub mod rx_dsp;
pub mod estimation;
pub mod cjt_core;
pub mod experiments;
pub mod cli;

pub use error::{Error, Result};
