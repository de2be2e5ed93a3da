//! Receiver: carrier recovery, burst synchronisation, zero-forcing
//! equalization and EVM.

mod costas;
mod equalizer;
mod evm;
mod sync;

pub use costas::{costas_recover, CarrierRecovery, CostasLoopConfig};
pub use equalizer::{compute_zf_coefficients, compute_zf_coefficients_with, equalize, EqualizerCoefficients, EqualizerConfig};
pub use evm::{evm_pct_from_snr_db, measure_evm, snr_db_from_evm, EvmReport};
pub use sync::{time_sync, time_sync_with_threshold, SyncResult, DEFAULT_PSR_THRESHOLD};
