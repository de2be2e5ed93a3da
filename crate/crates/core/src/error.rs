use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("FFT size {0} is not a power of two")]
    FftSizeNotPowerOfTwo(usize),

    #[error("{n_subcarriers} active subcarriers do not fit an FFT of size {fft_size} (DC and guard bins required)")]
    AllocationExceedsFft { n_subcarriers: usize, fft_size: usize },

    #[error("bit count {len} is not a multiple of {bits_per_symbol} bits per symbol")]
    MisalignedBits { len: usize, bits_per_symbol: usize },

    #[error("payload of {got} bits does not match the grid data capacity of {expected} bits")]
    PayloadSize { expected: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("symbol window {start}..{end} is outside a signal of {len} samples")]
    OutOfRange { start: usize, end: usize, len: usize },

    #[error("intermediate frequency {if_hz} Hz must lie in (0, {nyquist_hz}) Hz")]
    Aliasing { if_hz: f64, nyquist_hz: f64 },

    #[error("sampling rates differ: {0} Hz vs {1} Hz")]
    SampleRateMismatch(f64, f64),

    #[error("carrier loop failed to lock (residual frequency error {residual_hz:.1} Hz)")]
    NoLock { residual_hz: f64 },

    #[error("time synchronization failed: peak-to-sidelobe ratio {psr:.1} below {threshold:.1}")]
    SyncFailure { psr: f64, threshold: f64 },

    #[error("singular value: {what} at index {index}")]
    Singular { what: &'static str, index: usize },

    #[error("no cells selected for measurement")]
    EmptyCells,

    #[error("noise calibration did not converge after {iterations} iterations (last EVM {last_evm_pct:.3}%)")]
    NonConvergence { iterations: usize, last_evm_pct: f64 },

    #[error("all {trials} trials failed; first error: {first}")]
    AllTrialsFailed { trials: usize, first: String },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
