//! Coincidence histograms and the data-reduction fits.

mod blinking;
mod decay;
mod g2;
mod histogram;
mod lm;
mod visibility;

pub use blinking::{fit_blinking_offset, window_sum, BlinkingFit, WindowSum};
pub use decay::{fit_exponential, fit_power_law, ExponentialFit, PowerLawFit};
pub use g2::{g2_zero, window_mean, WindowMean};
pub use histogram::{cross_histogram, normalize_histogram, CoincidenceHistogram};
pub use visibility::{chsh_check, fit_visibility, visibility_vs_window, ChshCheck, VisibilityFit, WindowVisibility};

/// Default coincidence bin width (ps).
pub const DEFAULT_BIN_WIDTH: u64 = 8;
/// Default post-selection window (ps).
pub const DEFAULT_WINDOW: (f64, f64) = (8.0, 1200.0);
