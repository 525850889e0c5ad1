//! Unsupervised cardiac phase analysis and latent-space exploration.
//!
//! The phase pipeline takes the temporal codes `Φ` of one video, finds the
//! principal axis of frame-to-frame motion, projects every frame onto it,
//! removes baseline wander, smooths, and reports valleys as end-diastole and
//! peaks as end-systole.

mod export;
mod extrema;
mod signal;
mod walk;

pub use export::{heatmap_svg, log2_line_svg, matrix_csv, scatter_svg, signal_csv, signal_svg};
pub use extrema::{
    detect_extrema, detect_in_series, frame_mae, local_maxima, mirror_extend, prominences, prominent_peaks,
    std_dev, PhaseDetection, DEFAULT_PROMINENCE_FRAC,
};
pub use signal::{
    cosine_similarity_matrix, default_detrend_window, extract_signal, motion_directions, moving_average_detrend,
    pearson, savgol_coefficients, savgol_filter, MotionDirections, Orientation, PhaseSignal, SignalOptions,
    MIN_STEP_NORM,
};
pub use walk::{latent_walk, spearman, LatentWalk, WalkOptions};
