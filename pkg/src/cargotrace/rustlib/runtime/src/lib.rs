//! Tracing runtime linked into crates under trace.
//!
//! Instrumented functions (rewritten by the `traced` attribute) call into
//! this crate to emit one line-delimited JSON event per function entry and
//! exit. The sink file is named by an environment variable; when the
//! variable is unset every call is a no-op so an instrumented binary
//! behaves exactly like the uninstrumented one.

pub mod capture;
mod sink;
mod span;

pub use capture::{Capture, CapturedValue, FallbackCapture, SerializeCapture};
pub use cargotrace_macros::traced;
pub use span::CallSpan;

/// Default environment variable naming the event sink file.
pub const DEFAULT_SINK_ENV: &str = "CARGOTRACE_SINK";
/// Environment variable overriding the per-value serialization cap (bytes).
pub const VALUE_CAP_ENV: &str = "CARGOTRACE_VALUE_CAP";
/// Cap applied to each captured value's JSON rendering when the override is unset.
pub const DEFAULT_VALUE_CAP: usize = 4096;
