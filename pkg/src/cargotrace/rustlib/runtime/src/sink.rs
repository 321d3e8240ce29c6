//! Append-only line-delimited JSON event sink.
//!
//! One sink per environment variable name, resolved once per process. The
//! per-event sequence number is assigned while holding the sink lock so
//! `seq` is strictly increasing in file order even under thread
//! concurrency. Write failures are reported once to stderr and then
//! swallowed: tracing must never change the traced program's outcome.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

pub struct SinkFile {
    file: Mutex<(File, u64)>, // handle + next seq for this sink
}

pub type SinkHandle = Arc<SinkFile>;

static REGISTRY: OnceLock<Mutex<HashMap<String, Option<SinkHandle>>>> = OnceLock::new();
static WRITE_FAILED: AtomicBool = AtomicBool::new(false);

/// Resolve the sink for `env_var`, opening it on first use. `None` when the
/// variable is unset or the file cannot be opened (tracing disabled).
pub fn resolve(env_var: &str) -> Option<SinkHandle> {
    let registry = REGISTRY.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = match registry.lock() {
        Ok(g) => g,
        Err(poisoned) => poisoned.into_inner(),
    };
    if let Some(cached) = map.get(env_var) {
        return cached.clone();
    }
    let opened = std::env::var_os(env_var).and_then(|path| {
        match OpenOptions::new().create(true).append(true).open(&path) {
            Ok(file) => Some(Arc::new(SinkFile {
                file: Mutex::new((file, 0)),
            })),
            Err(err) => {
                warn_once(&format!(
                    "cargotrace: cannot open trace sink {:?}: {}",
                    path, err
                ));
                None
            }
        }
    });
    map.insert(env_var.to_string(), opened.clone());
    opened
}

impl SinkFile {
    /// Append one event line. `render` receives the seq number assigned to
    /// this event and must return a full JSON object without the newline.
    pub fn write_line<F: FnOnce(u64) -> String>(&self, render: F) {
        let mut guard = match self.file.lock() {
            Ok(g) => g,
            Err(poisoned) => poisoned.into_inner(),
        };
        let seq = guard.1;
        guard.1 += 1;
        let mut line = render(seq);
        line.push('\n');
        if let Err(err) = guard.0.write_all(line.as_bytes()) {
            warn_once(&format!("cargotrace: trace sink write failed: {}", err));
        }
    }
}

fn warn_once(message: &str) {
    if !WRITE_FAILED.swap(true, Ordering::Relaxed) {
        eprintln!("{}", message);
    }
}
