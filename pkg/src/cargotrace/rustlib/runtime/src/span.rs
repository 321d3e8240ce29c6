//! Call spans: one enter event at construction, exactly one exit event per
//! dynamic call — `exit_normal_with` on the ordinary path, or the drop
//! guard during unwinding so the per-thread event sequence stays balanced
//! even when the traced function panics.

use std::cell::Cell;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;
use std::time::Instant;

use serde::Serialize;

use crate::capture::CapturedValue;
use crate::sink::{self, SinkHandle};
use crate::{DEFAULT_VALUE_CAP, VALUE_CAP_ENV};

static NEXT_THREAD: AtomicU64 = AtomicU64::new(1);
static CLOCK_ANCHOR: OnceLock<Instant> = OnceLock::new();
static VALUE_CAP: OnceLock<usize> = OnceLock::new();

thread_local! {
    static THREAD_ID: u64 = NEXT_THREAD.fetch_add(1, Ordering::Relaxed);
    static NEXT_CALL: Cell<u64> = const { Cell::new(1) };
}

fn thread_id() -> u64 {
    THREAD_ID.with(|id| *id)
}

fn monotonic_ns() -> u64 {
    let anchor = CLOCK_ANCHOR.get_or_init(Instant::now);
    anchor.elapsed().as_nanos() as u64
}

/// Per-value serialization cap, read once per process.
pub fn value_cap() -> usize {
    *VALUE_CAP.get_or_init(|| {
        std::env::var(VALUE_CAP_ENV)
            .ok()
            .and_then(|raw| raw.parse::<usize>().ok())
            .unwrap_or(DEFAULT_VALUE_CAP)
    })
}

#[derive(Serialize)]
struct Event<'a> {
    kind: &'static str,
    call_id: &'a str,
    thread_id: u64,
    seq: u64,
    function: &'a str,
    timestamp: u64,
    values: &'a [CapturedValue],
    #[serde(skip_serializing_if = "Option::is_none")]
    exit_status: Option<&'static str>,
}

/// Guard covering one dynamic call of an instrumented function.
pub struct CallSpan {
    state: Option<SpanState>,
}

struct SpanState {
    sink: SinkHandle,
    function: &'static str,
    thread: u64,
    call_id: String,
}

impl CallSpan {
    /// Emit the enter event and arm the exit guard. `args` is only invoked
    /// when the sink named by `sink_env` is configured; otherwise the span
    /// is inert and the instrumented function behaves as if untouched.
    pub fn enter_with<F>(function: &'static str, sink_env: &str, args: F) -> CallSpan
    where
        F: FnOnce(usize) -> Vec<CapturedValue>,
    {
        let Some(sink) = sink::resolve(sink_env) else {
            return CallSpan { state: None };
        };
        let thread = thread_id();
        let call = NEXT_CALL.with(|c| {
            let n = c.get();
            c.set(n + 1);
            n
        });
        let call_id = format!("t{}-c{}", thread, call);
        let values = args(value_cap());
        emit(&sink, "enter", &call_id, thread, function, &values, None);
        CallSpan {
            state: Some(SpanState {
                sink,
                function,
                thread,
                call_id,
            }),
        }
    }

    /// Emit the normal exit event carrying the captured return value and
    /// disarm the unwind guard. `ret` is only invoked when tracing is live.
    pub fn exit_normal_with<F>(&mut self, ret: F)
    where
        F: FnOnce(usize) -> CapturedValue,
    {
        if let Some(state) = self.state.take() {
            let values = [ret(value_cap())];
            emit(
                &state.sink,
                "exit",
                &state.call_id,
                state.thread,
                state.function,
                &values,
                Some("normal"),
            );
        }
    }
}

impl Drop for CallSpan {
    fn drop(&mut self) {
        // Still armed: the traced function is unwinding. No return value
        // exists, so the exit carries an empty value list.
        if let Some(state) = self.state.take() {
            emit(
                &state.sink,
                "exit",
                &state.call_id,
                state.thread,
                state.function,
                &[],
                Some("unwound"),
            );
        }
    }
}

fn emit(
    sink: &SinkHandle,
    kind: &'static str,
    call_id: &str,
    thread: u64,
    function: &str,
    values: &[CapturedValue],
    exit_status: Option<&'static str>,
) {
    sink.write_line(|seq| {
        let event = Event {
            kind,
            call_id,
            thread_id: thread,
            seq,
            function,
            timestamp: monotonic_ns(),
            values,
            exit_status,
        };
        serde_json::to_string(&event)
            .unwrap_or_else(|_| String::from("{\"kind\":\"malformed\"}"))
    });
}
