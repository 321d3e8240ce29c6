//! Hybrid value capture.
//!
//! `(&Capture(&value)).capture_value(cap)` resolves at compile time to the
//! serializing implementation when the value's type implements
//! `serde::Serialize`, and otherwise falls back (via one extra autoref
//! step) to a placeholder that records the static type name. Either way
//! the enclosing crate compiles without any annotation on its types.

use std::any::type_name;

use serde::Serialize;
use serde_json::value::RawValue;

/// One captured parameter or return value, ready for JSON embedding.
#[derive(Serialize)]
pub struct CapturedValue {
    pub mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json_value: Option<Box<RawValue>>,
    pub type_name: String,
    pub truncated: bool,
}

impl CapturedValue {
    pub fn placeholder(type_name: String) -> CapturedValue {
        CapturedValue {
            mode: "placeholder",
            json_value: None,
            type_name,
            truncated: false,
        }
    }

    fn json(rendering: String, type_name: String, cap: usize) -> CapturedValue {
        if rendering.len() <= cap {
            match RawValue::from_string(rendering) {
                Ok(raw) => CapturedValue {
                    mode: "json",
                    json_value: Some(raw),
                    type_name,
                    truncated: false,
                },
                Err(_) => CapturedValue::placeholder(format!("{type_name} (serialization failed)")),
            }
        } else {
            // Keep a prefix of the rendering, stored as a JSON string so the
            // emitted document stays valid. The prefix itself never exceeds
            // the cap; boundary trimmed to a full UTF-8 character.
            let mut end = cap;
            while end > 0 && !rendering.is_char_boundary(end) {
                end -= 1;
            }
            let quoted = serde_json::to_string(&rendering[..end])
                .unwrap_or_else(|_| "\"<unrepresentable>\"".to_string());
            match RawValue::from_string(quoted) {
                Ok(raw) => CapturedValue {
                    mode: "json",
                    json_value: Some(raw),
                    type_name,
                    truncated: true,
                },
                Err(_) => CapturedValue::placeholder(format!("{type_name} (serialization failed)")),
            }
        }
    }
}

/// Ephemeral read-only view of a value about to be captured.
pub struct Capture<'a, T: ?Sized>(pub &'a T);

/// Preferred implementation: serialize to JSON, truncating at the cap.
pub trait SerializeCapture {
    fn capture_value(&self, cap: usize) -> CapturedValue;
}

impl<'a, T: Serialize + ?Sized> SerializeCapture for Capture<'a, T> {
    fn capture_value(&self, cap: usize) -> CapturedValue {
        let name = type_name::<T>().to_string();
        match serde_json::to_string(self.0) {
            Ok(rendering) => CapturedValue::json(rendering, name, cap),
            Err(_) => CapturedValue::placeholder(format!("{name} (serialization failed)")),
        }
    }
}

/// Fallback for types without a serialization capability.
pub trait FallbackCapture {
    fn capture_value(&self, cap: usize) -> CapturedValue;
}

impl<'a, T: ?Sized> FallbackCapture for &Capture<'a, T> {
    fn capture_value(&self, _cap: usize) -> CapturedValue {
        CapturedValue::placeholder(type_name::<T>().to_string())
    }
}

// Note: the unit type serializes as JSON `null` with type_name "()" through
// the generic path above, which is the explicit unit marker the report
// format documents; exits never omit the value field for unit returns.
