//! Pretty JSON output with every float written to six decimal places.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

struct FixedFormatter<'a> {
    pretty: PrettyFormatter<'a>,
}

impl FixedFormatter<'_> {
    fn write_fixed<W: ?Sized + io::Write>(writer: &mut W, value: f64) -> io::Result<()> {
        if !value.is_finite() {
            return writer.write_all(b"null");
        }
        let text = format!("{value:.6}");
        if text == "-0.000000" {
            writer.write_all(b"0.000000")
        } else {
            writer.write_all(text.as_bytes())
        }
    }
}

impl Formatter for FixedFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        Self::write_fixed(writer, value)
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        Self::write_fixed(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(writer)
    }
}

/// Serialize `value` as indented JSON with fixed six-decimal floats and a
/// trailing newline. Non-finite floats become `null`.
pub fn to_fixed_json<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut out,
        FixedFormatter {
            pretty: PrettyFormatter::with_indent(b"  "),
        },
    );
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

/// Serde adapter mapping an infinite TTC to `null` and back.
pub mod ttc {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            serializer.serialize_f64(*value)
        } else {
            serializer.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(deserializer)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_six_decimals() {
        let v = serde_json::json!({"a": 1.5, "b": [0.1, -1e-9, 2], "c": "x"});
        let text = String::from_utf8(to_fixed_json(&v).unwrap()).unwrap();
        assert!(text.contains("\"a\": 1.500000"), "{text}");
        assert!(text.contains("0.100000"), "{text}");
        assert!(text.contains("0.000000") && !text.contains("-0.000000"), "{text}");
        // Integers stay integers.
        assert!(text.contains("2\n") || text.contains("2,"), "{text}");
    }

    #[test]
    fn non_finite_is_null() {
        let text = String::from_utf8(to_fixed_json(&[f64::INFINITY]).unwrap()).unwrap();
        assert!(text.contains("null"));
    }
}
