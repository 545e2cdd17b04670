//! Number formatting for CSV and JSON output.

use std::io::{self, Write};

use dcopula::pmf::format_g17;
use ndarray::Array2;
use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};
use serde_json::Value;

/// Full precision by default, six significant digits with `--pretty`.
pub fn number(v: f64, pretty: bool) -> String {
    if !pretty || !v.is_finite() {
        return format_g17(v);
    }
    let rounded: f64 = format!("{v:.5e}").parse().unwrap_or(v);
    if rounded != 0.0 && !(1e-4..1e15).contains(&rounded.abs()) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

pub fn csv(values: &Array2<f64>, pretty: bool) -> String {
    let mut out = String::new();
    for row in values.outer_iter() {
        let cells: Vec<String> = row.iter().map(|&v| number(v, pretty)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// JSON formatter that writes floats through [`number`].
struct Numbers<F> {
    inner: F,
    pretty: bool,
}

macro_rules! forward {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(
            fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.inner.$name(w $(, $arg)*)
            }
        )*
    };
}

impl<F: Formatter> Formatter for Numbers<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(number(value, self.pretty).as_bytes())
    }

    forward!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        end_object_key(),
        begin_object_value(),
        end_object_value(),
    );
}

/// Serializes `value`, indented when `pretty`.
pub fn json(value: &Value, pretty: bool) -> String {
    let mut buf = Vec::new();
    let result = if pretty {
        let fmt = Numbers { inner: PrettyFormatter::new(), pretty };
        value.serialize(&mut serde_json::Serializer::with_formatter(&mut buf, fmt))
    } else {
        let fmt = Numbers { inner: CompactFormatter, pretty };
        value.serialize(&mut serde_json::Serializer::with_formatter(&mut buf, fmt))
    };
    result.expect("serializing a JSON value into memory cannot fail");
    let mut s = String::from_utf8(buf).expect("JSON output is UTF-8");
    s.push('\n');
    s
}
