//! Number formatting shared by every writer: 17 significant digits, which
//! round-trips any `f64` exactly.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

/// Formats `x` with 17 significant digits. Plain decimal notation is used for
/// decimal exponents in `[-5, 16]`, scientific notation otherwise.
pub fn sig17(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if !(-5..=16).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let mut out = String::with_capacity(24);
    out.push_str(sign);
    if exp < 0 {
        out.push_str("0.");
        for _ in 0..(-exp - 1) {
            out.push('0');
        }
        out.push_str(&digits);
    } else {
        let int_len = exp as usize + 1;
        out.push_str(&digits[..int_len]);
        if int_len < digits.len() {
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    }
    out
}

/// Compact JSON formatter writing floats through [`sig17`].
#[derive(Debug, Default, Clone, Copy)]
pub struct Sig17Formatter;

impl Formatter for Sig17Formatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(sig17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serializes `value` as compact JSON with 17-significant-digit floats.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, Sig17Formatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig17_round_trips() {
        for &x in &[
            0.0,
            -0.0,
            1.0,
            0.1,
            -2.379_805_863_833_963_5,
            1e-7,
            6.02214076e23,
            123456.789,
            9.999_999_999_999_999,
            f64::MIN_POSITIVE,
            f64::MAX,
        ] {
            let s = sig17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} -> {s}");
        }
    }

    #[test]
    fn sig17_layouts() {
        assert_eq!(sig17(0.5), "0.50000000000000000");
        assert_eq!(sig17(2.0), "2.0000000000000000");
        assert_eq!(sig17(-0.001), "-0.0010000000000000000");
        assert_eq!(sig17(1e-7), "9.9999999999999995e-8");
    }

    #[test]
    fn json_uses_sig17() {
        #[derive(Serialize)]
        struct Row {
            x: f64,
            n: u32,
            bad: f64,
        }
        let s = to_json(&Row { x: 0.25, n: 3, bad: f64::NAN }).unwrap();
        assert_eq!(s, r#"{"x":0.25000000000000000,"n":3,"bad":null}"#);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["x"].as_f64(), Some(0.25));
    }
}
