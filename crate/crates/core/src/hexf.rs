//! C99-style hexadecimal float encoding for bit-exact archival of `f64` values.
//!
//! `format` produces strings like `0x1.91eb851eb851fp-3`; `parse` inverts them.
//! Round trips are bit-exact, including negative zero, subnormals, and the
//! infinities. NaN round trips to a canonical quiet NaN.

use crate::error::{Error, Result};

/// Multiply by 2^e without going through `powi` (exact for all reachable results).
fn ldexp(x: f64, e: i32) -> f64 {
    let mut x = x;
    let mut e = e;
    while e > 1023 {
        x *= f64::from_bits(0x7FE0_0000_0000_0000); // 2^1023
        e -= 1023;
    }
    while e < -1022 {
        x *= f64::from_bits(0x0010_0000_0000_0000); // 2^-1022
        e += 1022;
    }
    x * f64::from_bits(((e + 1023) as u64) << 52)
}

pub fn format(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x < 0.0 { "-inf" } else { "inf" }.to_string();
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp_bits = ((bits >> 52) & 0x7FF) as i64;
    let frac = bits & 0x000F_FFFF_FFFF_FFFF;
    if exp_bits == 0 && frac == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if exp_bits == 0 {
        ('0', -1022i64) // subnormal
    } else {
        ('1', exp_bits - 1023)
    };
    // 52 fraction bits -> 13 hex digits, trailing zeros trimmed.
    let mut digits = format!("{frac:013x}");
    while digits.len() > 1 && digits.ends_with('0') {
        digits.pop();
    }
    if frac == 0 {
        format!("{sign}0x{lead}p{exp:+}")
    } else {
        format!("{sign}0x{lead}.{digits}p{exp:+}")
    }
}

pub fn parse(s: &str) -> Result<f64> {
    let s = s.trim();
    let (sign, body) = match s.as_bytes().first() {
        Some(b'-') => (-1.0, &s[1..]),
        Some(b'+') => (1.0, &s[1..]),
        _ => (1.0, s),
    };
    match body {
        "inf" | "infinity" => return Ok(sign * f64::INFINITY),
        "nan" => return Ok(f64::NAN),
        _ => {}
    }
    let body = body
        .strip_prefix("0x")
        .or_else(|| body.strip_prefix("0X"))
        .ok_or_else(|| Error::Parse(format!("hex float must start with 0x: {s:?}")))?;
    let p = body
        .find(['p', 'P'])
        .ok_or_else(|| Error::Parse(format!("hex float missing exponent: {s:?}")))?;
    let (mantissa, exp_str) = (&body[..p], &body[p + 1..]);
    let exp: i32 = exp_str
        .parse()
        .map_err(|_| Error::Parse(format!("bad hex-float exponent: {s:?}")))?;
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(dot) => (&mantissa[..dot], &mantissa[dot + 1..]),
        None => (mantissa, ""),
    };
    let mut m: u128 = 0;
    for ch in int_part.chars().chain(frac_part.chars()) {
        let d = ch
            .to_digit(16)
            .ok_or_else(|| Error::Parse(format!("bad hex digit in {s:?}")))?;
        m = m
            .checked_mul(16)
            .and_then(|v| v.checked_add(u128::from(d)))
            .ok_or_else(|| Error::Parse(format!("hex-float mantissa overflow: {s:?}")))?;
    }
    let scale = exp - 4 * frac_part.len() as i32;
    Ok(sign * ldexp(m as f64, scale))
}

/// Serde adapters: `#[serde(with = "hexf::serde_f64")]` and friends store
/// reals as hex-float strings but accept plain JSON numbers on input.
pub mod serde_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(t) => super::parse(&t).map_err(serde::de::Error::custom),
        }
    }
}

pub mod serde_vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&super::format(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        let raw = Vec::<Repr>::deserialize(d)?;
        raw.into_iter()
            .map(|r| match r {
                Repr::Num(x) => Ok(x),
                Repr::Str(t) => super::parse(&t).map_err(serde::de::Error::custom),
            })
            .collect()
    }
}

pub mod serde_mat {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(rows: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        struct Row<'a>(&'a [f64]);
        impl serde::Serialize for Row<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                super::serde_vec::serialize(self.0, s)
            }
        }
        let mut seq = s.serialize_seq(Some(rows.len()))?;
        for row in rows {
            seq.serialize_element(&Row(row))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        struct Row(Vec<f64>);
        impl<'de> Deserialize<'de> for Row {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                super::serde_vec::deserialize(d).map(Row)
            }
        }
        Ok(Vec::<Row>::deserialize(d)?.into_iter().map(|r| r.0).collect())
    }
}
