//! Shared serialization conventions for reports: floats carry 17 significant
//! digits, exact integers travel as decimal strings, and every JSON document
//! carries a `schema` version.

use num_bigint::BigInt;
use serde::Serializer;

pub const SCHEMA_VERSION: u32 = 1;

/// `x` with 17 significant digits in scientific notation, or `NaN`/`inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Serializes an `f64` as a JSON number with 17 significant digits
/// (`null` when not finite).
pub fn sig17<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return s.serialize_none();
    }
    let n: serde_json::Number = fmt_f64(*x)
        .parse()
        .expect("scientific notation is a valid JSON number");
    serde::Serialize::serialize(&n, s)
}

pub fn sig17_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => sig17(v, s),
        None => s.serialize_none(),
    }
}

pub fn sig17_vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&Sig17(*x))?;
    }
    seq.end()
}

/// Wrapper giving an `f64` the [`sig17`] representation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sig17(pub f64);

impl serde::Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        sig17(&self.0, s)
    }
}

pub fn decimal<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

pub fn decimal_vec<S: Serializer>(xs: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|x| x.to_string()))
}

pub fn decimal_opt<S: Serializer>(x: &Option<BigInt>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_str(&v.to_string()),
        None => s.serialize_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(serde::Serialize)]
    struct Row {
        #[serde(serialize_with = "sig17")]
        x: f64,
        #[serde(serialize_with = "decimal")]
        n: BigInt,
    }

    #[test]
    fn floats_have_seventeen_digits() {
        let json = serde_json::to_string(&Row {
            x: 1.0,
            n: BigInt::from(12345678901234567890u64),
        })
        .unwrap();
        assert_eq!(
            json,
            r#"{"x":1.0000000000000000e+0,"n":"12345678901234567890"}"#
        );
        assert_eq!(
            fmt_f64(2.0f64.log2() / 3.0f64.log2()).len(),
            "6.3092975357145742e-1".len()
        );
        let back: f64 = fmt_f64(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn non_finite_is_null() {
        let json = serde_json::to_string(&Sig17(f64::NAN)).unwrap();
        assert_eq!(json, "null");
    }
}
