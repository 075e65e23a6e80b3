use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A metric value that may be a tagged infinity. Serialized as a JSON number,
/// or as the strings `"+inf"` / `"-inf"`; never NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricValue {
    Finite(f64),
    PosInf,
    NegInf,
}

impl MetricValue {
    /// `num / den` under the zero-denominator convention:
    /// `0/0 → 0`, `+x/0 → +inf`, `-x/0 → -inf`.
    pub fn from_ratio(num: f64, den: f64) -> Self {
        if den == 0.0 {
            if num > 0.0 {
                MetricValue::PosInf
            } else if num < 0.0 {
                MetricValue::NegInf
            } else {
                MetricValue::Finite(0.0)
            }
        } else {
            MetricValue::Finite(num / den)
        }
    }

    pub fn from_f64(v: f64) -> Option<Self> {
        if v.is_nan() {
            None
        } else if v == f64::INFINITY {
            Some(MetricValue::PosInf)
        } else if v == f64::NEG_INFINITY {
            Some(MetricValue::NegInf)
        } else {
            Some(MetricValue::Finite(v))
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            MetricValue::Finite(v) => v,
            MetricValue::PosInf => f64::INFINITY,
            MetricValue::NegInf => f64::NEG_INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, MetricValue::Finite(_))
    }
}

impl fmt::Display for MetricValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricValue::Finite(v) => write!(f, "{v}"),
            MetricValue::PosInf => f.write_str("+inf"),
            MetricValue::NegInf => f.write_str("-inf"),
        }
    }
}

impl Serialize for MetricValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            MetricValue::Finite(v) => s.serialize_f64(*v),
            MetricValue::PosInf => s.serialize_str("+inf"),
            MetricValue::NegInf => s.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for MetricValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = MetricValue;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or \"+inf\"/\"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<MetricValue, E> {
                Ok(MetricValue::Finite(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<MetricValue, E> {
                Ok(MetricValue::Finite(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<MetricValue, E> {
                Ok(MetricValue::Finite(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<MetricValue, E> {
                match v {
                    "+inf" => Ok(MetricValue::PosInf),
                    "-inf" => Ok(MetricValue::NegInf),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// A metric that was either computed or skipped with a reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outcome {
    Value(MetricValue),
    Skipped { skipped: String },
}

impl Outcome {
    pub fn value(&self) -> Option<MetricValue> {
        match self {
            Outcome::Value(v) => Some(*v),
            Outcome::Skipped { .. } => None,
        }
    }

    pub(crate) fn from_result(r: crate::error::Result<f64>) -> Self {
        match r {
            Ok(v) => match MetricValue::from_f64(v) {
                Some(v) => Outcome::Value(v),
                None => Outcome::Skipped {
                    skipped: "NaN result".into(),
                },
            },
            Err(e) => Outcome::Skipped { skipped: e.to_string() },
        }
    }
}
