use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// The constant `L` of the boundary condition `psi(0) + L psi'(0) = 0`.
///
/// `Finite(0.0)` is the Dirichlet (standard) wall and `Infinite` the Neumann wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WallParameter {
    Finite(f64),
    Infinite,
}

impl WallParameter {
    pub const DIRICHLET: WallParameter = WallParameter::Finite(0.0);
    pub const NEUMANN: WallParameter = WallParameter::Infinite;

    /// Builds a finite wall, rejecting non-finite values so that overflow can
    /// never masquerade as the Neumann wall.
    pub fn finite(length: f64) -> Result<Self> {
        if !length.is_finite() {
            return Err(Error::MalformedInput(format!(
                "wall length must be finite, got {length}"
            )));
        }
        // normalizes -0.0
        Ok(WallParameter::Finite(length + 0.0))
    }

    pub fn length(&self) -> Option<f64> {
        match *self {
            WallParameter::Finite(l) => Some(l),
            WallParameter::Infinite => None,
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(*self, WallParameter::Finite(l) if l == 0.0)
    }

    pub fn is_neumann(&self) -> bool {
        matches!(self, WallParameter::Infinite)
    }

    /// `1/L`, with `1/inf = 0` and `1/0` reported as `None`.
    pub fn inverse_length(&self) -> Option<f64> {
        match *self {
            WallParameter::Infinite => Some(0.0),
            WallParameter::Finite(0.0) => None,
            WallParameter::Finite(l) => Some(1.0 / l),
        }
    }
}

/// Parses a decimal number or the literal `inf`.
pub fn parse_wall(text: &str) -> Result<WallParameter> {
    let t = text.trim();
    if t == "inf" {
        return Ok(WallParameter::Infinite);
    }
    let lower = t.to_ascii_lowercase();
    if lower.contains("inf") || lower.contains("nan") {
        return Err(Error::MalformedInput(format!("not a wall parameter: {text:?}")));
    }
    let value = f64::from_str(t)
        .map_err(|_| Error::MalformedInput(format!("not a wall parameter: {text:?}")))?;
    WallParameter::finite(value)
}

impl FromStr for WallParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_wall(s)
    }
}

impl fmt::Display for WallParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `{}` on f64 prints the shortest string that parses back exactly.
            WallParameter::Finite(l) => write!(f, "{}", l),
            WallParameter::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for WallParameter {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            WallParameter::Finite(l) => serializer.serialize_f64(*l),
            WallParameter::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for WallParameter {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct WallVisitor;

        impl Visitor<'_> for WallVisitor {
            type Value = WallParameter;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a finite number or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<WallParameter, E> {
                WallParameter::finite(v).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<WallParameter, E> {
                self.visit_f64(v as f64)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<WallParameter, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<WallParameter, E> {
                parse_wall(v).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(WallVisitor)
    }
}
