//! Named Lipschitz coefficient presets for σ and b.
//!
//! ```text
//! zero                  z ↦ 0
//! constant{c}           z ↦ c
//! affine{a, b}          z ↦ a + b·z
//! sin_bounded{a, b}     z ↦ a + b·sin z     (|σ| ≥ |a| − |b| when |a| > |b|)
//! ```

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::params::NamedParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coefficient {
    Zero,
    Constant { c: f64 },
    Affine { a: f64, b: f64 },
    SinBounded { a: f64, b: f64 },
}

impl Coefficient {
    pub fn parse(spec: &str) -> Result<Self> {
        let p = NamedParams::parse(spec)?;
        let coeff = match p.name.as_str() {
            "zero" => {
                p.only(&[])?;
                Self::Zero
            }
            "constant" => {
                p.only(&["c"])?;
                Self::Constant { c: p.require("c")? }
            }
            "affine" => {
                p.only(&["a", "b"])?;
                Self::Affine {
                    a: p.get("a").unwrap_or(0.0),
                    b: p.get("b").unwrap_or(0.0),
                }
            }
            "sin_bounded" => {
                p.only(&["a", "b"])?;
                Self::SinBounded {
                    a: p.require("a")?,
                    b: p.require("b")?,
                }
            }
            other => {
                return Err(Error::Parse {
                    input: spec.to_string(),
                    reason: format!("unknown coefficient preset '{other}' (expected zero, constant, affine, sin_bounded)"),
                })
            }
        };
        coeff.validate()?;
        Ok(coeff)
    }

    fn validate(&self) -> Result<()> {
        let finite = match *self {
            Self::Zero => true,
            Self::Constant { c } => c.is_finite(),
            Self::Affine { a, b } | Self::SinBounded { a, b } => a.is_finite() && b.is_finite(),
        };
        if finite {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "non-finite coefficient parameter in {self}"
            )))
        }
    }

    pub fn value(&self, z: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Constant { c } => c,
            Self::Affine { a, b } => a + b * z,
            Self::SinBounded { a, b } => a + b * z.sin(),
        }
    }

    pub fn derivative(&self, z: f64) -> f64 {
        match *self {
            Self::Zero | Self::Constant { .. } => 0.0,
            Self::Affine { b, .. } => b,
            Self::SinBounded { b, .. } => b * z.cos(),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match *self {
            Self::Zero | Self::Constant { .. } => 0.0,
            Self::Affine { b, .. } | Self::SinBounded { b, .. } => b.abs(),
        }
    }

    /// Declared c ≥ 0 with |σ(z)| ≥ c for all z.
    pub fn lower_bound(&self) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Constant { c } => c.abs(),
            Self::Affine { a, b } => {
                if b == 0.0 {
                    a.abs()
                } else {
                    0.0
                }
            }
            Self::SinBounded { a, b } => (a.abs() - b.abs()).max(0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Self::Zero => true,
            Self::Constant { c } => c == 0.0,
            Self::Affine { a, b } | Self::SinBounded { a, b } => a == 0.0 && b == 0.0,
        }
    }

    /// The constant value when the coefficient does not depend on z.
    pub fn as_constant(&self) -> Option<f64> {
        match *self {
            Self::Zero => Some(0.0),
            Self::Constant { c } => Some(c),
            Self::Affine { a, b } | Self::SinBounded { a, b } => (b == 0.0).then_some(a),
        }
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Zero => write!(f, "zero"),
            Self::Constant { c } => write!(f, "constant{{c={c}}}"),
            Self::Affine { a, b } => write!(f, "affine{{a={a},b={b}}}"),
            Self::SinBounded { a, b } => write!(f, "sin_bounded{{a={a},b={b}}}"),
        }
    }
}

impl Serialize for Coefficient {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// The pair (σ, b) of the equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coefficients {
    pub sigma: Coefficient,
    pub b: Coefficient,
}

impl Coefficients {
    /// Checks the declared lower bound of σ on a sample of z values.
    pub fn new(sigma: Coefficient, b: Coefficient) -> Result<Self> {
        sigma.validate()?;
        b.validate()?;
        let c = sigma.lower_bound();
        if c > 0.0 {
            for i in 0..=2000 {
                let z = -100.0 + 0.1 * i as f64 + 0.013;
                if sigma.value(z).abs() < c * (1.0 - 1e-12) {
                    return Err(Error::InvalidParameter(format!(
                        "|sigma({z})| = {} violates the declared lower bound {c}",
                        sigma.value(z).abs()
                    )));
                }
            }
        }
        Ok(Self { sigma, b })
    }

    pub fn additive(c: f64) -> Self {
        Self {
            sigma: Coefficient::Constant { c },
            b: Coefficient::Zero,
        }
    }

    pub fn zero() -> Self {
        Self {
            sigma: Coefficient::Zero,
            b: Coefficient::Zero,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        for s in [
            "zero",
            "constant{c=2}",
            "affine{a=0,b=-1}",
            "sin_bounded{a=1,b=0.5}",
        ] {
            let c = Coefficient::parse(s).unwrap();
            assert_eq!(Coefficient::parse(&c.to_string()).unwrap(), c);
        }
        assert!(Coefficient::parse("cubic{a=1}").is_err());
        assert!(Coefficient::parse("constant").is_err());
        assert!(Coefficient::parse("constant{c=1,d=2}").is_err());
    }

    #[test]
    fn lipschitz_and_derivatives() {
        let s = Coefficient::SinBounded { a: 1.0, b: 0.5 };
        assert_eq!(s.lipschitz(), 0.5);
        assert_eq!(s.lower_bound(), 0.5);
        let z = 0.3f64;
        let h = 1e-6;
        let fd = (s.value(z + h) - s.value(z - h)) / (2.0 * h);
        assert!((fd - s.derivative(z)).abs() < 1e-9);
        let a = Coefficient::Affine { a: 0.0, b: -1.0 };
        assert_eq!(a.value(2.0), -2.0);
        assert_eq!(a.derivative(7.0), -1.0);
        assert_eq!(a.as_constant(), None);
        assert_eq!(Coefficient::Constant { c: 2.0 }.as_constant(), Some(2.0));
    }

    #[test]
    fn lower_bound_is_spot_checked() {
        let s = Coefficient::SinBounded { a: 1.0, b: 0.5 };
        assert!(Coefficients::new(s, Coefficient::Zero).is_ok());
        assert!(
            Coefficients::new(Coefficient::Constant { c: f64::NAN }, Coefficient::Zero).is_err()
        );
    }
}
