//! The `name{key=value, ...}` grammar shared by kernel and coefficient specs.
//!
//! ```text
//! riesz{beta=1.0}
//! exponential{lambda=2}
//! white
//! sin_bounded{a=1, b=0.5}
//! ```
//!
//! Names are ASCII identifiers; values are decimal floats. Braces may be
//! omitted when there are no parameters.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NamedParams {
    pub name: String,
    pub params: Vec<(String, f64)>,
}

impl NamedParams {
    pub fn parse(input: &str) -> Result<Self> {
        let fail = |reason: &str| Error::Parse {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let s = input.trim();
        let (name, body) = match s.find('{') {
            Some(open) => {
                if !s.ends_with('}') {
                    return Err(fail("missing closing brace"));
                }
                (&s[..open], Some(&s[open + 1..s.len() - 1]))
            }
            None => (s, None),
        };
        let name = name.trim();
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(fail("name must be a non-empty identifier"));
        }
        let mut params = Vec::new();
        if let Some(body) = body {
            for item in body.split(',').map(str::trim).filter(|x| !x.is_empty()) {
                let (k, v) = item
                    .split_once('=')
                    .ok_or_else(|| fail("expected key=value"))?;
                let k = k.trim();
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| fail("value is not a number"))?;
                if params.iter().any(|(key, _): &(String, f64)| key == k) {
                    return Err(fail("duplicate key"));
                }
                params.push((k.to_string(), v));
            }
        }
        Ok(Self {
            name: name.to_ascii_lowercase(),
            params,
        })
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn require(&self, key: &str) -> Result<f64> {
        self.get(key).ok_or_else(|| Error::Parse {
            input: self.to_string(),
            reason: format!("missing parameter `{key}`"),
        })
    }

    /// Rejects keys outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> Result<()> {
        match self
            .params
            .iter()
            .find(|(k, _)| !allowed.contains(&k.as_str()))
        {
            Some((k, _)) => Err(Error::Parse {
                input: self.to_string(),
                reason: format!("unknown parameter `{k}`"),
            }),
            None => Ok(()),
        }
    }
}

impl fmt::Display for NamedParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.params.is_empty() {
            f.write_str("{")?;
            for (i, (k, v)) in self.params.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{k}={v}")?;
            }
            f.write_str("}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_names_with_and_without_parameters() {
        let p = NamedParams::parse(" riesz{beta=1.0} ").unwrap();
        assert_eq!(p.name, "riesz");
        assert_eq!(p.get("beta"), Some(1.0));
        assert_eq!(NamedParams::parse("white").unwrap().params.len(), 0);
        let q = NamedParams::parse("sin_bounded{a=1, b=-0.5}").unwrap();
        assert_eq!(q.get("b"), Some(-0.5));
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in [
            "",
            "riesz{beta=1",
            "riesz{beta}",
            "riesz{beta=x}",
            "ri sz",
            "a{b=1,b=2}",
        ] {
            assert!(NamedParams::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn display_round_trips() {
        let p = NamedParams::parse("affine{a=0.25, b=2}").unwrap();
        assert_eq!(NamedParams::parse(&p.to_string()).unwrap(), p);
    }
}
