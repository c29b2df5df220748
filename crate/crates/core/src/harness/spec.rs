//! Agent specs of the form `kind` or `kind:key=value,key=value`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{config, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentSpec {
    pub kind: String,
    pub params: BTreeMap<String, String>,
}

fn valid_token(s: &str, extra: &[char]) -> bool {
    !s.is_empty()
        && s.chars().all(|c| {
            c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.') || extra.contains(&c)
        })
}

impl FromStr for AgentSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k, Some(r)),
            None => (s, None),
        };
        if !valid_token(kind, &[]) {
            return Err(config(format!("bad agent kind in `{s}`")));
        }
        let mut params = BTreeMap::new();
        for pair in rest.into_iter().flat_map(|r| r.split(',')) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| config(format!("agent parameter `{pair}` is not key=value")))?;
            let (k, v) = (k.trim(), v.trim());
            if !valid_token(k, &[]) || !valid_token(v, &['+']) {
                return Err(config(format!("bad agent parameter `{pair}`")));
            }
            if params.insert(k.to_string(), v.to_string()).is_some() {
                return Err(config(format!("agent parameter `{k}` given twice")));
            }
        }
        Ok(AgentSpec {
            kind: kind.to_string(),
            params,
        })
    }
}

impl fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.kind)?;
        for (i, (k, v)) in self.params.iter().enumerate() {
            write!(f, "{}{k}={v}", if i == 0 { ':' } else { ',' })?;
        }
        Ok(())
    }
}

impl AgentSpec {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    pub fn num(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| {
                    config(format!(
                        "`{}` parameter `{key}` is not a number: `{v}`",
                        self.kind
                    ))
                }),
        }
    }

    pub fn int(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                config(format!(
                    "`{}` parameter `{key}` is not an integer: `{v}`",
                    self.kind
                ))
            }),
        }
    }

    /// Fails on any parameter outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(config(format!(
                "`{}` agents take no parameter `{k}`",
                self.kind
            ))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_kinds_and_params() {
        let s: AgentSpec = "level2:alpha=0.1,inner_alpha=0.05".parse().unwrap();
        assert_eq!(s.kind, "level2");
        assert_eq!(s.num("alpha", 0.0).unwrap(), 0.1);
        assert_eq!(s.num("eps", 0.3).unwrap(), 0.3);
        let s: AgentSpec = "mixture:levels=1+2".parse().unwrap();
        assert_eq!(s.get("levels"), Some("1+2"));
        let s: AgentSpec = "tft".parse().unwrap();
        assert!(s.params.is_empty());
    }

    #[test]
    fn rejects_malformed_specs() {
        for bad in [
            "",
            ":a=1",
            "q:alpha",
            "q:alpha=1,alpha=2",
            "q:a=",
            "q w",
            "q:a=1,,",
        ] {
            assert!(bad.parse::<AgentSpec>().is_err(), "{bad}");
        }
        let s: AgentSpec = "q:alpha=x".parse().unwrap();
        assert!(s.num("alpha", 0.0).is_err());
        assert!(s.check_keys(&["gamma"]).is_err());
    }

    proptest! {
        #[test]
        fn display_round_trips(
            kind in "[a-z][a-z0-9-]{0,8}",
            params in prop::collection::btree_map("[a-z_]{1,6}", "[0-9.+]{1,5}", 0..5),
        ) {
            let spec = AgentSpec { kind, params };
            let back: AgentSpec = spec.to_string().parse().unwrap();
            prop_assert_eq!(back, spec);
        }
    }
}
