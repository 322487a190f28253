//! Runtime configuration: tuned heuristic thresholds, diversification caps,
//! and sampling budgets, as a `key = value` text file.
//!
//! [`ToolConfig::default()`] carries the shipped values; [`ToolConfig::render`]
//! produces the canonical file, and [`ToolConfig::parse`] reads one back.
//! The canonical rendering of the defaults is byte-stable, which the shipped
//! `configs/defaults.conf` is tested against.

use thiserror::Error;

use crate::io::{kv_map, parse_kv, FormatError};
use crate::optimize::{PROP_PLUS_TABLE, SIP_GLOBAL_SIGMA, SIP_ROUND_SIGMA_BANDS};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("missing key {0}")]
    MissingKey(String),
    #[error("bad value for {0}: {1}")]
    BadValue(String, String),
    #[error(transparent)]
    Format(#[from] FormatError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetConfig {
    /// Samples per optimization step.
    pub samples: usize,
    /// Samples for out-of-sample evaluation.
    pub eval_samples: usize,
    /// Nominal per-entry solve limit, seconds.
    pub time_limit_seconds: f64,
    /// Hill-climbing restarts per subproblem.
    pub restarts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolConfig {
    /// Rows of (entry count, per-round thresholds for rounds 1..6).
    pub prop_plus: Vec<(u32, Vec<f64>)>,
    /// Bands of (lo, hi, per-round overlap caps for rounds 1..4).
    pub sip_round_bands: Vec<(u32, u32, [u32; 4])>,
    /// Global overlap cap for entry counts past the last band.
    pub sip_global_sigma: u32,
    pub budget: BudgetConfig,
}

impl Default for ToolConfig {
    fn default() -> Self {
        Self {
            prop_plus: PROP_PLUS_TABLE
                .iter()
                .map(|(e, row)| (*e, row.to_vec()))
                .collect(),
            sip_round_bands: SIP_ROUND_SIGMA_BANDS.to_vec(),
            sip_global_sigma: SIP_GLOBAL_SIGMA,
            budget: BudgetConfig {
                samples: 250,
                eval_samples: 10_000,
                time_limit_seconds: 500.0,
                restarts: 8,
            },
        }
    }
}

impl ToolConfig {
    /// Canonical text form; parsing it back yields an equal config.
    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str("# Entry-pool tool configuration.\n");
        s.push_str("# Values are space-separated lists; `#` starts a comment.\n");
        s.push('\n');
        s.push_str("# Minimum P^round for a team to be eligible per round, by entry count.\n");
        for (e, row) in &self.prop_plus {
            s.push_str(&format!("prop_plus.{e} ="));
            for v in row {
                s.push_str(&format!(" {v:.3}"));
            }
            s.push('\n');
        }
        s.push('\n');
        s.push_str("# Pairwise overlap caps for rounds 1..4, by entry-count band,\n");
        s.push_str("# and the single global cap used above the last band.\n");
        for (lo, hi, sigmas) in &self.sip_round_bands {
            s.push_str(&format!(
                "sip.round_sigmas.{lo}_{hi} = {} {} {} {}\n",
                sigmas[0], sigmas[1], sigmas[2], sigmas[3]
            ));
        }
        s.push_str(&format!("sip.global_sigma = {}\n", self.sip_global_sigma));
        s.push('\n');
        s.push_str("# Sampling budgets.\n");
        s.push_str(&format!("budget.samples = {}\n", self.budget.samples));
        s.push_str(&format!(
            "budget.eval_samples = {}\n",
            self.budget.eval_samples
        ));
        s.push_str(&format!(
            "budget.time_limit_seconds = {}\n",
            self.budget.time_limit_seconds
        ));
        s.push_str(&format!("budget.restarts = {}\n", self.budget.restarts));
        s
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let pairs = parse_kv(text)?;
        let map = kv_map(&pairs);
        let get = |key: &str| {
            map.get(key)
                .ok_or_else(|| ConfigError::MissingKey(key.to_string()))
        };
        let bad = |key: &str, v: &str| ConfigError::BadValue(key.to_string(), v.to_string());

        let mut prop_plus = Vec::new();
        for (k, v) in &pairs {
            if let Some(e) = k.strip_prefix("prop_plus.") {
                let e: u32 = e.parse().map_err(|_| bad(k, v))?;
                let row: Vec<f64> = v
                    .split_whitespace()
                    .map(|x| x.parse().map_err(|_| bad(k, v)))
                    .collect::<Result<_, _>>()?;
                prop_plus.push((e, row));
            }
        }
        if prop_plus.is_empty() {
            return Err(ConfigError::MissingKey("prop_plus.<e>".into()));
        }

        let mut sip_round_bands = Vec::new();
        for (k, v) in &pairs {
            if let Some(band) = k.strip_prefix("sip.round_sigmas.") {
                let (lo, hi) = band.split_once('_').ok_or_else(|| bad(k, v))?;
                let lo: u32 = lo.parse().map_err(|_| bad(k, v))?;
                let hi: u32 = hi.parse().map_err(|_| bad(k, v))?;
                let sigmas: Vec<u32> = v
                    .split_whitespace()
                    .map(|x| x.parse().map_err(|_| bad(k, v)))
                    .collect::<Result<_, _>>()?;
                if sigmas.len() != 4 {
                    return Err(bad(k, v));
                }
                sip_round_bands.push((lo, hi, [sigmas[0], sigmas[1], sigmas[2], sigmas[3]]));
            }
        }

        let parse_key = |key: &str| -> Result<f64, ConfigError> {
            let v = get(key)?;
            v.parse().map_err(|_| bad(key, v))
        };
        Ok(Self {
            prop_plus,
            sip_round_bands,
            sip_global_sigma: parse_key("sip.global_sigma")? as u32,
            budget: BudgetConfig {
                samples: parse_key("budget.samples")? as usize,
                eval_samples: parse_key("budget.eval_samples")? as usize,
                time_limit_seconds: parse_key("budget.time_limit_seconds")?,
                restarts: parse_key("budget.restarts")? as usize,
            },
        })
    }

    /// Thresholds for an entry count, from the configured rows (nearest row,
    /// ties toward the smaller count).
    pub fn thresholds_for(&self, entry_count: usize) -> crate::optimize::PropPlusThresholds {
        let e = entry_count as i64;
        let row = self
            .prop_plus
            .iter()
            .min_by_key(|(count, _)| ((*count as i64 - e).abs(), *count))
            .expect("config has threshold rows");
        crate::optimize::PropPlusThresholds::new(row.1.clone())
            .expect("configured thresholds are valid")
    }

    /// Diversification defaults for an entry count from the configured bands.
    pub fn diversification_for(
        &self,
        entry_count: usize,
    ) -> crate::optimize::DiversificationConfig {
        let e = entry_count as u32;
        let mut cfg = crate::optimize::DiversificationConfig {
            enable_champion: true,
            enable_finalist: true,
            global_sigma: None,
            round_sigmas: None,
        };
        match self
            .sip_round_bands
            .iter()
            .find(|(lo, hi, _)| (*lo..=*hi).contains(&e.max(2)))
        {
            Some((_, _, sigmas)) => cfg.round_sigmas = Some(*sigmas),
            None => cfg.global_sigma = Some(self.sip_global_sigma),
        }
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parse_round_trip() {
        let cfg = ToolConfig::default();
        let text = cfg.render();
        let back = ToolConfig::parse(&text).unwrap();
        assert_eq!(cfg, back);
        // canonical: rendering the parsed config reproduces the bytes
        assert_eq!(back.render(), text);
    }

    #[test]
    fn defaults_match_builtin_tables() {
        let cfg = ToolConfig::default();
        assert_eq!(cfg.prop_plus.len(), 7);
        assert_eq!(cfg.prop_plus[6].0, 100);
        assert_eq!(
            cfg.prop_plus[6].1,
            vec![0.450, 0.372, 0.305, 0.186, 0.000, 0.000]
        );
        assert_eq!(cfg.sip_round_bands[0], (2, 4, [30, 11, 7, 1]));
        assert_eq!(cfg.sip_global_sigma, 54);
        assert_eq!(cfg.budget.samples, 250);
        assert_eq!(cfg.budget.eval_samples, 10_000);
    }

    #[test]
    fn selector_helpers_follow_the_tables() {
        let cfg = ToolConfig::default();
        assert_eq!(
            cfg.thresholds_for(100).values(),
            crate::optimize::PropPlusThresholds::for_entry_count(100).values()
        );
        assert_eq!(
            cfg.diversification_for(7),
            crate::optimize::DiversificationConfig::defaults_for(7)
        );
        assert_eq!(
            cfg.diversification_for(40),
            crate::optimize::DiversificationConfig::defaults_for(40)
        );
    }

    #[test]
    fn parse_rejects_incomplete_files() {
        assert!(matches!(
            ToolConfig::parse("budget.samples = 10\n"),
            Err(ConfigError::MissingKey(_))
        ));
        assert!(ToolConfig::parse("prop_plus.2 = nope\n").is_err());
    }
}
