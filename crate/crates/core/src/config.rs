//! Flat `key = value` config files: one pair per line, `#` comments, lists
//! comma-separated. Unknown keys are rejected. Missing keys keep their
//! defaults.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::SobolevIndex;
use crate::scalar::Real;
use crate::study::{DtRule, StudyConfig};

fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("bad value '{v}' for key '{key}'")))
}

fn parse_list_u32(key: &str, v: &str) -> Result<Vec<u32>> {
    v.split(',').map(|s| parse_num(key, s.trim())).collect()
}

impl<T: Real> StudyConfig<T> {
    /// Parses config text on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = StudyConfig::default();
        let pairs = parse_pairs(text)?;
        let mut nls_rule_kind: Option<String> = None;
        let mut nls_rule_coeff: Option<f64> = None;
        for (key, value) in &pairs {
            match key.as_str() {
                "potential" => cfg.potential = value.parse()?,
                "m_trunc" => cfg.m_trunc = parse_num(key, value)?,
                "s" => cfg.s = SobolevIndex::new(T::of(parse_num::<f64>(key, value)?))?,
                "s_env" => cfg.s_env = SobolevIndex::new(T::of(parse_num::<f64>(key, value)?))?,
                "inv_epsilons" => cfg.inv_epsilons = parse_list_u32(key, value)?,
                "t_star" => cfg.t_star = T::of(parse_num::<f64>(key, value)?),
                "kappa" => cfg.kappa = T::of(parse_num::<f64>(key, value)?),
                "box_length" => cfg.box_length = parse_num(key, value)?,
                "envelope_points" => cfg.envelope_points = parse_num(key, value)?,
                "fine_points_per_cell" => cfg.fine_points_per_cell = parse_num(key, value)?,
                "nls_dt_rule" => nls_rule_kind = Some(value.to_lowercase()),
                "nls_dt_coeff" => nls_rule_coeff = Some(parse_num::<f64>(key, value)?),
                "nld_dt" => cfg.nld_dt = T::of(parse_num::<f64>(key, value)?),
                "alpha0_minus_amp" => {
                    cfg.alpha0_minus.amplitude = T::of(parse_num::<f64>(key, value)?)
                }
                "alpha0_minus_width" => {
                    cfg.alpha0_minus.width = T::of(parse_num::<f64>(key, value)?)
                }
                "alpha0_plus_amp" => {
                    cfg.alpha0_plus.amplitude = T::of(parse_num::<f64>(key, value)?)
                }
                "alpha0_plus_width" => cfg.alpha0_plus.width = T::of(parse_num::<f64>(key, value)?),
                "n_hint" => {
                    cfg.n_hint = if value.is_empty() {
                        None
                    } else {
                        Some(parse_num(key, value)?)
                    }
                }
                "seed" => cfg.seed = parse_num(key, value)?,
                "sample_count" => cfg.sample_count = parse_num(key, value)?,
                "emit_bands" => cfg.emit_bands = parse_num(key, value)?,
                "bands_k_points" => cfg.bands_k_points = parse_num(key, value)?,
                "bands_n_bands" => cfg.bands_n_bands = parse_num(key, value)?,
                other => return Err(Error::Config(format!("unknown config key '{other}'"))),
            }
        }
        let default_coeff = |rule: &DtRule<T>| match *rule {
            DtRule::Linear(c) | DtRule::Quadratic(c) => c,
        };
        if nls_rule_kind.is_some() || nls_rule_coeff.is_some() {
            let coeff = nls_rule_coeff.map_or(default_coeff(&cfg.nls_dt), T::of);
            cfg.nls_dt = match nls_rule_kind.as_deref() {
                Some("linear") => DtRule::Linear(coeff),
                Some("quadratic") | None => DtRule::Quadratic(coeff),
                Some(other) => {
                    return Err(Error::Config(format!(
                        "nls_dt_rule must be 'linear' or 'quadratic', got '{other}'"
                    )))
                }
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }
}
