//! Run configuration: a flat `key = value` file plus command-line overrides.
//!
//! ```text
//! # reference engine
//! beta1 = 0.6666666666666666
//! omega2 = 0.8333333333333334
//! gate = iswap
//! pulses = 100
//! tau2_relax_multiple = 0.5
//! ```
//!
//! Keys may use `-` or `_`. Unknown keys are rejected. A JSON file is read as
//! a serialized config, or as a run summary carrying one under `config`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::GateSpec;
use crate::thermo::EngineConfig;
use crate::trajectory::Protocol;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Tau2 {
    Absolute(f64),
    /// Multiple of the longest thermal relaxation time.
    RelaxMultiple(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub gamma: f64,
    pub gate: GateSpec,
    pub pulses: usize,
    pub tau2: Tau2,
    pub samples: u64,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Write event logs for the first this many trajectories.
    pub emit_logs: u64,
    pub json: bool,
    /// Optimizer restarts for `opt-gate`.
    pub restarts: usize,
    /// Pulse counts for `power-scan`.
    pub n_list: Vec<usize>,
    /// Operation time of `power-scan` in units of the relaxation time.
    pub t_op_relax: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            beta1: 2.0 / 3.0,
            beta2: 1.0,
            omega1: 1.0,
            omega2: 5.0 / 6.0,
            gamma: 1.0,
            gate: GateSpec::ISwap,
            pulses: 100,
            tau2: Tau2::RelaxMultiple(0.5),
            samples: 10_000,
            seed: 1,
            out_dir: PathBuf::from("."),
            emit_logs: 0,
            json: false,
            restarts: 50,
            n_list: vec![10, 20, 50, 100, 200, 500],
            t_op_relax: 30.0,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(format!("{key}: cannot parse {value:?}")))
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse_num(key, value)?;
    if !v.is_finite() {
        return Err(Error::config(format!("{key}: must be finite")));
    }
    Ok(v)
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "beta1" => self.beta1 = parse_f64(&key, v)?,
            "beta2" => self.beta2 = parse_f64(&key, v)?,
            "omega1" => self.omega1 = parse_f64(&key, v)?,
            "omega2" => self.omega2 = parse_f64(&key, v)?,
            "gamma" => self.gamma = parse_f64(&key, v)?,
            "gate" => self.gate = v.parse()?,
            "pulses" => self.pulses = parse_num(&key, v)?,
            "tau2" => self.tau2 = Tau2::Absolute(parse_f64(&key, v)?),
            "tau2_relax_multiple" => self.tau2 = Tau2::RelaxMultiple(parse_f64(&key, v)?),
            "samples" => self.samples = parse_num(&key, v)?,
            "seed" => self.seed = parse_num(&key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "emit_logs" => self.emit_logs = parse_num(&key, v)?,
            "json" => self.json = parse_num(&key, v)?,
            "restarts" => self.restarts = parse_num(&key, v)?,
            "n_list" => {
                self.n_list = v
                    .split(',')
                    .map(|x| parse_num(&key, x))
                    .collect::<Result<_>>()?
            }
            "t_op_relax" => self.t_op_relax = parse_f64(&key, v)?,
            _ => return Err(Error::config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("{}:{}: expected `key = value`", origin.display(), i + 1))
            })?;
            self.set(k, v)
                .map_err(|e| Error::config(format!("{}:{}: {e}", origin.display(), i + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if text.trim_start().starts_with('{') {
            let v: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| Error::config(format!("{}: invalid JSON config: {e}", path.display())))?;
            let inner = v.get("config").unwrap_or(&v);
            return Self::from_json(&inner.to_string());
        }
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text, path)?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("invalid JSON config: {e}")))
    }

    pub fn engine(&self) -> Result<EngineConfig> {
        EngineConfig::new(self.beta1, self.beta2, self.omega1, self.omega2, self.gamma)
    }

    pub fn tau2_value(&self) -> Result<f64> {
        Ok(match self.tau2 {
            Tau2::Absolute(t) => t,
            Tau2::RelaxMultiple(m) => m * self.engine()?.relaxation_time(),
        })
    }

    pub fn protocol(&self) -> Result<Protocol> {
        Protocol::new(self.pulses, self.tau2_value()?)
    }

    /// Checks every invariant the subcommands rely on.
    pub fn validate(&self) -> Result<()> {
        self.engine()?;
        self.gate.validate()?;
        self.protocol()?;
        if self.samples == 0 {
            return Err(Error::config("samples must be at least 1"));
        }
        if self.restarts == 0 {
            return Err(Error::config("restarts must be at least 1"));
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("n_list must be strictly ascending positive pulse counts"));
        }
        if !(self.t_op_relax > 0.0) {
            return Err(Error::config("t_op_relax must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects_unknown_keys() {
        let mut c = RunConfig::default();
        c.apply_text("# comment\nbeta1 = 0.5  # trailing\n\ntau2 = 0.65\ngate = swap:0,1,2,3\nn-list = 1,2,3\n", Path::new("x"))
            .unwrap();
        assert_eq!(c.beta1, 0.5);
        assert_eq!(c.tau2, Tau2::Absolute(0.65));
        assert_eq!(c.n_list, [1, 2, 3]);
        assert!(c.gate.is_swap_family());
        let err = c.apply_text("betaa = 1\n", Path::new("x.cfg")).unwrap_err();
        assert!(err.to_string().contains("x.cfg:1"), "{err}");
        assert!(c.apply_text("beta1 1\n", Path::new("x")).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut c = RunConfig::default();
        c.set("gate", "generic:1,2,3,4,5,6,7,8,9,10,11,12,13,14,0.5").unwrap();
        c.set("tau2-relax-multiple", "0.25").unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
        assert!(RunConfig::from_json(&text.replace("\"seed\"", "\"sead\"")).is_err());
    }

    #[test]
    fn default_tau2_is_half_relaxation() {
        let c = RunConfig::default();
        assert!((c.tau2_value().unwrap() - 0.5 * (1f64 / 6.0 * 5.0).exp_m1()).abs() < 1e-12);
        c.validate().unwrap();
        let bad = RunConfig { samples: 0, ..RunConfig::default() };
        assert!(bad.validate().is_err());
    }
}
