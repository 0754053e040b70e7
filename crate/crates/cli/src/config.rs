//! Flat key/value configuration: preset, then file, then `--set` overrides.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use cohengine_core::presets::Preset;
use cohengine_core::{GapTemplate, MachineConfig, TapeQubitState};
use num_complex::Complex64;
use serde_json::Value;

use crate::error::CliError;

pub const MACHINE_KEYS: [&str; 8] = ["e_q", "e_c", "e_m", "beta_c", "beta_h", "gamma0", "r", "phi"];
pub const TAPE_KEYS: [&str; 3] = ["p1", "c_re", "c_im"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Resolved {
    values: BTreeMap<String, f64>,
}

fn known(key: &str) -> bool {
    MACHINE_KEYS.contains(&key) || TAPE_KEYS.contains(&key)
}

impl Resolved {
    /// Applies one configuration layer. `e_c` and `e_m` are alternatives, so
    /// setting one discards the other from earlier layers.
    pub fn apply(&mut self, layer: &BTreeMap<String, f64>) -> Result<(), CliError> {
        if layer.contains_key("e_c") && layer.contains_key("e_m") {
            return Err(CliError::config("e_c and e_m are alternatives; give only one"));
        }
        for (k, v) in layer {
            if !known(k) {
                return Err(CliError::config(format!("unknown configuration key {k:?}")));
            }
            match k.as_str() {
                "e_c" => self.values.remove("e_m"),
                "e_m" => self.values.remove("e_c"),
                _ => None,
            };
            self.values.insert(k.clone(), *v);
        }
        Ok(())
    }

    pub fn from_preset(p: &Preset) -> Self {
        let t = &p.template;
        let mut values = BTreeMap::from([
            ("e_q".to_string(), t.e_q),
            ("beta_c".to_string(), t.beta_c),
            ("beta_h".to_string(), t.beta_h),
            ("gamma0".to_string(), t.gamma0),
            ("r".to_string(), t.r),
            ("phi".to_string(), t.phi),
        ]);
        if let Some(e_c) = p.e_c {
            values.insert("e_c".to_string(), e_c);
        }
        Resolved { values }
    }

    pub fn values(&self) -> &BTreeMap<String, f64> {
        &self.values
    }

    fn get(&self, key: &'static str) -> Result<f64, CliError> {
        self.values
            .get(key)
            .copied()
            .ok_or_else(|| CliError::config(format!("missing required key {key:?}")))
    }

    fn e_q(&self) -> f64 {
        self.values.get("e_q").copied().unwrap_or(1.0)
    }

    pub fn template(&self) -> Result<GapTemplate, CliError> {
        Ok(GapTemplate {
            e_q: self.e_q(),
            beta_c: self.get("beta_c")?,
            beta_h: self.get("beta_h")?,
            gamma0: self.get("gamma0")?,
            r: self.get("r")?,
            phi: self.get("phi")?,
        })
    }

    pub fn machine(&self) -> Result<MachineConfig, CliError> {
        let t = self.template()?;
        let cfg = match (self.values.get("e_c"), self.values.get("e_m")) {
            (Some(&e_c), _) => MachineConfig::new(t.e_q, e_c, t.beta_c, t.beta_h, t.gamma0, t.r, t.phi),
            (None, Some(&e_m)) => t.with_e_m(e_m),
            (None, None) => return Err(CliError::config("missing required key \"e_c\" (or \"e_m\")")),
        };
        cfg.map_err(CliError::from)
    }

    /// Machine config for gap-optimized runs: the gap keys are not needed, and
    /// when absent a placeholder gap is used only to carry the other parameters.
    pub fn machine_or_placeholder(&self) -> Result<MachineConfig, CliError> {
        if self.values.contains_key("e_c") || self.values.contains_key("e_m") {
            self.machine()
        } else {
            let t = self.template()?;
            t.with_e_m(3.0 * t.e_q).map_err(CliError::from)
        }
    }

    pub fn tape(&self) -> Result<TapeQubitState, CliError> {
        let p1 = self.get("p1")?;
        let c = Complex64::new(
            self.values.get("c_re").copied().unwrap_or(0.0),
            self.values.get("c_im").copied().unwrap_or(0.0),
        );
        TapeQubitState::new(p1, c).map_err(CliError::from)
    }
}

/// Reads a flat JSON object of numbers. A run manifest is accepted too: its
/// `config` and `tape` objects are merged.
pub fn read_file(path: &Path) -> Result<BTreeMap<String, f64>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config file {}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("config file {} is not valid JSON: {e}", path.display())))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| CliError::config("config file must hold a JSON object"))?;
    let mut out = BTreeMap::new();
    if obj.contains_key("manifest_version") {
        for section in ["config", "tape"] {
            if let Some(Value::Object(m)) = obj.get(section) {
                collect(m, &mut out)?;
            }
        }
    } else {
        collect(obj, &mut out)?;
    }
    Ok(out)
}

fn collect(obj: &serde_json::Map<String, Value>, out: &mut BTreeMap<String, f64>) -> Result<(), CliError> {
    for (k, v) in obj {
        let x = v
            .as_f64()
            .ok_or_else(|| CliError::config(format!("key {k:?} must be a number")))?;
        out.insert(k.clone(), x);
    }
    Ok(())
}

/// Parses `key=value` overrides.
pub fn parse_sets(items: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out = BTreeMap::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("--set expects key=value, got {item:?}")))?;
        let x: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("value for key {k:?} is not a number: {v:?}")))?;
        if out.contains_key(k.trim()) {
            return Err(CliError::config(format!("key {:?} set twice", k.trim())));
        }
        out.insert(k.trim().to_string(), x);
    }
    Ok(out)
}
