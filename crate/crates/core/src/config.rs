//! Experiment and global-data configuration files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HaloError, Result};
use crate::up_operator::GlobalData;
use crate::weight_space::{WeightCharacter, WeightSpec};

/// Settings for one CLI run. Every field is optional so command-line flags
/// can fill or override them.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<String>,
    pub p: Option<u64>,
    pub n: Option<usize>,
    pub h: Option<usize>,
    pub weight: Option<Vec<i64>>,
    pub conductors: Option<Vec<u32>>,
    pub tame: Option<Vec<u64>>,
    pub a: Option<Vec<i64>>,
    pub global_data: Option<String>,
    pub degree_cap: Option<u32>,
    pub precision: Option<u32>,
    pub n_max: Option<usize>,
    pub out: Option<String>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| HaloError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&s).map_err(|e| HaloError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields of `other` take precedence.
    pub fn merged(&self, other: &ExperimentConfig) -> ExperimentConfig {
        macro_rules! pick {
            ($f:ident) => {
                other.$f.clone().or_else(|| self.$f.clone())
            };
        }
        ExperimentConfig {
            command: pick!(command),
            p: pick!(p),
            n: pick!(n),
            h: pick!(h),
            weight: pick!(weight),
            conductors: pick!(conductors),
            tame: pick!(tame),
            a: pick!(a),
            global_data: pick!(global_data),
            degree_cap: pick!(degree_cap),
            precision: pick!(precision),
            n_max: pick!(n_max),
            out: pick!(out),
        }
    }

    /// The weight described by p, weight, conductors and tame.
    pub fn weight_character(&self) -> Result<WeightCharacter> {
        let p = self.p.ok_or_else(|| HaloError::Config("missing p".into()))?;
        let t = self.weight.clone().ok_or_else(|| HaloError::Config("missing weight".into()))?;
        let n = self.n.unwrap_or(t.len());
        let conductors = self.conductors.clone().unwrap_or_else(|| vec![1; n]);
        let spec = WeightSpec { n, t, conductors, tame: self.tame.clone().unwrap_or_default() };
        WeightCharacter::from_spec(p, &spec)
    }

    /// Global data from the configured path, or h trivial components.
    pub fn global_data(&self) -> Result<GlobalData> {
        match &self.global_data {
            Some(path) => load_global_data(Path::new(path)),
            None => Ok(GlobalData::trivial(self.h.unwrap_or(1))),
        }
    }
}

pub fn load_global_data(path: &Path) -> Result<GlobalData> {
    let s = std::fs::read_to_string(path)
        .map_err(|e| HaloError::Config(format!("{}: {e}", path.display())))?;
    GlobalData::from_json(&s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_prefers_other() {
        let a = ExperimentConfig { p: Some(3), h: Some(2), ..Default::default() };
        let b = ExperimentConfig { p: Some(5), ..Default::default() };
        let m = a.merged(&b);
        assert_eq!(m.p, Some(5));
        assert_eq!(m.h, Some(2));
    }

    #[test]
    fn parse_rejects_unknown() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"prime": 3}"#).is_err());
        let c: ExperimentConfig = serde_json::from_str(r#"{"p": 3, "weight": [0, 0], "conductors": [2, 1]}"#).unwrap();
        assert_eq!(c.weight_character().unwrap().conductors(), vec![2, 1]);
    }
}
