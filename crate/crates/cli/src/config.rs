//! Experiment configuration: one JSON document drives a whole run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use trafficbench::attack::{
    defense_config_for, AttackKind, ClassifierHyper, FusionHyper, MotifParams, NetShape, PipelineConfig, SegmentSpec,
};
use trafficbench::defense::{DefenseConfig, DefenseMethod, DefenseRegistry};
use trafficbench::imaging::{GafConfig, Representation};
use trafficbench::ingest::RateTrace;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Trace and label CSVs; absent means the seeded synthetic fixture.
    #[serde(default)]
    pub inputs: Option<InputSpec>,
    #[serde(default)]
    pub motif: MotifParams,
    #[serde(default)]
    pub defense: DefenseSpec,
    #[serde(default)]
    pub attack: AttackSpec,
    #[serde(default)]
    pub eval: EvalSpec,
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub traces: PathBuf,
    pub labels: PathBuf,
    #[serde(default = "one")]
    pub granularity_s: u32,
    /// Neighbours for imputing absent samples; 0 fills them with zero traffic.
    #[serde(default)]
    pub impute_k: usize,
    #[serde(default)]
    pub background_cap_kb_s: Option<f64>,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DefenseSpec {
    pub method: String,
    /// Level V; absent means the home-wide default.
    pub flatten_threshold_kb_s: Option<f64>,
    pub injection_rate_per_hour: f64,
    pub bernoulli_p: f64,
    pub hmm_states: usize,
}

impl Default for DefenseSpec {
    fn default() -> Self {
        let d = DefenseConfig::new(DefenseMethod::Htr, 1.0, 0);
        DefenseSpec {
            method: "htr".into(),
            flatten_threshold_kb_s: None,
            injection_rate_per_hour: d.injection_rate_per_hour,
            bernoulli_p: d.bernoulli_p,
            hmm_states: d.hmm_states,
        }
    }
}

impl DefenseSpec {
    pub fn method(&self, registry: &DefenseRegistry) -> Result<DefenseMethod, CliError> {
        let m = DefenseMethod::from_name(&self.method);
        match &m {
            DefenseMethod::Plugin(name) if !registry.contains(name) => {
                Err(CliError::Usage(format!("unknown defense method `{name}`")))
            }
            _ => Ok(m),
        }
    }

    /// Full defense configuration for `traces`, seeded with `seed`.
    pub fn resolve(
        &self,
        registry: &DefenseRegistry,
        traces: &[RateTrace],
        seed: u64,
    ) -> Result<DefenseConfig, CliError> {
        let method = self.method(registry)?;
        let mut cfg = match self.flatten_threshold_kb_s {
            Some(v) => DefenseConfig::new(method, v, seed),
            None => defense_config_for(method, traces, seed)?,
        };
        cfg.injection_rate_per_hour = self.injection_rate_per_hour;
        cfg.bernoulli_p = self.bernoulli_p;
        cfg.hmm_states = self.hmm_states;
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackSpec {
    /// `fusion` or a classifier name (`random_forest`, `rf`, `k_nearest`, ...).
    pub kind: String,
    pub segment: SegmentSpec,
    pub representations: Vec<Representation>,
    pub image_size: usize,
    pub gaf: GafConfig,
    pub classifier: ClassifierHyper,
    pub fusion: FusionHyper,
    pub net: NetShape,
    pub augment_shifts_s: Vec<i32>,
}

impl Default for AttackSpec {
    fn default() -> Self {
        let p = PipelineConfig::default();
        AttackSpec {
            kind: p.attack.name(),
            segment: p.segment,
            representations: p.representations,
            image_size: p.image_size,
            gaf: p.gaf,
            classifier: p.classifier,
            fusion: p.fusion,
            net: p.net,
            augment_shifts_s: p.augment_shifts_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSpec {
    pub topk: Vec<usize>,
    /// Adversary knowledge levels; empty skips the sweep.
    pub knowledge_levels: Vec<f64>,
}

impl Default for EvalSpec {
    fn default() -> Self {
        EvalSpec {
            topk: vec![1, 5],
            knowledge_levels: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    /// Parse and validate; relative input paths resolve against the config's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(inputs) = &mut cfg.inputs {
            inputs.traces = base.join(&inputs.traces);
            inputs.labels = base.join(&inputs.labels);
        }
        if let Some(out) = &mut cfg.output_dir {
            *out = base.join(&*out);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(inputs) = &self.inputs {
            for p in [&inputs.traces, &inputs.labels] {
                if !p.is_file() {
                    return Err(CliError::Usage(format!("input file not found: {}", p.display())));
                }
            }
            if inputs.granularity_s == 0 {
                return Err(CliError::Usage("granularity_s must be positive".into()));
            }
            if inputs.background_cap_kb_s.is_some_and(|c| !(c > 0.0)) {
                return Err(CliError::Usage("background_cap_kb_s must be positive".into()));
            }
        }
        if !(self.motif.threshold_kb_s >= 0.0) || self.motif.window_half_n == 0 {
            return Err(CliError::Usage("motif threshold must be >= 0 and window > 0".into()));
        }
        self.defense.method(&DefenseRegistry::new())?;
        let probe = DefenseConfig {
            flatten_threshold_kb_s: self.defense.flatten_threshold_kb_s.unwrap_or(1.0),
            injection_rate_per_hour: self.defense.injection_rate_per_hour,
            bernoulli_p: self.defense.bernoulli_p,
            hmm_states: self.defense.hmm_states,
            ..DefenseConfig::new(DefenseMethod::Identity, 1.0, 0)
        };
        probe.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        self.pipeline()?;
        if self.eval.topk.iter().any(|&k| k == 0) {
            return Err(CliError::Usage("topk entries must be at least 1".into()));
        }
        check_levels(&self.eval.knowledge_levels)?;
        Ok(())
    }

    pub fn pipeline(&self) -> Result<PipelineConfig, CliError> {
        let a = &self.attack;
        let attack = AttackKind::from_name(&a.kind)
            .ok_or_else(|| CliError::Usage(format!("unknown attack `{}`", a.kind)))?;
        if a.representations.is_empty() {
            return Err(CliError::Usage("at least one representation is required".into()));
        }
        if a.image_size < 2 || a.net.pool_grid == 0 || (a.image_size / 2) % a.net.pool_grid != 0 {
            return Err(CliError::Usage(format!(
                "image_size {} does not pool onto a {}x{} grid",
                a.image_size, a.net.pool_grid, a.net.pool_grid
            )));
        }
        if a.segment.length_s == 0 {
            return Err(CliError::Usage("segment length must be positive".into()));
        }
        a.gaf.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(PipelineConfig {
            segment: a.segment.clone(),
            motif: self.motif.clone(),
            attack,
            classifier: a.classifier.clone(),
            fusion: a.fusion.clone(),
            net: a.net.clone(),
            representations: a.representations.clone(),
            image_size: a.image_size,
            gaf: a.gaf.clone(),
            augment_shifts_s: a.augment_shifts_s.clone(),
        })
    }
}

fn check_levels(levels: &[f64]) -> Result<(), CliError> {
    if levels.iter().any(|q| !(0.0..=1.0).contains(q)) {
        return Err(CliError::Usage("knowledge levels must lie in [0, 1]".into()));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Usage("knowledge levels must be strictly increasing".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_is_mandatory() {
        let err = serde_json::from_str::<ExperimentConfig>("{}").unwrap_err();
        assert!(err.to_string().contains("seed"));
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"seed": 3}"#).unwrap();
        assert_eq!(cfg.seed, 3);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn rejects_bad_sections() {
        let bad = [
            r#"{"seed": 1, "defense": {"method": "nope"}}"#,
            r#"{"seed": 1, "attack": {"kind": "nope"}}"#,
            r#"{"seed": 1, "eval": {"knowledge_levels": [0.5, 0.2]}}"#,
            r#"{"seed": 1, "eval": {"topk": [0]}}"#,
            r#"{"seed": 1, "inputs": {"traces": "/no/such.csv", "labels": "/no/such.csv"}}"#,
        ];
        for src in bad {
            let cfg: ExperimentConfig = serde_json::from_str(src).unwrap();
            assert!(matches!(cfg.validate(), Err(CliError::Usage(_))), "{src}");
        }
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"seed": 1, "typo": 2}"#).is_err());
    }
}
