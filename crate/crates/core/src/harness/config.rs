//! TOML experiment configuration.
//!
//! Every table rejects unknown keys. Omitted values take per-mode defaults;
//! [`ExperimentConfig::resolve`] fills them in and the filled-in form is what
//! gets written into each run directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basis::ManifestKind;
use crate::error::{Error, Result};
use crate::model::{IsingParams, Preset, SHELL_HI, SHELL_LO};
use crate::optimize::{steps_for, RewardParams};

/// Largest chain run without `allow_long`.
pub const DESK_MAX_SITES: usize = 14;
/// Hard cap for any run.
pub const MAX_RUN_SITES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Optimize,
    Quench,
    Discrete,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(rename = "L")]
    pub n_sites: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellSection {
    pub lo: f64,
    pub hi: f64,
}

impl Default for ShellSection {
    fn default() -> Self {
        ShellSection {
            lo: SHELL_LO,
            hi: SHELL_HI,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchSection {
    pub h: f64,
    pub g: f64,
}

impl Default for QuenchSection {
    fn default() -> Self {
        let (h, g) = Preset::QuenchTarget.fields();
        QuenchSection { h, g }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomActions {
    pub seed: u64,
    pub length: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    pub mode: Mode,
    /// Locality of the control basis in optimize mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quench: Option<QuenchSection>,
    /// Indices into the discrete action set, one per step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub actions: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_actions: Option<RandomActions>,
    /// Duration of the `Σ X` kick; zero disables it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kick: Option<f64>,
    /// Gradient-vanish tolerance; defaults to `1e-12 · √n`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vanish_tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DposSection {
    pub epsilon: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    /// Steps between per-state samples; the last step is always sampled.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_every: Option<usize>,
    /// Half-chain entropies at every sample.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Allows `L > 14`.
    #[serde(default)]
    pub allow_long: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub shell: ShellSection,
    pub control: ControlSection,
    #[serde(default)]
    pub reward: RewardParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dpos: Option<DposSection>,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// A config with every default applied and every constraint checked.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedConfig {
    pub raw: ExperimentConfig,
    pub model: IsingParams,
    pub mode: Mode,
    pub kind: ManifestKind,
    pub dt: f64,
    pub steps: usize,
    pub sample_every: usize,
    pub entropy: bool,
    pub kick: f64,
    pub dpos_eps: f64,
    pub actions: Vec<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Optimize-mode config on a preset with all other values defaulted.
    pub fn optimize_preset(preset: Preset, n_sites: usize, k: usize) -> Self {
        Self::with_control(preset, n_sites, ControlSection {
            mode: Mode::Optimize,
            k: Some(k),
            quench: None,
            actions: None,
            random_actions: None,
            kick: None,
            vanish_tol: None,
        })
    }

    pub fn quench_preset(preset: Preset, n_sites: usize) -> Self {
        Self::with_control(preset, n_sites, ControlSection {
            mode: Mode::Quench,
            k: None,
            quench: Some(QuenchSection::default()),
            actions: None,
            random_actions: None,
            kick: None,
            vanish_tol: None,
        })
    }

    fn with_control(preset: Preset, n_sites: usize, control: ControlSection) -> Self {
        ExperimentConfig {
            model: ModelSection {
                preset: Some(preset),
                h: None,
                g: None,
                n_sites,
            },
            shell: ShellSection::default(),
            control,
            reward: RewardParams::default(),
            dpos: None,
            time: TimeSection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let cfg = |msg: String| Error::Config(msg);
        let l = self.model.n_sites;
        if l < 2 {
            return Err(cfg(format!("L must be at least 2, got {l}")));
        }
        let cap = if self.output.allow_long { MAX_RUN_SITES } else { DESK_MAX_SITES };
        if l > cap {
            return Err(cfg(format!("L={l} exceeds the cap of {cap} (set output.allow_long for up to {MAX_RUN_SITES})")));
        }
        let (h, g) = match (self.model.preset, self.model.h, self.model.g) {
            (Some(p), None, None) => p.fields(),
            (None, Some(h), Some(g)) => (h, g),
            (Some(_), _, _) => return Err(cfg("model: give either a preset or explicit h and g, not both".into())),
            _ => return Err(cfg("model: need a preset or both h and g".into())),
        };
        if !h.is_finite() || !g.is_finite() {
            return Err(cfg("model fields must be finite".into()));
        }
        if !(self.shell.lo < self.shell.hi) {
            return Err(cfg(format!("shell lo {} must be below hi {}", self.shell.lo, self.shell.hi)));
        }
        self.reward.validate()?;
        let c = &self.control;
        let reject = |field: &str, present: bool| -> Result<()> {
            if present {
                Err(cfg(format!("control.{field} does not apply in {:?} mode", c.mode)))
            } else {
                Ok(())
            }
        };
        let (kind, default_dt, default_duration, default_every, default_kick) = match c.mode {
            Mode::Optimize => {
                reject("quench", c.quench.is_some())?;
                reject("actions", c.actions.is_some() || c.random_actions.is_some())?;
                let k = c.k.ok_or_else(|| cfg("optimize mode needs control.k".into()))?;
                if k == 0 || k > l {
                    return Err(cfg(format!("control.k={k} must be in 1..={l}")));
                }
                (ManifestKind::Local { k }, 0.002, 1.0, 50, 0.001)
            }
            Mode::Quench => {
                reject("k", c.k.is_some())?;
                reject("actions", c.actions.is_some() || c.random_actions.is_some())?;
                reject("vanish_tol", c.vanish_tol.is_some())?;
                let q = c.quench.unwrap_or_default();
                if !q.h.is_finite() || !q.g.is_finite() {
                    return Err(cfg("quench fields must be finite".into()));
                }
                (ManifestKind::Quench { h: q.h, g: q.g }, 0.01, 10.0, 10, 0.0)
            }
            Mode::Discrete => {
                reject("k", c.k.is_some())?;
                reject("quench", c.quench.is_some())?;
                reject("vanish_tol", c.vanish_tol.is_some())?;
                (ManifestKind::Discrete, 0.04, 24.0, 25, 0.0)
            }
        };
        let dt = self.time.dt.unwrap_or(default_dt);
        let kick = c.kick.unwrap_or(default_kick);
        if !(kick >= 0.0) {
            return Err(cfg(format!("kick duration must be non-negative, got {kick}")));
        }
        let actions = match (c.mode, &c.actions, c.random_actions) {
            (Mode::Discrete, Some(_), Some(_)) => {
                return Err(cfg("give control.actions or control.random_actions, not both".into()))
            }
            (Mode::Discrete, Some(a), None) => a.clone(),
            (Mode::Discrete, None, Some(r)) => super::runs::random_action_sequence(r.seed, r.length),
            (Mode::Discrete, None, None) => {
                return Err(cfg("discrete mode needs control.actions or control.random_actions".into()))
            }
            _ => Vec::new(),
        };
        if let Some(bad) = actions.iter().find(|&&a| a >= super::runs::DISCRETE_ACTIONS) {
            return Err(cfg(format!("action index {bad} outside 0..{}", super::runs::DISCRETE_ACTIONS)));
        }
        let steps = if c.mode == Mode::Discrete {
            if self.time.duration.is_some_and(|d| (d - actions.len() as f64 * dt).abs() > 1e-12) {
                return Err(cfg("time.duration disagrees with the action sequence length".into()));
            }
            actions.len()
        } else {
            steps_for(self.time.duration.unwrap_or(default_duration), dt)?
        };
        let sample_every = self.time.sample_every.unwrap_or(default_every);
        let entropy = self.time.entropy.unwrap_or(l % 2 == 0);
        if entropy && l % 2 != 0 {
            return Err(cfg("half-chain entropy needs even L".into()));
        }
        let dpos_eps = self.dpos.map_or(self.reward.epsilon, |d| d.epsilon);

        let mut raw = self.clone();
        raw.model.preset = None;
        raw.model.h = Some(h);
        raw.model.g = Some(g);
        raw.control.kick = Some(kick);
        if c.mode == Mode::Quench {
            raw.control.quench = Some(c.quench.unwrap_or_default());
        }
        if c.mode == Mode::Discrete {
            raw.control.actions = Some(actions.clone());
            raw.control.random_actions = None;
        }
        raw.dpos = Some(DposSection { epsilon: dpos_eps });
        raw.time = TimeSection {
            dt: Some(dt),
            duration: Some(steps as f64 * dt),
            sample_every: Some(sample_every),
            entropy: Some(entropy),
        };
        Ok(ResolvedConfig {
            raw,
            model: IsingParams { h, g, n_sites: l },
            mode: c.mode,
            kind,
            dt,
            steps,
            sample_every,
            entropy,
            kick,
            dpos_eps,
            actions,
        })
    }
}
