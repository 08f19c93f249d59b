//! Experiment configuration: a TOML file flattened to dotted keys, with
//! `key=value` overrides on top, resolved against built-in defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use toml::Value;

use super::schedule::SessionSchedule;
use crate::error::{Error, Result};
use crate::estimation::{Generator, LossConfig, PretrainConfig, Prior};
use crate::model::{Family, ItemBank, SensoryMemory, TimeWindows};
use crate::rl::PpoConfig;
use crate::util::fingerprint_str;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TutorKind {
    Random,
    Leitner,
    Threshold,
    Rl,
}

impl TutorKind {
    pub const ALL: [TutorKind; 4] = [
        TutorKind::Random,
        TutorKind::Leitner,
        TutorKind::Threshold,
        TutorKind::Rl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TutorKind::Random => "random",
            TutorKind::Leitner => "leitner",
            TutorKind::Threshold => "threshold",
            TutorKind::Rl => "rl",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown tutor `{name}` (expected random, leitner, threshold or rl)"
                ))
            })
    }
}

impl fmt::Display for TutorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

/// Inner-model update settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationConfig {
    /// Full-batch steps per session.
    pub epochs: usize,
    pub lr: f64,
    /// The learning rate falls linearly to zero over this many sessions' worth
    /// of steps, then restarts.
    pub lr_period_sessions: usize,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            epochs: 10,
            lr: 1e-2,
            lr_period_sessions: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub tutor: TutorKind,
    pub n_items: usize,
    pub n_skills: usize,
    /// Item-to-skill CSV replacing the round-robin map.
    pub bank_path: Option<PathBuf>,
    pub windows: TimeWindows,
    pub memory: SensoryMemory,
    pub schedule: SessionSchedule,
    /// Distributions of the synthetic pretraining population.
    pub generator: Generator,
    /// Distributions simulated students are drawn from.
    pub student_generator: Generator,
    pub pretrain: PretrainConfig,
    pub loss: LossConfig,
    pub estimation: EstimationConfig,
    pub leitner_intervals: Vec<usize>,
    pub threshold: f64,
    pub ppo: PpoConfig,
    pub hidden: usize,
    /// Delay after a presentation at which reward and metrics are measured.
    pub probe_offset_secs: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            tutor: TutorKind::Random,
            n_items: 30,
            n_skills: 10,
            bank_path: None,
            windows: TimeWindows::default(),
            memory: SensoryMemory::default(),
            schedule: SessionSchedule::default(),
            generator: Generator::default(),
            student_generator: Generator::default(),
            pretrain: PretrainConfig::default(),
            loss: LossConfig::default(),
            estimation: EstimationConfig::default(),
            leitner_intervals: vec![1, 2, 4, 8, 16],
            threshold: 0.9,
            ppo: PpoConfig::default(),
            hidden: 128,
            probe_offset_secs: 1,
        }
    }
}

/// Flat `dotted.key → value` view of a configuration.
pub type Settings = BTreeMap<String, Value>;

fn int(x: usize) -> Value {
    Value::Integer(x as i64)
}

fn ints(xs: impl IntoIterator<Item = u64>) -> Value {
    Value::Array(xs.into_iter().map(|x| Value::Integer(x as i64)).collect())
}

fn family_keys(prefix: &str, g: &Generator, out: &mut Settings) {
    for f in Family::ALL {
        let p = g.get(f);
        out.insert(format!("{prefix}.{f}_mu"), Value::Float(p.mu));
        out.insert(format!("{prefix}.{f}_sigma"), Value::Float(p.sigma));
    }
}

impl ExperimentConfig {
    /// Every key with its value.
    pub fn to_settings(&self) -> Settings {
        let mut s = Settings::new();
        let mut put = |k: &str, v: Value| {
            s.insert(k.to_string(), v);
        };
        put("tutor", Value::String(self.tutor.name().into()));
        put("items.count", int(self.n_items));
        put("items.skills", int(self.n_skills));
        put(
            "items.bank",
            Value::String(
                self.bank_path
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default(),
            ),
        );
        let finite = &self.windows.tau()[..self.windows.len() - 1];
        put(
            "windows.finite_secs",
            Value::Array(finite.iter().map(|&t| Value::Float(t)).collect()),
        );
        put("memory.h", Value::Float(self.memory.h));
        put("memory.f", Value::Float(self.memory.f));
        put("memory.dt_unit_secs", Value::Float(self.memory.dt_unit_secs));
        put("schedule.days", int(self.schedule.days));
        put("schedule.items_per_session", int(self.schedule.items_per_session));
        put("schedule.step_gap_secs", int(self.schedule.step_gap_secs as usize));
        put(
            "schedule.session_offsets_secs",
            ints(self.schedule.session_offsets_secs.iter().copied()),
        );
        put("pretrain.population", int(self.pretrain.population));
        put("pretrain.epochs", int(self.pretrain.epochs));
        put("pretrain.lr", Value::Float(self.pretrain.lr));
        for f in Family::ALL {
            put(&format!("loss.c_{f}"), Value::Float(self.loss.c[f as usize]));
        }
        put("loss.lambda", Value::Float(self.loss.lambda));
        put("estimation.epochs", int(self.estimation.epochs));
        put("estimation.lr", Value::Float(self.estimation.lr));
        put("estimation.lr_period_sessions", int(self.estimation.lr_period_sessions));
        put("leitner.boxes", int(self.leitner_intervals.len()));
        put(
            "leitner.intervals",
            ints(self.leitner_intervals.iter().map(|&i| i as u64)),
        );
        put("threshold.value", Value::Float(self.threshold));
        let p = &self.ppo;
        put("ppo.clip", Value::Float(p.clip));
        put("ppo.vf_coef", Value::Float(p.vf_coef));
        put("ppo.ent_coef", Value::Float(p.ent_coef));
        put("ppo.gamma", Value::Float(p.gamma));
        put("ppo.gae_lambda", Value::Float(p.gae_lambda));
        put("ppo.horizon", int(p.horizon));
        put("ppo.workers", int(p.workers));
        put("ppo.minibatch", int(p.minibatch));
        put("ppo.epochs", int(p.epochs));
        put("ppo.seq_len", int(p.seq_len));
        put("ppo.lr", Value::Float(p.lr));
        put("ppo.iters_per_session", int(p.iters_per_session));
        put("net.hidden", int(self.hidden));
        put("metrics.probe_offset_secs", int(self.probe_offset_secs as usize));
        family_keys("generator", &self.generator, &mut s);
        family_keys("student", &self.student_generator, &mut s);
        s
    }

    /// Builds a configuration from a complete key set and validates it.
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let r = Reader(s);
        let bank = r.string("items.bank")?;
        let family = |prefix: &str| -> Result<Generator> {
            let mut families = [Prior { mu: 0.0, sigma: 0.0 }; 5];
            for f in Family::ALL {
                families[f as usize] = Prior {
                    mu: r.float(&format!("{prefix}.{f}_mu"))?,
                    sigma: r.float(&format!("{prefix}.{f}_sigma"))?,
                };
            }
            Ok(Generator { families })
        };
        let mut c = [0.0; 5];
        for f in Family::ALL {
            c[f as usize] = r.float(&format!("loss.c_{f}"))?;
        }
        let cfg = ExperimentConfig {
            tutor: TutorKind::parse(&r.string("tutor")?)?,
            n_items: r.usize("items.count")?,
            n_skills: r.usize("items.skills")?,
            bank_path: (!bank.is_empty()).then(|| PathBuf::from(bank)),
            windows: TimeWindows::from_finite(&r.floats("windows.finite_secs")?)
                .map_err(|e| Error::Config(format!("windows.finite_secs: {e}")))?,
            memory: SensoryMemory {
                h: r.float("memory.h")?,
                f: r.float("memory.f")?,
                dt_unit_secs: r.float("memory.dt_unit_secs")?,
            },
            schedule: SessionSchedule {
                days: r.usize("schedule.days")?,
                items_per_session: r.usize("schedule.items_per_session")?,
                step_gap_secs: r.usize("schedule.step_gap_secs")? as u64,
                session_offsets_secs: r
                    .usizes("schedule.session_offsets_secs")?
                    .into_iter()
                    .map(|x| x as u64)
                    .collect(),
            },
            generator: family("generator")?,
            student_generator: family("student")?,
            pretrain: PretrainConfig {
                population: r.usize("pretrain.population")?,
                epochs: r.usize("pretrain.epochs")?,
                lr: r.float("pretrain.lr")?,
            },
            loss: LossConfig {
                c,
                lambda: r.float("loss.lambda")?,
            },
            estimation: EstimationConfig {
                epochs: r.usize("estimation.epochs")?,
                lr: r.float("estimation.lr")?,
                lr_period_sessions: r.usize("estimation.lr_period_sessions")?,
            },
            leitner_intervals: r.usizes("leitner.intervals")?,
            threshold: r.float("threshold.value")?,
            ppo: PpoConfig {
                clip: r.float("ppo.clip")?,
                vf_coef: r.float("ppo.vf_coef")?,
                ent_coef: r.float("ppo.ent_coef")?,
                gamma: r.float("ppo.gamma")?,
                gae_lambda: r.float("ppo.gae_lambda")?,
                horizon: r.usize("ppo.horizon")?,
                workers: r.usize("ppo.workers")?,
                minibatch: r.usize("ppo.minibatch")?,
                epochs: r.usize("ppo.epochs")?,
                seq_len: r.usize("ppo.seq_len")?,
                lr: r.float("ppo.lr")?,
                iters_per_session: r.usize("ppo.iters_per_session")?,
            },
            hidden: r.usize("net.hidden")?,
            probe_offset_secs: r.usize("metrics.probe_offset_secs")? as u64,
        };
        let boxes = r.usize("leitner.boxes")?;
        if boxes != cfg.leitner_intervals.len() {
            return Err(Error::Config(format!(
                "leitner.boxes = {boxes} but leitner.intervals has {} entries",
                cfg.leitner_intervals.len()
            )));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        if self.n_items == 0 || self.n_skills == 0 {
            return Err(Error::Config("items.count and items.skills must be positive".into()));
        }
        self.schedule.validate().map_err(cfg_err)?;
        self.memory.validate().map_err(cfg_err)?;
        self.generator.validate()?;
        self.student_generator.validate()?;
        self.loss.validate().map_err(cfg_err)?;
        self.ppo.validate()?;
        if self.leitner_intervals.is_empty() || self.leitner_intervals.contains(&0) {
            return Err(Error::Config("leitner.intervals must be non-empty and positive".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config("threshold.value must lie in [0, 1]".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Config("net.hidden must be positive".into()));
        }
        if self.estimation.lr.is_nan() || self.estimation.lr < 0.0 || self.pretrain.lr.is_nan() {
            return Err(Error::Config("learning rates must be non-negative".into()));
        }
        if self.probe_offset_secs >= self.schedule.step_gap_secs.max(1) && self.schedule.items_per_session > 1 {
            return Err(Error::Config(
                "metrics.probe_offset_secs must be shorter than the step gap".into(),
            ));
        }
        Ok(())
    }

    /// Defaults, then `file`, then `overrides` (`key=value`, value in TOML
    /// syntax or a bare string). Student distributions follow the pretraining
    /// generator unless set explicitly.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut explicit = Settings::new();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let table: toml::Table = text
                .parse()
                .map_err(|e: toml::de::Error| Error::Config(format!("{}: {e}", path.display())))?;
            flatten("", &table, &mut explicit);
        }
        for o in overrides {
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
            explicit.insert(key.trim().to_string(), parse_value(raw.trim()));
        }
        Self::resolve(explicit)
    }

    /// Applies explicitly set keys on top of the defaults.
    pub fn resolve(explicit: Settings) -> Result<Self> {
        let mut settings = Self::default().to_settings();
        for key in explicit.keys() {
            if !settings.contains_key(key) {
                return Err(Error::Config(format!("unknown configuration key `{key}`")));
            }
        }
        for (key, value) in &explicit {
            if let Some(rest) = key.strip_prefix("generator.") {
                let student = format!("student.{rest}");
                if !explicit.contains_key(&student) {
                    settings.insert(student, value.clone());
                }
            }
        }
        settings.extend(explicit);
        Self::from_settings(&settings)
    }

    /// `key = value` lines in key order; valid TOML.
    pub fn canonical(&self) -> String {
        self.to_settings()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Short hash of every setting except the tutor, so runs of different
    /// tutors under one configuration share it.
    pub fn hash(&self) -> String {
        let text: String = self
            .to_settings()
            .iter()
            .filter(|(k, _)| k.as_str() != "tutor")
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        fingerprint_str(&text)
    }

    /// The configured item bank.
    pub fn bank(&self) -> Result<ItemBank> {
        let bank = match &self.bank_path {
            Some(p) => ItemBank::read_csv(p)?,
            None => ItemBank::round_robin(self.n_items, self.n_skills)?,
        };
        if bank.n_items() != self.n_items || bank.n_skills() != self.n_skills {
            return Err(Error::Config(format!(
                "item bank has {} items over {} skills; config says {} over {}",
                bank.n_items(),
                bank.n_skills(),
                self.n_items,
                self.n_skills
            )));
        }
        Ok(bank)
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Settings) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

struct Reader<'a>(&'a Settings);

impl Reader<'_> {
    fn get(&self, key: &str) -> Result<&Value> {
        self.0
            .get(key)
            .ok_or_else(|| Error::Config(format!("missing configuration key `{key}`")))
    }

    fn wrong(key: &str, want: &str, v: &Value) -> Error {
        Error::Config(format!("`{key}` must be {want}, got {v}"))
    }

    fn float(&self, key: &str) -> Result<f64> {
        match self.get(key)? {
            Value::Float(x) => Ok(*x),
            Value::Integer(i) => Ok(*i as f64),
            v => Err(Self::wrong(key, "a number", v)),
        }
    }

    fn usize(&self, key: &str) -> Result<usize> {
        match self.get(key)? {
            Value::Integer(i) if *i >= 0 => Ok(*i as usize),
            v => Err(Self::wrong(key, "a non-negative integer", v)),
        }
    }

    fn string(&self, key: &str) -> Result<String> {
        match self.get(key)? {
            Value::String(s) => Ok(s.clone()),
            v => Err(Self::wrong(key, "a string", v)),
        }
    }

    fn array(&self, key: &str) -> Result<&Vec<Value>> {
        match self.get(key)? {
            Value::Array(a) => Ok(a),
            v => Err(Self::wrong(key, "an array", v)),
        }
    }

    fn floats(&self, key: &str) -> Result<Vec<f64>> {
        self.array(key)?
            .iter()
            .map(|v| match v {
                Value::Float(x) => Ok(*x),
                Value::Integer(i) => Ok(*i as f64),
                v => Err(Self::wrong(key, "an array of numbers", v)),
            })
            .collect()
    }

    fn usizes(&self, key: &str) -> Result<Vec<usize>> {
        self.array(key)?
            .iter()
            .map(|v| match v {
                Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                v => Err(Self::wrong(key, "an array of non-negative integers", v)),
            })
            .collect()
    }
}
