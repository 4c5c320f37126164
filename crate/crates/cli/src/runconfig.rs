use std::path::Path;

use anyhow::Context as _;
use hran::config::{self, Entry, KeyValue};
use hran::data::DegradationSpec;
use hran::train::TrainConfig;
use hran::ModelConfig;

use crate::Overrides;

/// File name of the resolved configuration written next to a run's outputs.
pub const FROZEN_CONFIG: &str = "config.txt";

/// Model, training and degradation settings resolved from defaults, an
/// optional file and command-line overrides, in that order of precedence.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub degradation: DegradationSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        let model = ModelConfig::default();
        RunConfig {
            degradation: DegradationSpec::bi(model.scale),
            model,
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    fn apply(&mut self, entries: &[Entry]) -> hran::Result<()> {
        config::apply(entries, &mut [&mut self.model, &mut self.train, &mut self.degradation])?;
        self.degradation.scale = self.model.scale;
        Ok(())
    }

    pub fn from_text(text: &str) -> hran::Result<Self> {
        let mut rc = RunConfig::default();
        rc.apply(&config::parse(text)?)?;
        Ok(rc)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| hran::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_text(&text).with_context(|| format!("{}", path.display()))
    }

    /// Applies `key = value` overrides given on the command line.
    pub fn override_with<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> hran::Result<()> {
        let entries: Vec<Entry> = pairs
            .into_iter()
            .map(|(k, v)| Entry {
                key: k.to_string(),
                value: v.to_string(),
                line: 0,
            })
            .collect();
        self.apply(&entries)
            .map_err(|e| match e {
                hran::Error::Config(m) => hran::Error::Config(format!("command-line override: {m}")),
                other => other,
            })
    }

    /// Defaults, then `--config`, then the override flags, then `extra`.
    pub fn resolve(o: &Overrides, extra: &[(&str, Option<&str>)]) -> anyhow::Result<Self> {
        let mut rc = match &o.config {
            Some(p) => Self::load(p)?,
            None => RunConfig::default(),
        };
        let named = [
            ("num_rafgs", &o.num_rafgs),
            ("blocks_per_rafg", &o.blocks_per_rafg),
            ("channels", &o.channels),
            ("scale", &o.scale),
            ("attention", &o.attention),
            ("attention_placement", &o.attention_placement),
            ("banks", &o.banks),
            ("upsample_channels", &o.upsample_channels),
            ("degradation", &o.degradation),
        ];
        let mut pairs: Vec<(&str, &str)> = named
            .iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (*k, v)))
            .collect();
        for s in &o.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| hran::Error::Config(format!("--set expects KEY=VALUE, got `{s}`")))?;
            pairs.push((k.trim(), v.trim()));
        }
        pairs.extend(extra.iter().filter_map(|(k, v)| v.map(|v| (*k, v))));
        rc.override_with(pairs)?;
        rc.model.validate()?;
        Ok(rc)
    }

    /// Every key, suitable for [`RunConfig::from_text`].
    pub fn render(&self) -> String {
        let mut e = self.model.entries();
        e.extend(self.train.entries());
        e.extend(self.degradation.entries());
        config::render(e)
    }
}
