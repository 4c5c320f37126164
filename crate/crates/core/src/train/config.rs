use crate::config::{parse_value, KeyValue};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// LR patch side.
    pub patch_size: usize,
    pub base_lr: f64,
    pub halve_every: u64,
    /// Required; there is no sensible default.
    pub total_iters: Option<u64>,
    /// Required; nothing is seeded from the clock.
    pub seed: Option<u64>,
    /// 0 disables periodic checkpoints (the final one is always written).
    pub checkpoint_every: u64,
    pub log_every: u64,
    /// 0 disables validation.
    pub val_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            patch_size: 64,
            base_lr: 1e-3,
            halve_every: 200_000,
            total_iters: None,
            seed: None,
            checkpoint_every: 10_000,
            log_every: 100,
            val_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let total = self
            .total_iters
            .ok_or_else(|| Error::Config("total_iters is required".into()))?;
        if self.seed.is_none() {
            return Err(Error::Config("seed is required".into()));
        }
        if total == 0 || self.batch_size == 0 || self.patch_size == 0 || self.halve_every == 0 || self.log_every == 0 {
            return Err(Error::Config(
                "total_iters, batch_size, patch_size, halve_every and log_every must be positive".into(),
            ));
        }
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return Err(Error::Config(format!("base_lr must be positive, got {}", self.base_lr)));
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.total_iters.unwrap_or(0)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

/// `base_lr * 0.5^floor(iteration / halve_every)`.
pub fn lr_at(iteration: u64, base_lr: f64, halve_every: u64) -> f64 {
    let halvings = iteration / halve_every.max(1);
    base_lr * 0.5f64.powi(halvings.min(i32::MAX as u64) as i32)
}

impl KeyValue for TrainConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "patch_size" => self.patch_size = parse_value(key, value)?,
            "base_lr" => self.base_lr = parse_value(key, value)?,
            "halve_every" => self.halve_every = parse_value(key, value)?,
            "total_iters" => self.total_iters = Some(parse_value(key, value)?),
            "seed" => self.seed = Some(parse_value(key, value)?),
            "checkpoint_every" => self.checkpoint_every = parse_value(key, value)?,
            "log_every" => self.log_every = parse_value(key, value)?,
            "val_every" => self.val_every = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        let mut e = vec![
            ("batch_size", self.batch_size.to_string()),
            ("patch_size", self.patch_size.to_string()),
            ("base_lr", format!("{:?}", self.base_lr)),
            ("halve_every", self.halve_every.to_string()),
        ];
        if let Some(t) = self.total_iters {
            e.push(("total_iters", t.to_string()));
        }
        if let Some(s) = self.seed {
            e.push(("seed", s.to_string()));
        }
        e.extend([
            ("checkpoint_every", self.checkpoint_every.to_string()),
            ("log_every", self.log_every.to_string()),
            ("val_every", self.val_every.to_string()),
        ]);
        e
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config;

    #[test]
    fn schedule_boundaries() {
        assert_eq!(lr_at(0, 1e-3, 200_000), 1e-3);
        assert_eq!(lr_at(199_999, 1e-3, 200_000), 1e-3);
        assert_eq!(lr_at(200_000, 1e-3, 200_000), 5e-4);
        assert_eq!(lr_at(399_999, 1e-3, 200_000), 5e-4);
        assert_eq!(lr_at(400_000, 1e-3, 200_000), 2.5e-4);
    }

    #[test]
    fn required_fields() {
        let mut c = TrainConfig::default();
        assert!(c.validate().unwrap_err().to_string().contains("total_iters"));
        c.total_iters = Some(10);
        assert!(c.validate().unwrap_err().to_string().contains("seed"));
        c.seed = Some(0);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn text_round_trip() {
        let c = TrainConfig {
            total_iters: Some(500),
            seed: Some(7),
            base_lr: 2e-4,
            ..TrainConfig::default()
        };
        let mut back = TrainConfig::default();
        config::apply(&config::parse(&config::render(c.entries())).unwrap(), &mut [&mut back]).unwrap();
        assert_eq!(back, c);
    }
}
