use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::autodiff::{Backend, Tape};
use crate::data::{images_to_tensor, tensor_to_image, Dataset, DegradationSpec, Pair};
use crate::error::{Error, Result};
use crate::metrics::{psnr_y, EvalProtocol};
use crate::model::HranModel;
use crate::rng::Rng;
use crate::tensor::Tensor4;

use super::{lr_at, Adam, Checkpoint, TrainConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct LogEntry {
    /// 0-based index of the step.
    pub iter: u64,
    pub lr: f64,
    pub loss: f32,
    pub val_psnr: Option<f64>,
}

impl fmt::Display for LogEntry {
    /// Tab-separated `iter lr loss [val_psnr]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.iter, self.lr, self.loss)?;
        if let Some(p) = self.val_psnr {
            write!(f, "\t{p:.4}")?;
        }
        Ok(())
    }
}

pub const LOG_FILE: &str = "train.log";
pub const FINAL_CHECKPOINT: &str = "final.hrn";

pub fn checkpoint_name(iteration: u64) -> String {
    format!("iter_{iteration:08}.hrn")
}

/// Mean Y-channel PSNR of `model` over `pairs`, shaving `scale` pixels.
/// Identical pairs (infinite PSNR) are skipped.
pub fn validation_psnr(model: &HranModel, pairs: &[Pair]) -> Result<f64> {
    let protocol = EvalProtocol::for_scale(model.config().scale);
    let mut total = 0.0;
    let mut n = 0usize;
    for p in pairs {
        let x: Tensor4<f32> = images_to_tensor(&[&p.lr])?;
        let sr = tensor_to_image(&model.super_resolve(&x)?, 0)?;
        let v = psnr_y(&sr, &p.hr, protocol)?;
        if v.is_finite() {
            total += v;
            n += 1;
        }
    }
    Ok(if n == 0 { f64::INFINITY } else { total / n as f64 })
}

pub struct Trainer {
    pub model: HranModel,
    pub optim: Adam<f32>,
    pub config: TrainConfig,
    pub degradation: DegradationSpec,
    /// Completed steps; the next step has this index.
    pub iteration: u64,
    pub log: Vec<LogEntry>,
}

impl Trainer {
    pub fn new(model: HranModel, config: TrainConfig, degradation: DegradationSpec) -> Result<Self> {
        config.validate()?;
        if degradation.scale != model.config().scale {
            return Err(Error::Config(format!(
                "degradation scale {} differs from model scale {}",
                degradation.scale,
                model.config().scale
            )));
        }
        let optim = Adam::new(&model.params);
        Ok(Trainer {
            model,
            optim,
            config,
            degradation,
            iteration: 0,
            log: Vec::new(),
        })
    }

    /// Continues from a checkpoint. Training settings come from `config`
    /// when given, otherwise from the checkpoint.
    pub fn resume(ckpt: Checkpoint, config: Option<TrainConfig>) -> Result<Self> {
        let model = ckpt.to_model()?;
        let config = config.unwrap_or(ckpt.train);
        config.validate()?;
        let optim = ckpt.optim.unwrap_or_else(|| Adam::new(&model.params));
        Ok(Trainer {
            model,
            optim,
            config,
            degradation: ckpt.degradation,
            iteration: ckpt.iteration,
            log: Vec::new(),
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            model: self.model.config().clone(),
            train: self.config.clone(),
            degradation: self.degradation.clone(),
            iteration: self.iteration,
            params: self.model.params.clone(),
            optim: Some(self.optim.clone()),
        }
    }

    pub fn lr(&self) -> f64 {
        lr_at(self.iteration, self.config.base_lr, self.config.halve_every)
    }

    /// One optimization step on a batch drawn from the iteration's own
    /// random stream. Returns the loss before the update.
    pub fn step(&mut self, data: &Dataset) -> Result<f32> {
        let mut rng = Rng::stream(self.config.seed(), self.iteration);
        let (lr_batch, hr_batch) = data.sample_batch(self.config.batch_size, self.config.patch_size, &mut rng)?;

        let mut tape = Tape::<f32>::new();
        let p = self.model.params.bind(&mut tape);
        let x = tape.constant(lr_batch);
        let y = tape.constant(hr_batch);
        let sr = self.model.arch.forward(&mut tape, &p, &x)?;
        let loss = tape.l1_loss(&sr, &y)?;
        let loss_value = tape.value(&loss).item();
        let mut grads = tape.backward(loss)?;
        let named: Vec<(String, Tensor4<f32>)> = p.iter().map(|(n, v)| (n.to_string(), grads.take(*v))).collect();
        let lr = self.lr();
        self.optim.step(&mut self.model.params, &named, lr)?;
        self.iteration += 1;
        Ok(loss_value)
    }

    /// Steps until `until` iterations are complete (capped at the
    /// configured total). With `out_dir`, appends to the log file and
    /// writes periodic and final checkpoints there. On a non-finite value
    /// the pre-step state is dumped as `final.hrn.nan` and the error
    /// returned.
    pub fn run(&mut self, data: &Dataset, val: &[Pair], out_dir: Option<&Path>, until: u64) -> Result<()> {
        let until = until.min(self.config.total());
        let mut log_file = match out_dir {
            Some(d) => {
                std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
                let p = d.join(LOG_FILE);
                let f = std::fs::OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(&p)
                    .map_err(|e| Error::io(&p, e))?;
                Some((f, p))
            }
            None => None,
        };
        while self.iteration < until {
            let t = self.iteration;
            let lr = self.lr();
            let before = out_dir.map(|_| self.checkpoint());
            let loss = match self.step(data) {
                Ok(l) => l,
                Err(e @ Error::NonFinite { .. }) => {
                    if let (Some(d), Some(ck)) = (out_dir, before) {
                        ck.save(&d.join(format!("{FINAL_CHECKPOINT}.nan")))?;
                    }
                    return Err(e);
                }
                Err(e) => return Err(e),
            };
            let done = t + 1;
            let val_psnr = if self.config.val_every > 0 && done.is_multiple_of(self.config.val_every) && !val.is_empty() {
                Some(validation_psnr(&self.model, val)?)
            } else {
                None
            };
            if t.is_multiple_of(self.config.log_every) || val_psnr.is_some() {
                let entry = LogEntry {
                    iter: t,
                    lr,
                    loss,
                    val_psnr,
                };
                if let Some((f, p)) = &mut log_file {
                    writeln!(f, "{entry}").map_err(|e| Error::io(p.as_path(), e))?;
                }
                self.log.push(entry);
            }
            if let Some(d) = out_dir {
                if self.config.checkpoint_every > 0 && done.is_multiple_of(self.config.checkpoint_every) {
                    self.checkpoint().save(&d.join(checkpoint_name(done)))?;
                }
            }
        }
        if let Some(d) = out_dir {
            self.checkpoint().save(&d.join(FINAL_CHECKPOINT))?;
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: HranModel,
    pub log: Vec<LogEntry>,
    pub checkpoint: Option<PathBuf>,
}

/// Full run from a fresh model to `config.total_iters`.
pub fn train(
    model: HranModel,
    data: &Dataset,
    val: &[Pair],
    config: TrainConfig,
    out_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    let mut t = Trainer::new(model, config, data.spec.clone())?;
    let total = t.config.total();
    t.run(data, val, out_dir, total)?;
    Ok(TrainOutcome {
        checkpoint: out_dir.map(|d| d.join(FINAL_CHECKPOINT)),
        model: t.model,
        log: t.log,
    })
}
