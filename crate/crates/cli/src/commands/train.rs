use std::io::Write;

use anyhow::Context as _;
use hran::data::Dataset;
use hran::train::{Trainer, FINAL_CHECKPOINT};
use hran::HranModel;

use super::load_checkpoint;
use crate::runconfig::FROZEN_CONFIG;
use crate::{exit, RunConfig, TrainArgs};

pub fn run(a: &TrainArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let data_dir = a
        .data
        .as_deref()
        .ok_or_else(|| hran::Error::Data("no training data directory given (--data DIR)".into()))?;
    let seed = a.seed.map(|s| s.to_string());
    let iters = a.iters.map(|s| s.to_string());
    let mut rc = RunConfig::resolve(
        &a.overrides,
        &[
            ("seed", seed.as_deref()),
            ("total_iters", iters.as_deref()),
            ("batch_size", a.batch_size.as_deref()),
            ("patch_size", a.patch_size.as_deref()),
            ("base_lr", a.lr.as_deref()),
            ("halve_every", a.halve_every.as_deref()),
        ],
    )?;
    let resumed = a.resume.as_deref().map(load_checkpoint).transpose()?;
    if let Some(ck) = &resumed {
        rc.model = ck.model.clone();
        rc.degradation = ck.degradation.clone();
    }
    rc.train.validate()?;

    let data = Dataset::open(data_dir, rc.degradation.clone())?;
    let val = match &a.val {
        Some(d) => Dataset::open(d, rc.degradation.clone())?.pairs,
        None => Vec::new(),
    };

    std::fs::create_dir_all(&a.out).map_err(|e| hran::Error::io(&a.out, e))?;
    let frozen = a.out.join(FROZEN_CONFIG);
    std::fs::write(&frozen, rc.render()).map_err(|e| hran::Error::io(&frozen, e))?;

    let mut trainer = match resumed {
        Some(ck) => Trainer::resume(ck, Some(rc.train.clone()))?,
        None => {
            let model = HranModel::new(&rc.model, rc.train.seed())?;
            Trainer::new(model, rc.train.clone(), rc.degradation.clone())?
        }
    };
    let total = rc.train.total();
    trainer
        .run(&data, &val, Some(&a.out), total)
        .with_context(|| format!("training into {}", a.out.display()))?;
    for e in &trainer.log {
        writeln!(out, "{e}")?;
    }
    writeln!(out, "wrote {}", a.out.join(FINAL_CHECKPOINT).display())?;
    Ok(exit::OK)
}
