//! L1 objective, Adam, the step schedule, the training loop and
//! checkpoints.

mod adam;
mod checkpoint;
mod config;
mod trainer;

pub use adam::Adam;
pub use checkpoint::{Checkpoint, MAGIC, VERSION};
pub use config::{lr_at, TrainConfig};
pub use trainer::{
    checkpoint_name, train, validation_psnr, LogEntry, TrainOutcome, Trainer, FINAL_CHECKPOINT, LOG_FILE,
};
