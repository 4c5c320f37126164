use std::io::Write;

use hran::model::Hran;

use crate::{exit, ParamsArgs, RunConfig};

pub fn run(a: &ParamsArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let rc = RunConfig::resolve(&a.overrides, &[])?;
    let count = Hran::new(&rc.model)?.count_params();
    if a.kv {
        write!(out, "{}", count.key_values())?;
    } else {
        write!(out, "{}", count.table())?;
    }
    Ok(exit::OK)
}
