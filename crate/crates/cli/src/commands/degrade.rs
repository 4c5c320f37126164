use std::io::Write;

use hran::data::{degrade, list_pngs, DegradationSpec, ImageRGB8};

use crate::{exit, DegradeArgs};

pub fn run(a: &DegradeArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let spec = DegradationSpec {
        kind: a.deg.parse()?,
        bd_any_scale: a.bd_any_scale,
        ..DegradationSpec::bi(a.scale)
    };
    spec.validate()?;
    if !a.hr.is_dir() {
        return Err(hran::Error::Data(format!("{}: not a directory", a.hr.display())).into());
    }
    let files = list_pngs(&a.hr)?;
    if files.is_empty() {
        return Err(hran::Error::Data(format!("{}: no PNG images found", a.hr.display())).into());
    }
    std::fs::create_dir_all(&a.out).map_err(|e| hran::Error::io(&a.out, e))?;
    for f in files {
        let hr = ImageRGB8::load(&f)?;
        let lr = degrade(&hr, &spec).map_err(|e| hran::Error::Data(format!("{}: {e}", f.display())))?;
        let dst = a.out.join(f.file_name().unwrap_or_default());
        lr.save(&dst)?;
        writeln!(
            out,
            "{} {}x{} -> {} {}x{}",
            f.display(),
            hr.width(),
            hr.height(),
            dst.display(),
            lr.width(),
            lr.height()
        )?;
    }
    Ok(exit::OK)
}
