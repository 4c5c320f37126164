use std::io::Write;

use rayon::prelude::*;
use serde_json::json;

use hran::data::{images_to_tensor, tensor_to_image, upscale_bicubic, Dataset, Degradation, DegradationSpec, Pair};
use hran::metrics::{psnr_y, ssim_y, EvalProtocol};
use hran::HranModel;

use super::load_checkpoint;
use crate::{exit, Baseline, EvalArgs};

#[derive(Clone, Debug, PartialEq)]
pub struct ImageScore {
    pub name: String,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    /// Sorted by file name.
    pub images: Vec<ImageScore>,
    /// Mean over finite PSNR values; `inf` when none is finite.
    pub mean_psnr: f64,
    pub mean_ssim: f64,
    /// Images left out of the PSNR mean because their PSNR is infinite.
    pub excluded: usize,
}

pub enum Method<'a> {
    Model(&'a HranModel),
    Baseline(Baseline),
}

fn restore(method: &Method<'_>, pair: &Pair, scale: usize) -> hran::Result<hran::data::ImageRGB8> {
    match method {
        Method::Model(m) => tensor_to_image(&m.super_resolve(&images_to_tensor(&[&pair.lr])?)?, 0),
        Method::Baseline(Baseline::Bicubic) => upscale_bicubic(&pair.lr, scale),
        Method::Baseline(Baseline::Identity) => Ok(pair.hr.clone()),
    }
}

/// Scores every pair in parallel; the result order follows `data`.
pub fn evaluate(method: &Method<'_>, data: &Dataset, protocol: EvalProtocol) -> hran::Result<EvalReport> {
    let scale = data.spec.scale;
    let images = data
        .pairs
        .par_iter()
        .map(|p| {
            let sr = restore(method, p, scale)?;
            let named = |e: hran::Error| hran::Error::Data(format!("{}: {e}", p.name));
            Ok(ImageScore {
                name: p.name.clone(),
                psnr: psnr_y(&sr, &p.hr, protocol).map_err(named)?,
                ssim: ssim_y(&sr, &p.hr, protocol).map_err(named)?,
            })
        })
        .collect::<hran::Result<Vec<_>>>()?;
    let finite: Vec<f64> = images.iter().map(|s| s.psnr).filter(|v| v.is_finite()).collect();
    let mean_psnr = if finite.is_empty() {
        f64::INFINITY
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    Ok(EvalReport {
        mean_ssim: images.iter().map(|s| s.ssim).sum::<f64>() / images.len().max(1) as f64,
        excluded: images.len() - finite.len(),
        mean_psnr,
        images,
    })
}

fn fmt_psnr(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else {
        "inf".into()
    }
}

fn psnr_json(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!("inf")
    }
}

impl EvalReport {
    pub fn table(&self) -> String {
        let width = self.images.iter().map(|s| s.name.len()).max().unwrap_or(4).max(4);
        let mut s = format!("{:<width$}  {:>9}  {:>7}\n", "name", "psnr_y", "ssim_y");
        for i in &self.images {
            s += &format!("{:<width$}  {:>9}  {:>7.4}\n", i.name, fmt_psnr(i.psnr), i.ssim);
        }
        let mark = if self.excluded > 0 { "*" } else { "" };
        s += &format!("{:<width$}  {:>9}  {:>7.4}\n", "MEAN", format!("{}{mark}", fmt_psnr(self.mean_psnr)), self.mean_ssim);
        if self.excluded > 0 {
            s += &format!("* {} image(s) with infinite PSNR excluded from the PSNR mean\n", self.excluded);
        }
        s
    }

    pub fn json(&self) -> serde_json::Value {
        json!({
            "images": self.images.iter().map(|i| json!({
                "name": i.name,
                "psnr_y": psnr_json(i.psnr),
                "ssim_y": i.ssim,
            })).collect::<Vec<_>>(),
            "mean": { "psnr_y": psnr_json(self.mean_psnr), "ssim_y": self.mean_ssim },
            "excluded_infinite": self.excluded,
        })
    }
}

pub fn run(a: &EvalArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let ck = a.ckpt.as_deref().map(load_checkpoint).transpose()?;
    let scale = match (&ck, a.scale) {
        (Some(ck), Some(s)) if s != ck.model.scale => {
            return Err(hran::Error::Config(format!("--scale {s} does not match the x{} checkpoint", ck.model.scale)).into())
        }
        (Some(ck), _) => ck.model.scale,
        (None, Some(s)) => s,
        (None, None) => return Err(hran::Error::Config("--scale is required with --baseline".into()).into()),
    };
    let kind = match (&a.deg, &ck) {
        (Some(d), _) => d.parse()?,
        (None, Some(ck)) => ck.degradation.kind,
        (None, None) => Degradation::Bi,
    };
    let mut spec = ck.as_ref().map_or_else(|| DegradationSpec::bi(scale), |c| c.degradation.clone());
    spec.kind = kind;
    spec.scale = scale;
    spec.bd_any_scale |= a.bd_any_scale;
    let data = Dataset::open(&a.hr, spec)?;
    let protocol = EvalProtocol {
        shave: a.shave.unwrap_or(scale),
    };
    let model = ck.as_ref().map(|c| c.to_model()).transpose()?;
    let method = match (&model, a.baseline) {
        (Some(m), _) => Method::Model(m),
        (None, Some(b)) => Method::Baseline(b),
        (None, None) => unreachable!("clap requires --ckpt or --baseline"),
    };
    let report = evaluate(&method, &data, protocol)?;
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report.json())?)?;
    } else {
        write!(out, "{}", report.table())?;
    }
    Ok(exit::OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(psnrs: &[f64]) -> EvalReport {
        let images: Vec<ImageScore> = psnrs
            .iter()
            .enumerate()
            .map(|(i, &p)| ImageScore { name: format!("{i}.png"), psnr: p, ssim: 1.0 })
            .collect();
        let finite: Vec<f64> = psnrs.iter().copied().filter(|v| v.is_finite()).collect();
        EvalReport {
            mean_psnr: if finite.is_empty() { f64::INFINITY } else { finite.iter().sum::<f64>() / finite.len() as f64 },
            mean_ssim: 1.0,
            excluded: psnrs.len() - finite.len(),
            images,
        }
    }

    #[test]
    fn infinite_values_print_as_inf_with_footnote() {
        let t = report(&[30.0, f64::INFINITY]).table();
        assert!(t.contains("inf"), "{t}");
        assert!(t.contains("30.0000*"), "{t}");
        assert!(t.contains("1 image(s) with infinite PSNR"), "{t}");
        let all = report(&[f64::INFINITY]).table();
        assert!(all.lines().any(|l| l.starts_with("MEAN") && l.contains("inf*")), "{all}");
    }

    #[test]
    fn json_uses_inf_string() {
        let j = report(&[f64::INFINITY, 20.0]).json();
        assert_eq!(j["images"][0]["psnr_y"], "inf");
        assert_eq!(j["mean"]["psnr_y"], 20.0);
        assert_eq!(j["excluded_infinite"], 1);
    }
}
