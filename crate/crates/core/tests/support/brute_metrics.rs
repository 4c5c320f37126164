//! Direct double-loop PSNR and SSIM on the luma plane.

use hran::data::ImageRGB8;
use hran::Rng;

fn y(img: &ImageRGB8, shave: usize) -> Vec<Vec<f64>> {
    (shave..img.height() - shave)
        .map(|r| {
            (shave..img.width() - shave)
                .map(|c| {
                    let [red, green, blue] = img.get(c, r);
                    16.0 + (65.481 * red as f64 + 128.553 * green as f64 + 24.966 * blue as f64) / 255.0
                })
                .collect()
        })
        .collect()
}

pub fn psnr(a: &ImageRGB8, b: &ImageRGB8, shave: usize) -> f64 {
    let (ya, yb) = (y(a, shave), y(b, shave));
    let mut sse = 0.0;
    let mut n = 0.0;
    for r in 0..ya.len() {
        for c in 0..ya[0].len() {
            sse += (ya[r][c] - yb[r][c]).powi(2);
            n += 1.0;
        }
    }
    10.0 * (255.0f64 * 255.0 / (sse / n)).log10()
}

pub fn ssim(a: &ImageRGB8, b: &ImageRGB8, shave: usize) -> f64 {
    let (ya, yb) = (y(a, shave), y(b, shave));
    let mut win = [[0.0f64; 11]; 11];
    let mut norm = 0.0;
    for (i, row) in win.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            *v = (-(di * di + dj * dj) / (2.0 * 1.5 * 1.5)).exp();
            norm += *v;
        }
    }
    let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
    let (h, w) = (ya.len(), ya[0].len());
    let mut total = 0.0;
    let mut count = 0.0;
    for r in 0..=h - 11 {
        for c in 0..=w - 11 {
            let (mut ma, mut mb) = (0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let g = win[i][j] / norm;
                    ma += g * ya[r + i][c + j];
                    mb += g * yb[r + i][c + j];
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let g = win[i][j] / norm;
                    let (da, db) = (ya[r + i][c + j] - ma, yb[r + i][c + j] - mb);
                    va += g * da * da;
                    vb += g * db * db;
                    cov += g * da * db;
                }
            }
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1.0;
        }
    }
    total / count
}

/// A random image and a noisy copy of it.
pub fn random_pair(size: usize, seed: u64) -> (ImageRGB8, ImageRGB8) {
    let mut rng = Rng::seeded(seed);
    let a = ImageRGB8::from_fn(size, size, |_, _| [0; 3].map(|_: u8| rng.below(256) as u8)).unwrap();
    let amp = 5 + rng.below(60) as i64;
    let b = ImageRGB8::from_fn(size, size, |x, yy| {
        a.get(x, yy)
            .map(|v| (v as i64 + rng.below(2 * amp as u64 + 1) as i64 - amp).clamp(0, 255) as u8)
    })
    .unwrap();
    (a, b)
}
