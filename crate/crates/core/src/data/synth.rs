use crate::rng::Rng;

use super::image::ImageRGB8;

/// Procedural test image: a smooth two-axis gradient overlaid with
/// flat-colored rectangles, discs and a stripe band. Deterministic in
/// `seed`.
pub fn synthetic_image(width: usize, height: usize, seed: u64) -> ImageRGB8 {
    let mut r = Rng::seeded(seed);
    let color = |r: &mut Rng| [r.uniform(0.05, 0.95), r.uniform(0.05, 0.95), r.uniform(0.05, 0.95)];
    let g0 = color(&mut r);
    let gx = color(&mut r);
    let gy = color(&mut r);
    let (wf, hf) = (width as f64, height as f64);

    enum Shape {
        Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
        Disc { cx: f64, cy: f64, rad: f64 },
        Stripes { period: f64, angle: f64 },
    }
    let mut shapes = Vec::new();
    let n = 3 + r.below(4) as usize;
    for _ in 0..n {
        let s = match r.below(3) {
            0 => {
                let (ax, bx) = (r.uniform(0.0, wf), r.uniform(0.0, wf));
                let (ay, by) = (r.uniform(0.0, hf), r.uniform(0.0, hf));
                Shape::Rect {
                    x0: ax.min(bx),
                    y0: ay.min(by),
                    x1: ax.max(bx),
                    y1: ay.max(by),
                }
            }
            1 => Shape::Disc {
                cx: r.uniform(0.0, wf),
                cy: r.uniform(0.0, hf),
                rad: r.uniform(0.08, 0.3) * wf.min(hf),
            },
            _ => Shape::Stripes {
                period: r.uniform(6.0, 14.0),
                angle: r.uniform(0.0, std::f64::consts::PI),
            },
        };
        shapes.push((s, color(&mut r)));
    }

    ImageRGB8::from_fn(width, height, |x, y| {
        let (u, v) = (x as f64 / wf, y as f64 / hf);
        let mut px = [0.0; 3];
        for c in 0..3 {
            px[c] = g0[c] * (1.0 - 0.5 * (u + v)) + 0.5 * (gx[c] * u + gy[c] * v);
        }
        let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
        for (s, col) in &shapes {
            let inside = match *s {
                Shape::Rect { x0, y0, x1, y1 } => fx >= x0 && fx < x1 && fy >= y0 && fy < y1,
                Shape::Disc { cx, cy, rad } => (fx - cx).powi(2) + (fy - cy).powi(2) < rad * rad,
                Shape::Stripes { period, angle } => {
                    let t = fx * angle.cos() + fy * angle.sin();
                    (t / period).rem_euclid(1.0) < 0.5 && fx < wf * 0.5
                }
            };
            if inside {
                px = *col;
            }
        }
        px.map(|p| (p * 255.0).round().clamp(0.0, 255.0) as u8)
    })
    .expect("positive size")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_varied() {
        assert_eq!(synthetic_image(20, 16, 3), synthetic_image(20, 16, 3));
        assert_ne!(synthetic_image(20, 16, 3), synthetic_image(20, 16, 4));
        let img = synthetic_image(32, 32, 1);
        let distinct: std::collections::BTreeSet<[u8; 3]> = (0..32).flat_map(|y| (0..32).map(move |x| (x, y))).map(|(x, y)| img.get(x, y)).collect();
        assert!(distinct.len() > 20);
    }
}
