//! Independent straight-line evaluation of the parallel-LCA network,
//! written with plain nested loops over the named weights.
#![allow(clippy::needless_range_loop)]

use hran::autodiff::{Backend, Eager};
use hran::model::{Hran, ModelConfig};
use hran::nn::ParamStore;
use hran::{Rng, Tensor4};

/// `[channel][y][x]`
type Map = Vec<Vec<Vec<f64>>>;

fn weight(p: &ParamStore<f64>, name: &str) -> Tensor4<f64> {
    p.get(name).unwrap().clone()
}

/// Effective kernel `[co][ci][ky][kx]` of a weight-normalized conv.
fn kernel(p: &ParamStore<f64>, conv: &str) -> Vec<Vec<Vec<Vec<f64>>>> {
    let v = weight(p, &format!("{conv}.v"));
    let g = weight(p, &format!("{conv}.g"));
    let [co, ci, kh, kw] = v.shape().dims();
    (0..co)
        .map(|o| {
            let mut norm = 0.0;
            for i in 0..ci {
                for y in 0..kh {
                    for x in 0..kw {
                        norm += v.at(o, i, y, x).powi(2);
                    }
                }
            }
            let s = g.at(o, 0, 0, 0) / norm.sqrt();
            (0..ci)
                .map(|i| (0..kh).map(|y| (0..kw).map(|x| v.at(o, i, y, x) * s).collect()).collect())
                .collect()
        })
        .collect()
}

fn conv(p: &ParamStore<f64>, name: &str, x: &Map) -> Map {
    let k = kernel(p, name);
    let b = weight(p, &format!("{name}.bias"));
    let (h, w) = (x[0].len(), x[0][0].len());
    let ks = k[0][0].len();
    let pad = (ks / 2) as isize;
    let mut out = vec![vec![vec![0.0; w]; h]; k.len()];
    for (o, ko) in k.iter().enumerate() {
        for y in 0..h {
            for xx in 0..w {
                let mut acc = b.at(o, 0, 0, 0);
                for (i, ki) in ko.iter().enumerate() {
                    for dy in 0..ks {
                        for dx in 0..ks {
                            let sy = y as isize + dy as isize - pad;
                            let sx = xx as isize + dx as isize - pad;
                            if sy >= 0 && sx >= 0 && (sy as usize) < h && (sx as usize) < w {
                                acc += ki[dy][dx] * x[i][sy as usize][sx as usize];
                            }
                        }
                    }
                }
                out[o][y][xx] = acc;
            }
        }
    }
    out
}

fn add(a: &Map, b: &Map) -> Map {
    a.iter()
        .zip(b)
        .map(|(ca, cb)| ca.iter().zip(cb).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect()).collect())
        .collect()
}

fn scale(a: &Map, s: f64) -> Map {
    a.iter().map(|c| c.iter().map(|r| r.iter().map(|v| v * s).collect()).collect()).collect()
}

fn relu(a: &Map) -> Map {
    a.iter().map(|c| c.iter().map(|r| r.iter().map(|v| v.max(0.0)).collect()).collect()).collect()
}

fn lca(p: &ParamStore<f64>, name: &str, u: &Map) -> Map {
    let w = weight(p, &format!("{name}.w"));
    let z: Vec<f64> = u
        .iter()
        .map(|c| c.iter().flatten().sum::<f64>() / (c.len() * c[0].len()) as f64)
        .collect();
    u.iter()
        .enumerate()
        .map(|(o, c)| {
            let logit: f64 = z.iter().enumerate().map(|(i, zi)| w.at(o, i, 0, 0) * zi).sum();
            let alpha = 1.0 / (1.0 + (-logit).exp());
            c.iter().map(|r| r.iter().map(|v| v * alpha).collect()).collect()
        })
        .collect()
}

/// With `zero_lca` every attention gate is replaced by the constant 0.5.
fn attend(p: &ParamStore<f64>, name: &str, u: &Map, zero_lca: bool) -> Map {
    if zero_lca {
        scale(u, 0.5)
    } else {
        lca(p, name, u)
    }
}

fn concat(parts: &[Map]) -> Map {
    parts.iter().flatten().cloned().collect()
}

fn shuffle(x: &Map, r: usize) -> Map {
    let oc = x.len() / (r * r);
    let (h, w) = (x[0].len(), x[0][0].len());
    let mut out = vec![vec![vec![0.0; w * r]; h * r]; oc];
    for c in 0..oc {
        for y in 0..h * r {
            for xx in 0..w * r {
                out[c][y][xx] = x[c * r * r + (y % r) * r + xx % r][y / r][xx / r];
            }
        }
    }
    out
}

/// Parallel-LCA network with banks, any depth.
fn straight_line(p: &ParamStore<f64>, cfg: &ModelConfig, x: &Map, zero_lca: bool) -> Map {
    let f0 = conv(p, "head.conv0", x);
    let mut h = f0.clone();
    let (mut fbanks, mut abanks) = (Vec::new(), Vec::new());
    for g in 1..=cfg.num_rafgs {
        let mut hs = Vec::new();
        let mut taps = Vec::new();
        for j in 1..=cfg.blocks_per_rafg {
            let rb = format!("rafg{g}.rb{j}");
            let t = relu(&conv(p, &format!("{rb}.conv1"), &h));
            h = add(&h, &conv(p, &format!("{rb}.conv2"), &t));
            taps.push(attend(p, &format!("rafg{g}.lca{j}"), &h, zero_lca));
            hs.push(h.clone());
        }
        let fb = conv(p, &format!("rafg{g}.fbank.conv"), &concat(&hs));
        let ab = attend(
            p,
            &format!("rafg{g}.abank.lca"),
            &conv(p, &format!("rafg{g}.abank.conv"), &concat(&taps)),
            zero_lca,
        );
        h = add(&fb, &ab);
        fbanks.push(fb);
        abanks.push(ab);
    }
    let gf = conv(p, "global.fbank.conv", &concat(&fbanks));
    let ga = attend(p, "global.abank.lca", &conv(p, "global.abank.conv", &concat(&abanks)), zero_lca);
    let f = add(&add(&gf, &ga), &f0);
    let up = shuffle(&conv(p, "head.convexpand", &f), cfg.scale);
    conv(p, "head.convout", &up)
}

pub fn random_params(net: &Hran, rng: &mut Rng) -> ParamStore<f64> {
    let mut store = ParamStore::default();
    for s in net.param_specs() {
        let (lo, hi) = if s.name.ends_with(".g") { (0.3, 1.5) } else { (-0.8, 0.8) };
        let data = (0..s.shape.numel()).map(|_| rng.uniform(lo, hi)).collect();
        store.insert(s.name.clone(), Tensor4::from_vec(s.shape, data).unwrap()).unwrap();
    }
    store
}

fn to_map(t: &Tensor4<f64>) -> Map {
    let s = t.shape();
    (0..s.c)
        .map(|c| (0..s.h).map(|y| (0..s.w).map(|x| t.at(0, c, y, x)).collect()).collect())
        .collect()
}

fn max_rel(a: &Map, b: &Map) -> f64 {
    let scale = b.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    a.iter()
        .flatten()
        .flatten()
        .zip(b.iter().flatten().flatten())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}

fn model_forward(net: &Hran, p: &ParamStore<f64>, x: &Tensor4<f64>) -> Map {
    let mut be = Eager;
    let bound = p.bind(&mut be);
    let xv = be.constant(x.clone());
    to_map(&net.forward(&mut be, &bound, &xv).unwrap())
}

/// Largest relative deviation between the network and the straight-line
/// evaluation over `draws` random weight sets. With `zero_lca` all LCA
/// weights are zeroed and the straight line uses constant 0.5 gates.
pub fn max_deviation(cfg: &ModelConfig, draws: u64, zero_lca: bool) -> f64 {
    let net = Hran::new(cfg).unwrap();
    let mut worst = 0.0f64;
    for d in 0..draws {
        let mut rng = Rng::seeded(1000 + d);
        let mut p = random_params(&net, &mut rng);
        if zero_lca {
            let names: Vec<String> = p.names().filter(|n| n.contains("lca")).map(String::from).collect();
            assert!(!names.is_empty());
            for n in names {
                p.get_mut(&n).unwrap().data_mut().fill(0.0);
            }
        }
        let (h, w) = (4 + (d % 2) as usize, 4 + (d % 3) as usize);
        let x = Tensor4::from_fn([1, 3, h, w], |_, _, _, _| rng.unit());
        let got = model_forward(&net, &p, &x);
        let want = straight_line(&p, cfg, &to_map(&x), zero_lca);
        assert_eq!(got.len(), 3);
        assert_eq!((got[0].len(), got[0][0].len()), (h * cfg.scale, w * cfg.scale));
        worst = worst.max(max_rel(&got, &want));
    }
    worst
}
