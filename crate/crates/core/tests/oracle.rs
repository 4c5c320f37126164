mod support;

use hran::autodiff::{Backend, Eager};
use hran::model::{Hran, ModelConfig};
use hran::{Rng, Tensor4};
use support::straight_line::{max_deviation, random_params};

#[test]
fn tiny_matches_straight_line_over_twenty_draws() {
    let err = max_deviation(&ModelConfig::tiny(), 20, false);
    assert!(err < 1e-6, "{err:e}");
}

#[test]
fn deeper_network_matches_straight_line() {
    let cfg = ModelConfig {
        num_rafgs: 2,
        blocks_per_rafg: 2,
        channels: 3,
        upsample_channels: 2,
        scale: 3,
        ..ModelConfig::tiny()
    };
    let err = max_deviation(&cfg, 3, false);
    assert!(err < 1e-6, "{err:e}");
}

#[test]
fn zero_lca_weights_halve_the_attention_path() {
    let err = max_deviation(&ModelConfig::tiny(), 5, true);
    assert!(err < 1e-6, "{err:e}");
}

#[test]
fn identical_batch_items_give_identical_outputs() {
    let cfg = ModelConfig::tiny();
    let net = Hran::new(&cfg).unwrap();
    let p = random_params(&net, &mut Rng::seeded(7));
    let one = Tensor4::from_fn([1, 3, 5, 4], |_, c, y, x| ((c + 2 * y + 3 * x) % 7) as f64 / 7.0);
    let two = Tensor4::stack(&[one.clone(), one.clone()]).unwrap();
    let mut be = Eager;
    let bound = p.bind(&mut be);
    let xv = be.constant(two);
    let out = net.forward(&mut be, &bound, &xv).unwrap();
    assert_eq!(out.batch_item(0).data(), out.batch_item(1).data());
}
