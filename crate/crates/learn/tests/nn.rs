// SPDX-License-Identifier: Apache-2.0

use placerl_learn::nn::checkpoint::{load, save};
use placerl_learn::nn::{clip_grad_norm, global_grad_norm, Params, Tensor};
use placerl_learn::{ActionSpace, Network, NetworkConfig};
use proptest::prelude::*;

fn full_net(space: ActionSpace) -> Network {
    Network::new(NetworkConfig {
        action_space: space,
        ..NetworkConfig::default()
    })
}

#[test]
fn checkpoint_files_round_trip_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    for space in [ActionSpace::DensityWeight, ActionSpace::Spatial] {
        let net = full_net(space);
        let p64: Params<f64> = net.init();
        let a = dir.path().join("a.ckpt");
        let b = dir.path().join("b.ckpt");
        save(&p64, &a).unwrap();
        let back: Params<f64> = load(&a).unwrap();
        assert_eq!(back, p64);
        save(&back, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

        let p32: Params<f32> = net.init();
        save(&p32, &a).unwrap();
        let back: Params<f32> = load(&a).unwrap();
        save(&back, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        // f32 files widen losslessly.
        let wide: Params<f64> = load(&a).unwrap();
        assert_eq!(wide.cast::<f32>(), p32);
    }
}

#[test]
fn missing_checkpoint_is_an_error() {
    assert!(load::<f64>(std::path::Path::new("/nonexistent/x.ckpt")).is_err());
}

#[test]
fn network_forward_is_bitwise_deterministic() {
    let net = full_net(ActionSpace::Spatial);
    let p: Params<f32> = net.init();
    let x = Tensor::from_vec(&[11, 32, 32], (0..11 * 32 * 32).map(|i| ((i % 97) as f32 * 0.1).sin()).collect()).unwrap();
    let (a, _) = net.forward(&p, &x).unwrap();
    let (b, _) = net.forward(&p, &x).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.mean, b.mean);
    assert_eq!(a.raw_std, b.raw_std);
    assert_eq!(net.init::<f32>(), p, "seeded init");
}

proptest! {
    #[test]
    fn clipping_caps_the_norm(
        vals in proptest::collection::vec(-100.0f64..100.0, 1..40),
        split in 0usize..40,
        max_norm in 0.01f64..50.0,
    ) {
        let cut = split.min(vals.len());
        let mut g = Params::new();
        g.push("a", Tensor::from_vec(&[cut], vals[..cut].to_vec()).unwrap());
        g.push("b", Tensor::from_vec(&[vals.len() - cut], vals[cut..].to_vec()).unwrap());
        let before = global_grad_norm(&g);
        let reported = clip_grad_norm(&mut g, max_norm);
        let after = global_grad_norm(&g);
        prop_assert_eq!(reported, before);
        prop_assert!(after <= before * (1.0 + 1e-12));
        let want = before.min(max_norm);
        prop_assert!((after - want).abs() <= 1e-9 * want.max(1e-300));
    }
}
