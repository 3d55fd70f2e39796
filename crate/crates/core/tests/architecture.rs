use wetmap_core::model::{default_netspec, forward, halo_of, init_weights, Weights, DEFAULT_HIDDEN, DEFAULT_KERNELS};
use wetmap_core::tensor::{Grid4, Mode};

#[test]
fn default_network_shape() {
    let spec = default_netspec();
    assert_eq!(spec.layers.len(), 7);
    assert_eq!(spec.kernel_sizes(), DEFAULT_KERNELS);
    assert_eq!(spec.hidden_channels(), DEFAULT_HIDDEN);
    assert_eq!(halo_of(&spec), 21);
    assert_eq!(spec.min_input(), 43);
}

#[test]
fn window_of_122_predicts_an_80_core() {
    let spec = default_netspec();
    let w: Weights<f32> = init_weights(&spec, 3);
    let x = Grid4::filled([1, 3, 122, 122], 0.25f32).unwrap();
    let p = forward(&spec, &w, &x, Mode::Eval, 0).unwrap();
    assert_eq!(p.dims(), [1, 1, 80, 80]);
    assert!(p.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn zero_weights_predict_one_half_everywhere() {
    let spec = default_netspec();
    let w: Weights<f64> = Weights::zeros(&spec).unwrap();
    let x = Grid4::from_fn([2, 3, 50, 47], |[_, c, y, x]| ((c + 3 * y + 7 * x) % 17) as f64 / 16.0).unwrap();
    let p = forward(&spec, &w, &x, Mode::Eval, 0).unwrap();
    assert_eq!(p.dims(), [2, 1, 8, 5]);
    assert!(p.as_slice().iter().all(|&v| v == 0.5));
}
