mod common;

use common::{mean_and_se, variance_and_se};
use rou_lab::montecarlo::simulate_rosenblatt_variable;
use rou_lab::stats::Moments;
use rou_lab::*;

fn setup() -> (HurstParams, KernelConstants) {
    let h = HurstParams::new(0.7).unwrap();
    let c = calibrate_constants(&h, 32).unwrap();
    (h, c)
}

#[test]
fn rosenblatt_variable_moments() {
    let (h, c) = setup();
    let v = simulate_rosenblatt_variable(&h, &c, 5000, 11).unwrap();
    let (mean, mse) = mean_and_se(&v);
    let (var, vse) = variance_and_se(&v);
    assert!(mean.abs() < 3.0 * mse, "mean {mean} se {mse}");
    assert!((var - 1.0).abs() < 3.0 * vse, "var {var} se {vse}");
    let m = Moments::of(&v);
    assert!(m.skewness > 0.0, "skewness {}", m.skewness);
}

#[test]
fn rosenblatt_variable_is_deterministic() {
    let (h, c) = setup();
    let a = simulate_rosenblatt_variable(&h, &c, 50, 3).unwrap();
    let b = simulate_rosenblatt_variable(&h, &c, 50, 3).unwrap();
    assert_eq!(a, b);
    let prefix = simulate_rosenblatt_variable(&h, &c, 20, 3).unwrap();
    assert_eq!(&a[..20], &prefix[..]);
}

#[test]
fn path_generation_is_pure() {
    let (h, c) = setup();
    let lat = generate_brownian(200, c.grid_delta, 99).unwrap();
    let a = rosenblatt_path_fast(&lat, &h, &c).unwrap();
    let b = rosenblatt_path_fast(&generate_brownian(200, c.grid_delta, 99).unwrap(), &h, &c).unwrap();
    assert_eq!(a.values, b.values);
    assert_eq!(a.values[0], 0.0);
    let step = a.times[1] - a.times[0];
    assert!(a.times.windows(2).all(|w| ((w[1] - w[0]) - step).abs() < 1e-15));
}

#[test]
fn covariance_oracle_edges() {
    let h = HurstParams::new(0.7).unwrap();
    assert_eq!(covariance_oracle(&h, 0.0, 2.0).unwrap(), 0.0);
    assert!((covariance_oracle(&h, 1.5, 1.5).unwrap() - 1.5f64.powf(1.4)).abs() < 1e-15);
    assert!(covariance_oracle(&h, -1.0, 1.0).is_err());
}

#[test]
fn mc_covariance_at_half_and_one() {
    let (h, c) = setup();
    let m = c.points_per_unit;
    let gen = RosenblattGenerator::new(h, c, m).unwrap();
    let prods: Vec<f64> = (0..5000u64)
        .map(|i| {
            let z = gen.generate(&generate_brownian(m + 1, c.grid_delta, 1000 + i).unwrap()).unwrap();
            z.values[m / 2] * z.values[m]
        })
        .collect();
    let (mean, se) = mean_and_se(&prods);
    let target = covariance_oracle(&h, 0.5, 1.0).unwrap();
    assert!((mean - target).abs() < 3.0 * se, "{mean} vs {target} (se {se})");
}
