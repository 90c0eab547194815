mod common;

use betatensor::divergence::{chi_transform, d_beta, mean_divergence, total_divergence, weights, Chi};
use betatensor::{BetaParam, DenseTensor, Error};
use common::*;
use proptest::prelude::*;

#[test]
fn closed_forms_at_named_betas() {
    let (x, y) = (2.0f64, 3.0f64);
    let kl = x * (x / y).ln() - x + y;
    let is = x / y - (x / y).ln() - 1.0;
    let half = (x.sqrt() - 0.5 * y.sqrt() - 0.5 * x / y.sqrt()) / (0.5 * -0.5);
    assert!((d_beta(x, y, bp(1.0)).unwrap() - kl).abs() < 1e-15);
    assert!((d_beta(x, y, bp(0.0)).unwrap() - is).abs() < 1e-15);
    assert!((d_beta(x, y, bp(0.5)).unwrap() - half).abs() < 1e-14);
    assert_eq!(d_beta(0.0, 3.0, bp(1.0)).unwrap(), 3.0);
    assert_eq!(d_beta(0.0, 3.0, bp(0.0)).unwrap(), f64::INFINITY);
}

#[test]
fn domain_and_parameter_errors() {
    assert!(matches!(BetaParam::new(2.0), Err(Error::Config(_))));
    assert!(matches!(BetaParam::new(-0.1), Err(Error::Config(_))));
    assert!(matches!(BetaParam::new(f64::NAN), Err(Error::Config(_))));
    assert!(matches!(d_beta(1.0, 0.0, bp(1.0)), Err(Error::Domain(_))));
    assert!(matches!(d_beta(-1.0, 1.0, bp(1.0)), Err(Error::Domain(_))));
    let z = [1.0, 0.0];
    assert!(matches!(
        chi_transform(Chi::First, &z, &[1.0, 1.0], bp(0.5)),
        Err(Error::Domain(_))
    ));
    assert!(matches!(
        chi_transform(Chi::First, &[1.0], &[1.0, 1.0], bp(0.5)),
        Err(Error::Shape(_))
    ));
}

#[test]
fn gamma_exponent() {
    assert_eq!(bp(0.0).gamma(), 0.5);
    assert_eq!(bp(0.5).gamma(), 1.0 / 1.5);
    assert_eq!(bp(1.0).gamma(), 1.0);
    assert_eq!(bp(1.5).gamma(), 1.0);
}

#[test]
fn nonnegative_on_a_grid() {
    let grid: Vec<f64> = (0..=40).map(|k| 1e-4 * 10f64.powf(k as f64 / 5.0)).collect();
    for beta in [0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 1.99] {
        for &x in std::iter::once(&0.0).chain(&grid) {
            for &y in &grid {
                let d = d_beta(x, y, bp(beta)).unwrap();
                assert!(d >= 0.0, "d_{beta}({x} | {y}) = {d}");
            }
        }
    }
}

#[test]
fn continuous_across_kl() {
    for (x, y) in [(0.3, 1.7), (2.0, 0.5), (1.0, 1.0 + 1e-3), (5.0, 4.0)] {
        let kl = d_beta(x, y, bp(1.0)).unwrap();
        for beta in [1.0 - 1e-6, 1.0 + 1e-6] {
            let d = d_beta(x, y, bp(beta)).unwrap();
            assert!((d - kl).abs() <= 1e-4 * kl.max(1.0), "beta {beta}: {d} vs {kl}");
        }
    }
}

#[test]
fn mean_is_total_over_size() {
    let mut r = rng(3);
    let x = tensor(&mut r, &[3, 4, 2], 0.0);
    let y = tensor(&mut r, &[3, 4, 2], 0.1);
    for beta in BETAS {
        let t = total_divergence(&x, &y, bp(beta)).unwrap();
        assert_eq!(mean_divergence(&x, &y, bp(beta)).unwrap(), t / 24.0);
    }
    assert!(total_divergence(&x, &tensor(&mut r, &[3, 4], 0.1), bp(1.0)).is_err());
}

#[test]
fn weights_follow_their_definition() {
    let x = DenseTensor::new(vec![3], vec![1.0, 0.0, 2.0]).unwrap();
    let xhat = DenseTensor::new(vec![3], vec![0.5, 1e-20, 4.0]).unwrap();
    let eps = 1e-10;
    for beta in BETAS {
        let (p, q) = weights(&x, &xhat, bp(beta), eps).unwrap();
        for i in 0..3 {
            let y = xhat.data()[i].max(eps);
            assert!((p.data()[i] - x.data()[i] * y.powf(beta - 2.0)).abs() <= 1e-12 * p.data()[i].abs().max(1.0));
            assert!((q.data()[i] - y.powf(beta - 1.0)).abs() <= 1e-12 * q.data()[i].abs().max(1.0));
        }
    }
}

proptest! {
    #[test]
    fn zero_only_on_the_diagonal(x in 1e-3f64..1e3, beta in 0.0f64..1.99) {
        prop_assert_eq!(d_beta(x, x, bp(beta)).unwrap(), 0.0);
        prop_assert!(d_beta(x, x * 1.5, bp(beta)).unwrap() > 0.0);
    }

    #[test]
    fn chi_transforms_are_identity_at_the_reference(
        z in prop::collection::vec(1e-6f64..1e3, 1..20),
        beta in prop::sample::select(vec![0.0, 0.3, 0.5, 1.0, 1.2, 1.5]),
    ) {
        prop_assert_eq!(chi_transform(Chi::First, &z, &z, bp(beta)).unwrap(), z.clone());
        prop_assert_eq!(chi_transform(Chi::Second, &z, &z, bp(beta)).unwrap(), z);
    }

    #[test]
    fn chi_transforms_match_their_power_forms(
        z in prop::collection::vec(1e-3f64..1e2, 1..10),
        beta in prop::sample::select(vec![0.0, 0.5, 1.0, 1.5]),
    ) {
        let zref: Vec<f64> = z.iter().map(|v| 1.0 + v * 0.5).collect();
        let first = chi_transform(Chi::First, &z, &zref, bp(beta)).unwrap();
        let second = chi_transform(Chi::Second, &z, &zref, bp(beta)).unwrap();
        for i in 0..z.len() {
            let f = zref[i].powf(2.0 - beta) * z[i].powf(beta - 1.0);
            prop_assert!((first[i] - f).abs() <= 1e-12 * f);
            let s = if beta <= 1.0 { z[i] } else { z[i].powf(beta) * zref[i].powf(1.0 - beta) };
            prop_assert!((second[i] - s).abs() <= 1e-12 * s);
        }
    }
}
