mod common;

use betatensor::baseline::{khatri_rao, kronecker, mu_unfold_cp_sweep, mu_unfold_tucker_sweep, refold, unfold};
use betatensor::contract::cp_contract;
use betatensor::{cp, tucker};
use common::*;
use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn khatri_rao_and_kronecker_examples() {
    let a = array![[1.0, 2.0], [3.0, 4.0]];
    let b = array![[5.0, 6.0], [7.0, 8.0]];
    assert_eq!(
        khatri_rao(&[&a, &b]).unwrap(),
        array![[5.0, 12.0], [7.0, 16.0], [15.0, 24.0], [21.0, 32.0]]
    );
    let c = array![[1.0], [2.0]];
    let d = array![[1.0, 10.0]];
    assert_eq!(kronecker(&[&c, &d]).unwrap(), array![[1.0, 10.0], [2.0, 20.0]]);
    assert!(khatri_rao(&[&a, &array![[1.0, 2.0, 3.0]]]).is_err());
}

#[test]
fn unfolding_example() {
    let t = betatensor::DenseTensor::from_fn(vec![2, 3, 2], |i| (i[0] * 100 + i[1] * 10 + i[2]) as f64).unwrap();
    let u = unfold(&t, 1).unwrap();
    assert_eq!(u.matrix.dim(), (3, 4));
    assert_eq!(u.matrix.row(2).to_vec(), vec![20.0, 21.0, 120.0, 121.0]);
}

#[test]
fn khatri_rao_turns_unfoldings_into_contractions() {
    let mut r = rng(5);
    for _ in 0..50 {
        let order = r.random_range(2..5);
        let shape: Vec<usize> = (0..order).map(|_| r.random_range(1..5)).collect();
        let rank = r.random_range(1..4);
        let t = tensor(&mut r, &shape, 0.0);
        let mats: Vec<Array2<f64>> = shape.iter().map(|&d| matrix(&mut r, d, rank, 0.0)).collect();
        let n = r.random_range(0..order);
        let others: Vec<&Array2<f64>> = (0..order).filter(|&m| m != n).map(|m| &mats[m]).collect();
        let via_unfold = unfold(&t, n).unwrap().matrix.dot(&khatri_rao(&others).unwrap());
        assert!(mat_rel_err(&via_unfold, &cp_contract(&t, &others, n).unwrap()) < 1e-12);
    }
}

#[test]
fn mu_unfold_sweeps_match_block_sweeps() {
    let mut r = rng(6);
    let shape = [5, 4, 3];
    let x = tensor(&mut r, &shape, 0.01);
    for beta in BETAS {
        let mut a = cp(&mut r, &shape, 2, 0.05);
        let mut b = a.clone();
        cp::bcomm_sweep(&mut a, &x, bp(beta), 1e-12).unwrap();
        mu_unfold_cp_sweep(&mut b, &x, bp(beta), 1e-12).unwrap();
        for n in 0..3 {
            assert!(mat_rel_err(b.factor(n), a.factor(n)) < 1e-10, "cp beta {beta}");
        }
        let mut s = tucker(&mut r, &shape, &[2, 2, 2], 0.05);
        let mut t = s.clone();
        tucker::bcomm_sweep(&mut s, &x, bp(beta), 1e-12).unwrap();
        mu_unfold_tucker_sweep(&mut t, &x, bp(beta), 1e-12).unwrap();
        assert!(rel_err(t.core().data(), s.core().data()) < 1e-10, "tucker beta {beta}");
        for n in 0..3 {
            assert!(mat_rel_err(t.factor(n), s.factor(n)) < 1e-10, "tucker beta {beta}");
        }
    }
}

proptest! {
    #[test]
    fn unfold_refold_round_trip(shape in prop::collection::vec(1usize..5, 1..5), seed in any::<u64>()) {
        let t = tensor(&mut rng(seed), &shape, 0.0);
        for n in 0..shape.len() {
            let u = unfold(&t, n).unwrap();
            prop_assert_eq!(u.matrix.nrows(), shape[n]);
            prop_assert_eq!(&refold(&u, &shape).unwrap(), &t);
        }
    }
}
