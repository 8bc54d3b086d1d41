mod common;

use common::*;
use hankelmc::fourier::FourierLift;
use hankelmc::geometry::tangent_project;
use hankelmc::hankel::{
    antidiag_weights, hankel_adjoint, hankel_lift, two_level_adjoint, two_level_lift, two_level_weights,
};
use hankelmc::scalar::{fro, inner};
use hankelmc::solver::{nuclear_norm, svt};
use hankelmc::{HankelShape, TwoLevelShape};
use proptest::prelude::*;

fn shapes() -> impl Strategy<Value = (usize, HankelShape)> {
    (1usize..=6, 1usize..=7, 1usize..=7).prop_map(|(d, n1, n2)| (d, HankelShape::new(n1, n2).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hankel_entries_depend_on_index_sum((_, shape) in shapes(), seed in any::<u64>()) {
        let x = random_vec(&mut rng(seed), shape.len());
        let h = hankel_lift(&x, shape).unwrap();
        for j in 0..shape.n1() {
            for k in 0..shape.n2() {
                prop_assert_eq!(h[(j, k)], x[j + k]);
            }
        }
    }

    #[test]
    fn weights_count_antidiagonal_entries((_, shape) in shapes()) {
        let w = antidiag_weights(shape);
        for a in 0..shape.len() {
            let count = (0..shape.n1()).filter(|&j| a >= j && a - j < shape.n2()).count();
            prop_assert_eq!(w.get(a), count);
        }
        prop_assert_eq!(w.total(), shape.n1() * shape.n2());
    }

    #[test]
    fn hankel_adjoint_pairs((_, shape) in shapes(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = random_vec(&mut r, shape.len());
        let m = random_matrix(&mut r, shape.n1(), shape.n2());
        let lhs = inner(&hankel_lift(&x, shape).unwrap(), &m);
        let hm = hankel_adjoint(&m, shape).unwrap();
        let rhs: hankelmc::Complex<f64> = x.iter().zip(hm.iter()).map(|(a, b)| a.conj() * b).sum();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn lift_is_an_isometry((d, shape) in shapes(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let lift = FourierLift::<f64>::new(d, shape).unwrap();
        let x = random_matrix(&mut r, d, shape.len());
        prop_assert!(rel(lift.lift(&x).unwrap().fro(), fro(&x)) <= 1e-12);
        let z = random_blocks(&mut r, d, shape);
        let p = lift.project_hankel(&z).unwrap();
        prop_assert!(p.fro() <= z.fro() * (1.0 + 1e-12));
    }

    #[test]
    fn tangent_projection_is_idempotent(d in 1usize..=4, n in 3usize..=11, seed in any::<u64>()) {
        let shape = HankelShape::for_length(n).unwrap();
        let t = spectral_tangent(d, n, 1, seed);
        let z = random_blocks(&mut rng(seed), d, shape);
        let pz = tangent_project(&t, &z).unwrap();
        let ppz = tangent_project(&t, &pz).unwrap();
        let mut diff = ppz.clone();
        diff.axpy(-1.0, &pz);
        prop_assert!(diff.fro() <= 1e-10 * (1.0 + pz.fro()));
        prop_assert!(pz.fro() <= z.fro() * (1.0 + 1e-12));
    }

    #[test]
    fn svt_shrinks_nuclear_norm(rows in 1usize..=6, cols in 1usize..=6, tau in 0.0f64..3.0, seed in any::<u64>()) {
        let m = random_matrix(&mut rng(seed), rows, cols);
        let s = svt(&m, tau).unwrap();
        prop_assert!(nuclear_norm(&s) <= nuclear_norm(&m) + 1e-12);
    }

    #[test]
    fn two_level_adjoint_pairs(l1 in 1usize..=4, k1 in 1usize..=4, l2 in 1usize..=4, k2 in 1usize..=4, seed in any::<u64>()) {
        let shape = TwoLevelShape::new(l1, k1, l2, k2).unwrap();
        let (n, s) = shape.slice_dims();
        let (rows, cols) = shape.lifted_dims();
        let mut r = rng(seed);
        let x = random_matrix(&mut r, n, s);
        let m = random_matrix(&mut r, rows, cols);
        let lifted = two_level_lift(&x, shape).unwrap();
        let lhs = inner(&lifted, &m);
        let rhs = inner(&x, &two_level_adjoint(&m, shape).unwrap());
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        let back = two_level_adjoint(&lifted, shape).unwrap();
        let w = two_level_weights(shape);
        for i in 0..n {
            for j in 0..s {
                prop_assert!((back[(i, j)] - x[(i, j)] * w[(i, j)] as f64).norm() <= 1e-12 * (1.0 + back[(i, j)].norm()));
            }
        }
    }
}
