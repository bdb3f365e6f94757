mod common;

use common::*;
use nalgebra::Complex;
use proptest::prelude::*;
use schur_agler::detrep::divide;
use schur_agler::domains::Preset;
use schur_agler::poly::{HermPoly, MatPoly, MultiIndex};
use schur_agler::scalar::{hermitian_eigenvalues, CMat};
use schur_agler::sdp::{embed_complex, psd_factor, unembed_complex};

fn cmat(rows: usize, cols: usize, v: &[(f64, f64)]) -> CMat<f64> {
    CMat::from_fn(rows, cols, |i, j| {
        let (a, b) = v[i * cols + j];
        c(a, b)
    })
}

fn entries(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
}

fn scalar_poly(d: usize, max_deg: u32) -> impl Strategy<Value = MatPoly<f64>> {
    prop::collection::vec((prop::collection::vec(0..=max_deg, d), -1.0f64..1.0, -1.0f64..1.0), 1..5).prop_map(move |t| {
        let terms: Vec<_> = t.into_iter().map(|(e, a, b)| (e, Complex::new(a, b))).collect();
        MatPoly::scalar(d, &terms).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn embedding_preserves_spectrum(n in 1usize..6, v in entries(36)) {
        let g = cmat(n, n, &v[..n * n]);
        let h = (&g + g.adjoint()) * c(0.5, 0.0);
        let s = embed_complex(&h).unwrap();
        let mut want: Vec<f64> = hermitian_eigenvalues(&h).into_iter().flat_map(|x| [x, x]).collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut got: Vec<f64> = s.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in want.iter().zip(&got) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!((unembed_complex(&s).unwrap() - h).norm() < 1e-14);
    }

    #[test]
    fn psd_factor_reconstructs_low_rank(n in 1usize..=60, k in 1usize..=8, seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let k = k.min(n);
        let g = CMat::<f64>::from_fn(k, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let w = g.adjoint() * &g;
        let (v, r) = psd_factor(&w, 1e-9).unwrap();
        prop_assert!(r <= k);
        prop_assert!((v.adjoint() * &v - &w).norm() <= 1e-10 * (1.0 + w.norm()));
        for row in 0..r {
            let best = (0..n).max_by(|&a, &b| v[(row, a)].norm().partial_cmp(&v[(row, b)].norm()).unwrap()).unwrap();
            prop_assert!(v[(row, best)].im.abs() <= 1e-12 * (1.0 + v[(row, best)].norm()));
            prop_assert!(v[(row, best)].re > 0.0);
        }
    }

    #[test]
    fn interior_samples_respect_margin(seed in 0u64..500, which in 0usize..4) {
        let p = [Preset::Polydisk(2), Preset::Cartan1(1, 3), Preset::Cartan2(2), Preset::Cartan3(3)][which];
        let d = dom(p);
        for z in d.sample_interior(8, 0.05, seed).unwrap() {
            prop_assert!(d.p_norm_at(&z).unwrap() <= 0.95 + 1e-12);
        }
    }

    #[test]
    fn product_evaluates_pointwise(p in scalar_poly(2, 3), q in scalar_poly(2, 3), v in entries(2)) {
        let z = [c(v[0].0, v[0].1), c(v[1].0, v[1].1)];
        let pq = p.mul(&q).unwrap();
        let lhs = pq.eval_scalar(&z).unwrap();
        let rhs = p.eval_scalar(&z).unwrap() * q.eval_scalar(&z).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn exact_division_recovers_cofactor(p in scalar_poly(2, 2), q in scalar_poly(2, 2)) {
        prop_assume!(p.max_coeff_norm() > 0.1 && p.terms().last().unwrap().1[(0, 0)].norm() > 0.1);
        let f = p.mul(&q).unwrap();
        let (quo, rem) = divide(&f, &p, 1e-13).unwrap();
        prop_assert!(rem.max_coeff_norm() <= 1e-9);
        prop_assert!(quo.max_coeff_diff(&q).unwrap() <= 1e-9);
    }

    #[test]
    fn gram_is_hermitian_and_psd_on_the_diagonal(f in scalar_poly(2, 2), v in entries(2)) {
        let g = HermPoly::gram(&f);
        let z = [c(v[0].0, v[0].1), c(v[1].0, v[1].1)];
        let val = g.eval_diagonal(&z).unwrap()[(0, 0)];
        let fz = f.eval_scalar(&z).unwrap();
        prop_assert!((val.re - fz.norm_sqr()).abs() <= 1e-12 * (1.0 + fz.norm_sqr()));
        for ((w, zz), m) in g.terms() {
            let mirror = g.coeff(zz, w).unwrap();
            prop_assert!((m - mirror.adjoint()).norm() <= 1e-14);
        }
    }
}

#[test]
fn monomial_order_is_graded() {
    let basis = schur_agler::poly::monomials_up_to(3, 3);
    for pair in basis.windows(2) {
        assert!(pair[0].degree() <= pair[1].degree());
        assert!(pair[0] < pair[1]);
    }
    assert_eq!(basis.len(), 20);
    assert_eq!(basis[0], MultiIndex::zero(3));
}
