mod common;

use common::{certify_fixtures, realize_fixtures};
use schur_agler::certificate::{certify, CertifyOptions};
use schur_agler::realization::{realize, RealizeOptions};
use schur_agler::scalar::CMat;

fn bits(m: &CMat<f64>) -> Vec<u64> {
    m.iter().flat_map(|c| [c.re.to_bits(), c.im.to_bits()]).collect()
}

#[test]
fn repeated_certify_is_bitwise_identical() {
    let opts = CertifyOptions::default();
    for fx in certify_fixtures() {
        let a = certify(&fx.target, &fx.domain, 0, 3, &opts).unwrap();
        let b = certify(&fx.target, &fx.domain, 0, 3, &opts).unwrap();
        assert_eq!(a.iterations, b.iterations, "{}", fx.name);
        assert_eq!(a.residual.to_bits(), b.residual.to_bits(), "{}", fx.name);
        for (x, y) in a.h.iter().zip(&b.h).chain([(&a.h0, &b.h0)]) {
            let tx: Vec<_> = x.terms().map(|(e, m)| (e.clone(), bits(m))).collect();
            let ty: Vec<_> = y.terms().map(|(e, m)| (e.clone(), bits(m))).collect();
            assert_eq!(tx, ty, "{}", fx.name);
        }
    }
}

#[test]
fn repeated_realize_is_bitwise_identical() {
    let opts = RealizeOptions::default();
    for fx in realize_fixtures() {
        let a = realize(&fx.f, &fx.domain, 0, 3, &opts).unwrap();
        let b = realize(&fx.f, &fx.domain, 0, 3, &opts).unwrap();
        assert_eq!(bits(&a.matrix()), bits(&b.matrix()), "{}", fx.name);
        assert_eq!(a.provenance, b.provenance, "{}", fx.name);
    }
}
