#![allow(dead_code)]

use nalgebra::Complex;
use schur_agler::certificate::Certificate;
use schur_agler::domains::{make_preset, DomainSpec, Preset};
use schur_agler::poly::{HermPoly, MatPoly, MultiIndex};
use schur_agler::realization::RationalMatFn;
use schur_agler::scalar::{kron, CMat};

pub fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

pub fn dom(p: Preset) -> DomainSpec<f64> {
    make_preset(p).unwrap()
}

/// Scalar polynomial from `(exponents, real coefficient)` pairs.
pub fn sp(d: usize, t: &[(&[u32], f64)]) -> MatPoly<f64> {
    let terms: Vec<_> = t.iter().map(|(e, v)| (e.to_vec(), c(*v, 0.0))).collect();
    MatPoly::scalar(d, &terms).unwrap()
}

pub fn mat(rows: usize, cols: usize, v: &[f64]) -> CMat<f64> {
    CMat::from_row_slice(rows, cols, &v.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>())
}

/// Matrix polynomial from `(exponents, row-major real entries)`.
pub fn mp(d: usize, rows: usize, cols: usize, t: &[(&[u32], &[f64])]) -> MatPoly<f64> {
    let terms = t.iter().map(|(e, v)| (MultiIndex::new(e.to_vec()), CMat::from_row_slice(rows, cols, &v.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>())));
    MatPoly::from_terms(d, rows, cols, terms).unwrap()
}

fn shift(d: usize, size: usize, s: f64) -> HermPoly<f64> {
    HermPoly::identity(d, size).scale(s)
}

pub struct CertFixture {
    pub name: &'static str,
    pub domain: DomainSpec<f64>,
    pub target: HermPoly<f64>,
}

/// Targets that are nonnegative on the closed domain and lie in the module.
pub fn certify_fixtures() -> Vec<CertFixture> {
    let disk = dom(Preset::Polydisk(1));
    let bidisk = dom(Preset::Polydisk(2));
    let ball2 = dom(Preset::Cartan1(1, 2));
    let ball3 = dom(Preset::Cartan1(1, 3));
    let d1 = disk.defect_polys()[0].clone();
    let bd = bidisk.defect_polys();
    let mut out = Vec::new();

    out.push(CertFixture { name: "disk 1 - wz", domain: disk.clone(), target: d1.clone() });
    out.push(CertFixture { name: "disk 2 - wz", domain: disk.clone(), target: d1.add(&shift(1, 1, 1.0)).unwrap() });
    let p = sp(1, &[(&[0], 1.0), (&[1], -0.5)]);
    out.push(CertFixture {
        name: "disk |1 - z/2|^2 - 0.2",
        domain: disk.clone(),
        target: HermPoly::gram(&p).sub(&shift(1, 1, 0.2)).unwrap(),
    });
    // (2 - w1 z1)(2 - w2 z2) = 1 + (1 - w1 z1) + (1 - w2 z2) + (1 - w1 z1)(1 - w2 z2)
    let prod_target = HermPoly::gram(&sp(2, &[(&[0, 0], 1.0)]))
        .scale(4.0)
        .sub(&HermPoly::gram(&sp(2, &[(&[1, 0], 1.0)])).scale(2.0))
        .unwrap()
        .sub(&HermPoly::gram(&sp(2, &[(&[0, 1], 1.0)])).scale(2.0))
        .unwrap()
        .add(&HermPoly::gram(&sp(2, &[(&[1, 1], 1.0)])))
        .unwrap();
    out.push(CertFixture { name: "bidisk (2 - w1z1)(2 - w2z2)", domain: bidisk.clone(), target: prod_target });
    let pp = sp(2, &[(&[0, 0], 1.0), (&[1, 0], -0.5), (&[0, 1], -0.5), (&[1, 1], 0.25)]);
    out.push(CertFixture {
        name: "bidisk |(1 - z1/2)(1 - z2/2)|^2 - 0.04",
        domain: bidisk.clone(),
        target: HermPoly::gram(&pp).sub(&shift(2, 1, 0.04)).unwrap(),
    });
    out.push(CertFixture {
        name: "bidisk 1 - (w1z1 + w2z2)/2",
        domain: bidisk.clone(),
        target: bd[0].add(&bd[1]).unwrap().scale(0.5),
    });
    // the row-ball defect is the 2x2 matrix I - Z^*Z; scalar targets come from congruences
    let bb2 = ball2.defect_polys()[0].clone();
    out.push(CertFixture {
        name: "ball2 1 - |0.6 z1 + 0.8 z2|^2",
        domain: ball2.clone(),
        target: bb2.congruence(&MatPoly::constant(2, mat(2, 1, &[0.6, 0.8]))).unwrap(),
    });
    out.push(CertFixture {
        name: "ball2 1.5 - w1z1 - 0.5 w2z2",
        domain: ball2.clone(),
        target: shift(2, 1, 1.5)
            .sub(&HermPoly::gram(&sp(2, &[(&[1, 0], 1.0)])))
            .unwrap()
            .sub(&HermPoly::gram(&sp(2, &[(&[0, 1], 1.0)])).scale(0.5))
            .unwrap(),
    });
    let r3 = 1.0 / 3f64.sqrt();
    out.push(CertFixture {
        name: "ball3 1 - |z1 + z2 + z3|^2/3",
        domain: ball3.clone(),
        target: ball3.defect_polys()[0].congruence(&MatPoly::constant(3, mat(3, 1, &[r3, r3, r3]))).unwrap(),
    });
    let l3 = sp(3, &[(&[0, 0, 0], 1.0), (&[1, 0, 0], -0.3), (&[0, 1, 0], -0.3), (&[0, 0, 1], -0.3)]);
    out.push(CertFixture {
        name: "ball3 |1 - 0.3(z1+z2+z3)|^2 - 0.1",
        domain: ball3.clone(),
        target: HermPoly::gram(&l3).sub(&shift(3, 1, 0.1)).unwrap(),
    });
    // 2x2 targets: A^*A + defect congruences
    let a = mp(1, 2, 2, &[(&[0], &[1.0, 0.0, 0.0, 1.0]), (&[1], &[0.0, 1.0, 0.5, 0.0])]);
    let b = mat(2, 2, &[1.0, 0.0, 0.3, 0.5]);
    out.push(CertFixture {
        name: "disk 2x2 A*A + B*(1 - wz)B",
        domain: disk.clone(),
        target: HermPoly::gram(&a).add(&d1.congruence(&MatPoly::constant(1, b.rows(0, 1).into_owned())).unwrap()).unwrap().add(
            &d1.congruence(&MatPoly::constant(1, b.rows(1, 1).into_owned())).unwrap(),
        )
        .unwrap(),
    });
    let a2 = mp(2, 2, 2, &[(&[0, 0], &[1.0, 0.2, 0.0, 1.0]), (&[1, 0], &[0.3, 0.0, 0.0, 0.0]), (&[0, 1], &[0.0, 0.0, 0.4, 0.1])]);
    let h1 = mp(2, 1, 2, &[(&[0, 0], &[1.0, 0.0]), (&[0, 1], &[0.0, 0.5])]);
    let h2 = mp(2, 1, 2, &[(&[0, 0], &[0.2, 0.7])]);
    out.push(CertFixture {
        name: "bidisk 2x2 A*A + H1*d1 H1 + H2*d2 H2",
        domain: bidisk.clone(),
        target: HermPoly::gram(&a2)
            .add(&bd[0].congruence(&h1).unwrap())
            .unwrap()
            .add(&bd[1].congruence(&h2).unwrap())
            .unwrap(),
    });
    out
}

/// Targets with a negative eigenvalue somewhere on the closed domain.
pub fn negative_fixtures() -> Vec<CertFixture> {
    let disk = dom(Preset::Polydisk(1));
    let bidisk = dom(Preset::Polydisk(2));
    let ball2 = dom(Preset::Cartan1(1, 2));
    let ball3 = dom(Preset::Cartan1(1, 3));
    let g = |d: usize, e: &[u32]| HermPoly::gram(&sp(d, &[(e, 1.0)]));
    vec![
        CertFixture { name: "disk wz - 1", domain: disk.clone(), target: g(1, &[1]).sub(&shift(1, 1, 1.0)).unwrap() },
        CertFixture { name: "disk wz - 1/4", domain: disk.clone(), target: g(1, &[1]).sub(&shift(1, 1, 0.25)).unwrap() },
        CertFixture {
            name: "bidisk 1 - 2 w1z1",
            domain: bidisk.clone(),
            target: shift(2, 1, 1.0).sub(&g(2, &[1, 0]).scale(2.0)).unwrap(),
        },
        CertFixture {
            name: "ball2 0.5 - w1z1",
            domain: ball2,
            target: shift(2, 1, 0.5).sub(&g(2, &[1, 0])).unwrap(),
        },
        CertFixture {
            name: "ball3 0.9 - |z|^2",
            domain: ball3.clone(),
            target: shift(3, 1, 0.9)
                .sub(&g(3, &[1, 0, 0]))
                .unwrap()
                .sub(&g(3, &[0, 1, 0]))
                .unwrap()
                .sub(&g(3, &[0, 0, 1]))
                .unwrap(),
        },
        CertFixture {
            name: "bidisk 2x2 diag(1, -0.1)",
            domain: bidisk,
            target: HermPoly::constant(2, mat(2, 2, &[1.0, 0.0, 0.0, -0.1])).unwrap(),
        },
    ]
}

pub struct RealizeFixture {
    pub name: &'static str,
    pub domain: DomainSpec<f64>,
    pub f: RationalMatFn<f64>,
}

pub fn realize_fixtures() -> Vec<RealizeFixture> {
    let disk = dom(Preset::Polydisk(1));
    let bidisk = dom(Preset::Polydisk(2));
    let ball2 = dom(Preset::Cartan1(1, 2));
    let s2 = 0.9 / 2f64.sqrt();
    let rf = |q: MatPoly<f64>, r: MatPoly<f64>| RationalMatFn::new(q, r).unwrap();
    vec![
        RealizeFixture {
            name: "disk 0.9 (z - 0.5)/(1 - 0.5 z)",
            domain: disk.clone(),
            f: rf(sp(1, &[(&[1], 0.9), (&[0], -0.45)]), sp(1, &[(&[0], 1.0), (&[1], -0.5)])),
        },
        RealizeFixture {
            name: "disk 0.8 z (z - 0.3)/(1 - 0.3 z)",
            domain: disk.clone(),
            f: rf(sp(1, &[(&[2], 0.8), (&[1], -0.24)]), sp(1, &[(&[0], 1.0), (&[1], -0.3)])),
        },
        RealizeFixture {
            name: "disk 0.5 z/(1 - 0.4 z)",
            domain: disk,
            f: rf(sp(1, &[(&[1], 0.5)]), sp(1, &[(&[0], 1.0), (&[1], -0.4)])),
        },
        RealizeFixture {
            name: "bidisk 0.99 (z1 + z2)/2",
            domain: bidisk.clone(),
            f: rf(sp(2, &[(&[1, 0], 0.495), (&[0, 1], 0.495)]), MatPoly::identity(2, 1)),
        },
        RealizeFixture {
            name: "bidisk 0.45 (z1 z2 + z1^2)",
            domain: bidisk.clone(),
            f: rf(sp(2, &[(&[1, 1], 0.45), (&[2, 0], 0.45)]), MatPoly::identity(2, 1)),
        },
        RealizeFixture {
            name: "bidisk 0.5 z1 z2/(1 - 0.2 z1 - 0.2 z2)",
            domain: bidisk,
            f: rf(sp(2, &[(&[1, 1], 0.5)]), sp(2, &[(&[0, 0], 1.0), (&[1, 0], -0.2), (&[0, 1], -0.2)])),
        },
        RealizeFixture {
            name: "ball2 0.9 (z1 + z2)/sqrt 2",
            domain: ball2,
            f: rf(sp(2, &[(&[1, 0], s2), (&[0, 1], s2)]), MatPoly::identity(2, 1)),
        },
    ]
}

pub fn detrep_fixtures() -> Vec<(&'static str, DomainSpec<f64>, MatPoly<f64>)> {
    let disk = dom(Preset::Polydisk(1));
    let bidisk = dom(Preset::Polydisk(2));
    let third = 1.0 / 3.0;
    vec![
        ("1 - z/2", disk, sp(1, &[(&[0], 1.0), (&[1], -0.5)])),
        ("(1 - z1/2)(1 - z2/2)", bidisk.clone(), sp(2, &[(&[0, 0], 1.0), (&[1, 0], -0.5), (&[0, 1], -0.5), (&[1, 1], 0.25)])),
        ("(3 - z1 - z2)/3", bidisk.clone(), sp(2, &[(&[0, 0], 1.0), (&[1, 0], -third), (&[0, 1], -third)])),
        ("1 + 0.4 z1 z2 - 0.3 z2^2", bidisk, sp(2, &[(&[0, 0], 1.0), (&[1, 1], 0.4), (&[0, 2], -0.3)])),
    ]
}

/// Pointwise check of `target(w, z) = H_0^*(w)H_0(z) + Σ H_i^*(w) ((I - P_i^*(w)P_i(z)) ⊗ I) H_i(z)`
/// at random unrelated `(w, z)`, which pins down the bivariate identity.
pub fn pointwise_identity_error(target: &HermPoly<f64>, cert: &Certificate<f64>, domain: &DomainSpec<f64>, pairs: usize, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let d = domain.nvars();
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let mut pt = || -> Vec<Complex<f64>> { (0..d).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect() };
        let (w, z) = (pt(), pt());
        let lhs = target.eval(&w, &z).unwrap();
        // F^*(w) means Σ F_λ^* w^λ, i.e. F(w̄)^*
        let wb: Vec<Complex<f64>> = w.iter().map(|x| x.conj()).collect();
        let h0w = cert.h0.eval(&wb).unwrap();
        let h0z = cert.h0.eval(&z).unwrap();
        let mut rhs = h0w.adjoint() * h0z;
        for ((p, h), &n) in domain.blocks().iter().zip(&cert.h).zip(&cert.n) {
            if n == 0 {
                continue;
            }
            let pw = p.eval(&wb).unwrap();
            let pz = p.eval(&z).unwrap();
            let m = pz.ncols();
            let defect = CMat::identity(m, m) - pw.adjoint() * pz;
            let amp = kron(&defect, &CMat::identity(n, n));
            rhs += h.eval(&wb).unwrap().adjoint() * amp * h.eval(&z).unwrap();
        }
        let scale = 1.0 + lhs.norm();
        worst = worst.max((lhs - rhs).norm() / scale);
    }
    worst
}
