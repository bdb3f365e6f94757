//! Polynomially defined domains `D_P = {z : ‖P(z)‖ < 1}` with `P = ⊕ P_i`.
//!
//! Cartan presets index their independent coordinates row-major:
//! type I `z_{rs}` for all `(r, s)`, type II the upper triangle `r ≤ s`
//! (with `z_{sr} = z_{rs}`), type III the strict upper triangle `r < s`
//! (with `z_{sr} = -z_{rs}` and zero diagonal).

use std::fmt;
use std::str::FromStr;

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::certificate::{certify, CertifyOptions, Certificate};
use crate::error::{Error, Result};
use crate::poly::{HermPoly, MatPoly, MultiIndex};
use crate::scalar::{block_diag, creal, kron, spectral_norm, CMat, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Polydisk(usize),
    Cartan1(usize, usize),
    Cartan2(usize),
    Cartan3(usize),
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Polydisk(d) => write!(f, "polydisk:{d}"),
            Preset::Cartan1(l, m) => write!(f, "cartan1:{l}x{m}"),
            Preset::Cartan2(m) => write!(f, "cartan2:{m}"),
            Preset::Cartan3(m) => write!(f, "cartan3:{m}"),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown domain preset '{s}'"));
        let (name, arg) = s.split_once(':').ok_or_else(bad)?;
        let num = |x: &str| x.trim().parse::<usize>().map_err(|_| bad());
        match name.trim() {
            "polydisk" => Ok(Preset::Polydisk(num(arg)?)),
            "cartan1" => {
                let (l, m) = arg.split_once(['x', 'X']).ok_or_else(bad)?;
                Ok(Preset::Cartan1(num(l)?, num(m)?))
            }
            "cartan2" => Ok(Preset::Cartan2(num(arg)?)),
            "cartan3" => Ok(Preset::Cartan3(num(arg)?)),
            _ => Err(bad()),
        }
    }
}

/// Ordered block list `P_1, ..., P_k` sharing `d` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec<T: Real> {
    d: usize,
    blocks: Vec<MatPoly<T>>,
    preset: Option<Preset>,
    coordinate_bound: Option<T>,
}

impl<T: Real> DomainSpec<T> {
    /// Custom domain. Constant blocks are rejected unless `allow_constant`.
    pub fn new(d: usize, blocks: Vec<MatPoly<T>>, allow_constant: bool) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("domain needs at least one variable".into()));
        }
        if blocks.is_empty() {
            return Err(Error::InvalidParameter("domain needs at least one block".into()));
        }
        for (i, b) in blocks.iter().enumerate() {
            if b.nvars() != d {
                return Err(Error::DimensionMismatch { expected: d, got: b.nvars() });
            }
            if b.rows() == 0 || b.cols() == 0 {
                return Err(Error::ShapeMismatch(format!("block {i} is empty ({}x{})", b.rows(), b.cols())));
            }
            if !allow_constant && b.degree() == 0 {
                return Err(Error::InvalidParameter(format!("block {i} is constant")));
            }
        }
        Ok(DomainSpec { d, blocks, preset: None, coordinate_bound: None })
    }

    /// Declares `|z_i| ≤ r` on the domain, used as the sampling box.
    pub fn with_coordinate_bound(mut self, r: T) -> Self {
        self.coordinate_bound = Some(r);
        self
    }

    pub fn nvars(&self) -> usize {
        self.d
    }

    pub fn blocks(&self) -> &[MatPoly<T>] {
        &self.blocks
    }

    pub fn preset(&self) -> Option<Preset> {
        self.preset
    }

    pub fn coordinate_bound(&self) -> Option<T> {
        self.coordinate_bound
    }

    /// `(ℓ_i, m_i)` per block.
    pub fn block_shapes(&self) -> Vec<(usize, usize)> {
        self.blocks.iter().map(|b| b.shape()).collect()
    }

    /// `(Σ ℓ_i, Σ m_i)`.
    pub fn shape(&self) -> (usize, usize) {
        self.blocks.iter().fold((0, 0), |(a, b), p| (a + p.rows(), b + p.cols()))
    }

    pub fn max_block_degree(&self) -> usize {
        self.blocks.iter().map(|b| b.degree()).max().unwrap_or(0)
    }

    /// Whether the approximation hypothesis on `‖P(T)‖ ≤ 1` tuples is known
    /// to hold. It does for the presets (their closures are polynomially
    /// convex with linear `P`); custom domains carry it as an unchecked assumption.
    pub fn approximation_hypothesis_checked(&self) -> bool {
        self.preset.is_some()
    }

    fn check_point(&self, z: &[Complex<T>]) -> Result<()> {
        if z.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: z.len() });
        }
        Ok(())
    }

    /// `⊕ P_i(z)`.
    pub fn eval(&self, z: &[Complex<T>]) -> Result<CMat<T>> {
        self.check_point(z)?;
        let parts = self.blocks.iter().map(|b| b.eval(z)).collect::<Result<Vec<_>>>()?;
        Ok(block_diag(&parts))
    }

    /// `P(z)_n = ⊕ P_i(z) ⊗ I_{n_i}`.
    pub fn eval_amplified(&self, z: &[Complex<T>], n: &[usize]) -> Result<CMat<T>> {
        self.check_point(z)?;
        if n.len() != self.blocks.len() {
            return Err(Error::DimensionMismatch { expected: self.blocks.len(), got: n.len() });
        }
        let mut parts = Vec::with_capacity(n.len());
        for (b, &ni) in self.blocks.iter().zip(n) {
            parts.push(kron(&b.eval(z)?, &CMat::identity(ni, ni)));
        }
        Ok(block_diag(&parts))
    }

    /// Largest singular value of `⊕ P_i(z)`; `z ∈ D_P` iff it is `< 1`.
    pub fn p_norm_at(&self, z: &[Complex<T>]) -> Result<T> {
        self.check_point(z)?;
        let mut best = T::zero();
        for b in &self.blocks {
            best = best.max(spectral_norm(&b.eval(z)?));
        }
        Ok(best)
    }

    /// `I_{m_i} - P_i^*(w) P_i(z)` per block.
    pub fn defect_polys(&self) -> Vec<HermPoly<T>> {
        self.blocks
            .iter()
            .map(|b| {
                HermPoly::identity(self.d, b.cols())
                    .sub(&HermPoly::gram(b))
                    .expect("defect shapes agree")
            })
            .collect()
    }

    /// Radius `r` with `|z_i| ≤ r` on the domain, from the declared bound or,
    /// for custom domains, from an Archimedean certificate search.
    pub fn bounding_radius(&self) -> Result<T> {
        if let Some(r) = self.coordinate_bound {
            return Ok(r);
        }
        let deg = self.max_block_degree().max(1);
        let report = archimedean_check(self, deg + 1, T::lit(1e3))?;
        report
            .max_radius()
            .ok_or_else(|| Error::BoundingBox("no Archimedean radius certified for some variable".into()))
    }

    /// `count` points with `p_norm_at ≤ 1 - margin`, uniform in the bounding
    /// polydisk and radially shrunk toward the origin until inside.
    pub fn sample_interior(&self, count: usize, margin: T, seed: u64) -> Result<Vec<Vec<Complex<T>>>> {
        if !(margin > T::zero() && margin < T::one()) {
            return Err(Error::InvalidParameter(format!("margin must lie in (0, 1), got {margin}")));
        }
        if count == 0 {
            return Ok(Vec::new());
        }
        let r = self.bounding_radius()?;
        let zero = vec![creal(T::zero()); self.d];
        if self.p_norm_at(&zero)? > T::one() - margin {
            return Err(Error::BoundingBox(format!("origin is not {margin}-inside the domain")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shrink = T::lit(0.9);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let mut z = random_box_point(&mut rng, self.d, r);
            let mut ok = false;
            for _ in 0..400 {
                if self.p_norm_at(&z)? <= T::one() - margin {
                    ok = true;
                    break;
                }
                for c in z.iter_mut() {
                    *c *= creal(shrink);
                }
            }
            if ok {
                out.push(z);
            }
        }
        Ok(out)
    }

    /// Points of the closed domain close to its boundary: random directions
    /// scaled by bisection to `p_norm_at ≈ 1` (from inside).
    pub fn sample_boundary(&self, count: usize, seed: u64) -> Result<Vec<Vec<Complex<T>>>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        let r = self.bounding_radius()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_b0d4);
        let mut out = Vec::with_capacity(count);
        let mut guard = 0;
        while out.len() < count && guard < 50 * count {
            guard += 1;
            let dir = random_box_point(&mut rng, self.d, r);
            let at = |s: T| -> Result<T> {
                let z: Vec<Complex<T>> = dir.iter().map(|c| c * creal(s)).collect();
                self.p_norm_at(&z)
            };
            // grow until outside (bounded by the box radius scale)
            let mut hi = T::one();
            let mut grown = 0;
            while at(hi)? < T::one() && grown < 60 {
                hi *= T::lit(2.0);
                grown += 1;
            }
            if at(hi)? < T::one() {
                continue;
            }
            let mut lo = T::zero();
            for _ in 0..60 {
                let mid = (lo + hi) * T::lit(0.5);
                if at(mid)? < T::one() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(dir.iter().map(|c| c * creal(lo)).collect());
        }
        Ok(out)
    }
}

fn random_box_point<T: Real>(rng: &mut ChaCha8Rng, d: usize, r: T) -> Vec<Complex<T>> {
    (0..d)
        .map(|_| {
            let rad: f64 = rng.gen::<f64>().sqrt();
            let ang: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
            Complex::new(T::lit(rad * ang.cos()) * r, T::lit(rad * ang.sin()) * r)
        })
        .collect()
}

/// Builds a preset domain.
pub fn make_preset<T: Real>(preset: Preset) -> Result<DomainSpec<T>> {
    let pos = |v: usize, what: &str| {
        if v == 0 {
            Err(Error::InvalidParameter(format!("{what} must be positive")))
        } else {
            Ok(())
        }
    };
    let entry = |rows: usize, cols: usize, r: usize, s: usize, sign: f64| {
        let mut m = CMat::<T>::zeros(rows, cols);
        m[(r, s)] = creal(T::lit(sign));
        m
    };
    let (d, blocks) = match preset {
        Preset::Polydisk(d) => {
            pos(d, "polydisk dimension")?;
            (d, (0..d).map(|i| MatPoly::variable(d, i)).collect::<Vec<_>>())
        }
        Preset::Cartan1(l, m) => {
            pos(l, "row count")?;
            pos(m, "column count")?;
            let d = l * m;
            let terms = (0..l).flat_map(|r| (0..m).map(move |s| (r, s))).map(|(r, s)| {
                (MultiIndex::unit(d, r * m + s), entry(l, m, r, s, 1.0))
            });
            (d, vec![MatPoly::from_terms(d, l, m, terms.collect::<Vec<_>>())?])
        }
        Preset::Cartan2(m) => {
            pos(m, "matrix size")?;
            let d = m * (m + 1) / 2;
            let mut terms = Vec::new();
            let mut k = 0;
            for r in 0..m {
                for s in r..m {
                    let mut c = entry(m, m, r, s, 1.0);
                    c[(s, r)] = creal(T::one());
                    terms.push((MultiIndex::unit(d, k), c));
                    k += 1;
                }
            }
            (d, vec![MatPoly::from_terms(d, m, m, terms)?])
        }
        Preset::Cartan3(m) => {
            if m < 2 {
                return Err(Error::InvalidParameter("skew-symmetric ball needs m >= 2".into()));
            }
            let d = m * (m - 1) / 2;
            let mut terms = Vec::new();
            let mut k = 0;
            for r in 0..m {
                for s in r + 1..m {
                    let mut c = entry(m, m, r, s, 1.0);
                    c[(s, r)] = creal(-T::one());
                    terms.push((MultiIndex::unit(d, k), c));
                    k += 1;
                }
            }
            (d, vec![MatPoly::from_terms(d, m, m, terms)?])
        }
    };
    Ok(DomainSpec { d, blocks, preset: Some(preset), coordinate_bound: Some(T::one()) })
}

/// Certified bound `|z_i| ≤ r_i` for one variable.
#[derive(Clone, Debug)]
pub struct VariableRadius<T: Real> {
    pub variable: usize,
    pub radius: Option<T>,
    pub certificate: Option<Certificate<T>>,
    pub feasible_degree: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct ArchimedeanReport<T: Real> {
    pub variables: Vec<VariableRadius<T>>,
    pub bisection_tol: f64,
}

impl<T: Real> ArchimedeanReport<T> {
    pub fn all_certified(&self) -> bool {
        self.variables.iter().all(|v| v.radius.is_some())
    }

    pub fn max_radius(&self) -> Option<T> {
        let mut best = T::zero();
        for v in &self.variables {
            best = best.max(v.radius?);
        }
        Some(best)
    }
}

/// `r^2 - w_i z_i` as a scalar Hermitian polynomial.
pub fn radius_target<T: Real>(d: usize, i: usize, r: T) -> HermPoly<T> {
    let e = MultiIndex::unit(d, i);
    let shift = HermPoly::identity(d, 1).scale(r * r);
    let var = HermPoly::gram(&MatPoly::monomial(d, e, CMat::identity(1, 1)));
    shift.sub(&var).expect("scalar shapes")
}

/// For every variable, bisects for the smallest `r ≤ r_max` such that
/// `r^2 - w_i z_i` is certifiable at some degree `≤ max_degree`.
pub fn archimedean_check<T: Real>(domain: &DomainSpec<T>, max_degree: usize, r_max: T) -> Result<ArchimedeanReport<T>> {
    if max_degree < domain.max_block_degree() {
        return Err(Error::InvalidParameter(format!(
            "max_degree {max_degree} is below the block degree {}",
            domain.max_block_degree()
        )));
    }
    if r_max <= T::zero() {
        return Err(Error::InvalidParameter("r_max must be positive".into()));
    }
    let tol = 1e-3;
    let opts = CertifyOptions { screen: false, ..CertifyOptions::default() };
    let mut variables = Vec::with_capacity(domain.nvars());
    for i in 0..domain.nvars() {
        let probe = |r: T, dmin: usize| certify(&radius_target(domain.nvars(), i, r), domain, dmin, max_degree, &opts);
        let mut best = match probe(r_max, 0) {
            Ok(c) => (r_max, c),
            Err(_) => {
                variables.push(VariableRadius { variable: i, radius: None, certificate: None, feasible_degree: None });
                continue;
            }
        };
        let mut lo = T::zero();
        while (best.0 - lo).to_f64_lossy() > tol {
            let mid = (lo + best.0) * T::lit(0.5);
            // feasibility is monotone in r, so the minimal degree can only grow as r shrinks
            match probe(mid, best.1.degree) {
                Ok(c) => best = (mid, c),
                Err(_) => lo = mid,
            }
        }
        let degree = best.1.degree;
        variables.push(VariableRadius { variable: i, radius: Some(best.0), certificate: Some(best.1), feasible_degree: Some(degree) });
    }
    Ok(ArchimedeanReport { variables, bisection_tol: tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::CommutingTuple;
    use crate::scalar::cx;

    fn c(re: f64, im: f64) -> Complex<f64> {
        cx(re, im)
    }

    #[test]
    fn preset_parsing_round_trips() {
        for s in ["polydisk:2", "cartan1:1x3", "cartan2:2", "cartan3:3"] {
            let p: Preset = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert!("disk:2".parse::<Preset>().is_err());
        assert!("cartan1:3".parse::<Preset>().is_err());
    }

    #[test]
    fn preset_shapes() {
        let p = make_preset::<f64>(Preset::Polydisk(2)).unwrap();
        assert_eq!(p.block_shapes(), vec![(1, 1), (1, 1)]);
        let b = make_preset::<f64>(Preset::Cartan1(1, 3)).unwrap();
        assert_eq!((b.nvars(), b.block_shapes()), (3, vec![(1, 3)]));
        let s = make_preset::<f64>(Preset::Cartan2(2)).unwrap();
        assert_eq!(s.nvars(), 3);
        let k = make_preset::<f64>(Preset::Cartan3(2)).unwrap();
        assert_eq!(k.nvars(), 1);
        let m = k.eval(&[c(0.5, 0.0)]).unwrap();
        assert_eq!(m, CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.5, 0.0), c(-0.5, 0.0), c(0.0, 0.0)]));
        assert!(make_preset::<f64>(Preset::Polydisk(0)).is_err());
        assert!(make_preset::<f64>(Preset::Cartan1(0, 2)).is_err());
    }

    #[test]
    fn p_norm_examples() {
        let p = make_preset::<f64>(Preset::Polydisk(2)).unwrap();
        assert!((p.p_norm_at(&[c(0.5, 0.0), c(0.0, -0.8)]).unwrap() - 0.8).abs() < 1e-12);
        let b = make_preset::<f64>(Preset::Cartan1(1, 2)).unwrap();
        assert!((b.p_norm_at(&[c(0.6, 0.0), c(0.8, 0.0)]).unwrap() - 1.0).abs() < 1e-12);
        for pre in [Preset::Polydisk(3), Preset::Cartan1(2, 2), Preset::Cartan2(2), Preset::Cartan3(3)] {
            let dom = make_preset::<f64>(pre).unwrap();
            assert_eq!(dom.p_norm_at(&vec![c(0.0, 0.0); dom.nvars()]).unwrap(), 0.0);
        }
        assert!(matches!(p.p_norm_at(&[c(0.0, 0.0)]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn defect_examples() {
        let d1 = make_preset::<f64>(Preset::Polydisk(1)).unwrap().defect_polys();
        let e0 = MultiIndex::zero(1);
        let e1 = MultiIndex::unit(1, 0);
        assert_eq!(d1.len(), 1);
        assert_eq!(d1[0].coeff(&e0, &e0).unwrap()[(0, 0)], c(1.0, 0.0));
        assert_eq!(d1[0].coeff(&e1, &e1).unwrap()[(0, 0)], c(-1.0, 0.0));

        // row ball: I_2 - [w1; w2][z1, z2]
        let b = make_preset::<f64>(Preset::Cartan1(1, 2)).unwrap().defect_polys();
        assert_eq!(b[0].size(), 2);
        let u = MultiIndex::unit(2, 0);
        let v = MultiIndex::unit(2, 1);
        let m = b[0].coeff(&u, &v).unwrap();
        assert_eq!(m[(0, 1)], c(-1.0, 0.0));
        assert_eq!(m[(1, 0)], c(0.0, 0.0));

        let two = make_preset::<f64>(Preset::Polydisk(2)).unwrap().defect_polys();
        assert_eq!(two.len(), 2);
        assert!(two[1].coeff(&v, &v).is_some() && two[1].coeff(&u, &u).is_none());
    }

    #[test]
    fn defects_match_hereditary_oracle() {
        let dom = make_preset::<f64>(Preset::Cartan1(1, 2)).unwrap();
        let pts = vec![vec![c(0.3, 0.1), c(-0.2, 0.5)], vec![c(0.0, 0.4), c(0.6, 0.0)]];
        let t = CommutingTuple::diagonal(&pts, 2).unwrap();
        let lhs = dom.defect_polys()[0].hereditary_eval(&t).unwrap();
        let pt = dom.blocks()[0].eval_tuple(&t).unwrap();
        let rhs = CMat::identity(4, 4) - pt.adjoint() * pt;
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn samples_respect_margin_and_seed() {
        let p = make_preset::<f64>(Preset::Polydisk(2)).unwrap();
        let a = p.sample_interior(50, 0.1, 7).unwrap();
        assert_eq!(a.len(), 50);
        assert!(a.iter().all(|z| z.iter().all(|x| x.norm() <= 0.9 + 1e-15)));
        assert_eq!(a, p.sample_interior(50, 0.1, 7).unwrap());
        assert!(p.sample_interior(0, 0.1, 7).unwrap().is_empty());
        let b = make_preset::<f64>(Preset::Cartan1(1, 3)).unwrap();
        for z in b.sample_interior(40, 0.05, 1).unwrap() {
            assert!(b.p_norm_at(&z).unwrap() <= 0.95);
        }
        for z in b.sample_boundary(10, 3).unwrap() {
            let n = b.p_norm_at(&z).unwrap();
            assert!(n < 1.0 && n > 1.0 - 1e-9);
        }
    }

    #[test]
    fn custom_domain_validation() {
        let k = MatPoly::<f64>::constant(1, CMat::identity(1, 1));
        assert!(DomainSpec::new(1, vec![k.clone()], false).is_err());
        assert!(DomainSpec::new(1, vec![k], true).is_ok());
        assert!(DomainSpec::new(2, vec![MatPoly::<f64>::variable(1, 0)], false).is_err());
    }

    #[test]
    fn archimedean_polydisk_and_scaled_disk() {
        let p = make_preset::<f64>(Preset::Polydisk(2)).unwrap();
        let rep = archimedean_check(&p, 1, 4.0).unwrap();
        for v in &rep.variables {
            let r = v.radius.unwrap();
            assert!(r <= 1.0 + 1e-3 && r >= 1.0 - 1e-3, "{r}");
        }
        // P = 2z: |z| ≤ 1/2
        let dom = DomainSpec::new(1, vec![MatPoly::<f64>::variable(1, 0).scale(c(2.0, 0.0))], false).unwrap();
        let rep = archimedean_check(&dom, 1, 4.0).unwrap();
        let r = rep.variables[0].radius.unwrap();
        assert!((r - 0.5).abs() <= 1.5e-3, "{r}");
        assert!(rep.variables[0].feasible_degree.unwrap() <= 1);
    }
}
