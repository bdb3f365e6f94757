//! Contractive determinantal representations of stable polynomials.
//!
//! For `p` without zeros on the closed domain there is `c > 0` with `c/p`
//! in the Schur-Agler class. Realizing `c/p = D + C P(z)_n (I - A P(z)_n)^{-1} B`
//! puts every pole of `c/p` among the zeros of `det(I - A P(z)_n)`, so with
//! `K = A` the determinant factors as `p(z) q(z)` for a polynomial `q`.

use std::collections::BTreeMap;

use nalgebra::{Complex, ComplexField};

use crate::certificate::{certify_at_degree, Certificate, CertifyOptions};
use crate::domains::DomainSpec;
use crate::error::{Error, Result};
use crate::poly::{HermPoly, MatPoly, MultiIndex};
use crate::realization::{lurking_contraction, Provenance, RationalMatFn};
use crate::scalar::{creal, det, spectral_norm, CMat, Real};

/// `p(z) q(z) = det(I - K P(z)_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DetRep<T: Real> {
    pub k: CMat<T>,
    pub n: Vec<usize>,
    pub q: MatPoly<T>,
    /// Scale used for the realization of `c/p`.
    pub c: T,
    /// Largest scale certified at the degree used.
    pub c_max: T,
    /// Relative identity residual on verification samples.
    pub residual: f64,
    /// Coefficient 2-norm of the division remainder, relative to the determinant's.
    pub remainder: f64,
    /// `Σ n_i m_i deg P_i`, the determinant degree bound.
    pub degree_bound: usize,
    pub provenance: Option<Provenance>,
}

impl<T: Real> DetRep<T> {
    pub fn sigma_max(&self) -> T {
        spectral_norm(&self.k)
    }

    /// `det(I - K P(z)_n)`.
    pub fn pencil_det(&self, domain: &DomainSpec<T>, z: &[Complex<T>]) -> Result<Complex<T>> {
        pencil_det(&self.k, &self.n, domain, z)
    }
}

fn pencil_det<T: Real>(k: &CMat<T>, n: &[usize], domain: &DomainSpec<T>, z: &[Complex<T>]) -> Result<Complex<T>> {
    if k.nrows() == 0 {
        return Ok(creal(T::one()));
    }
    let pn = domain.eval_amplified(z, n)?;
    Ok(det(&(CMat::identity(k.nrows(), k.nrows()) - k * pn)))
}

/// Settings for [`extract_detrep`].
#[derive(Clone, Debug)]
pub struct DetRepOptions {
    pub certify: CertifyOptions,
    /// Bisection tolerance on `c`.
    pub c_tol: f64,
    /// The realization uses `safety · c_max`, keeping the Gram problem
    /// strictly feasible.
    pub safety: f64,
    /// Sample count for the strong-stability screen.
    pub screen_samples: usize,
    /// Sample count for the identity residual.
    pub verify_samples: usize,
}

impl Default for DetRepOptions {
    fn default() -> Self {
        DetRepOptions { certify: CertifyOptions::default(), c_tol: 1e-3, safety: 0.9, screen_samples: 400, verify_samples: 200 }
    }
}

fn scalar_poly<T: Real>(p: &MatPoly<T>) -> Result<()> {
    if p.shape() != (1, 1) {
        return Err(Error::ShapeMismatch(format!("expected a scalar polynomial, got {}x{}", p.rows(), p.cols())));
    }
    Ok(())
}

fn pairs<T: Real>(z: &[Complex<T>]) -> Vec<(f64, f64)> {
    z.iter().map(|c| (c.re.to_f64_lossy(), c.im.to_f64_lossy())).collect()
}

/// Smallest `|p|` over the origin and interior/boundary samples, with the
/// point where it occurs. Fails when `p` (numerically) vanishes there.
pub fn stability_screen<T: Real>(p: &MatPoly<T>, domain: &DomainSpec<T>, samples: usize, seed: u64) -> Result<(T, Vec<Complex<T>>)> {
    scalar_poly(p)?;
    if p.nvars() != domain.nvars() {
        return Err(Error::DimensionMismatch { expected: domain.nvars(), got: p.nvars() });
    }
    let mut points = vec![vec![creal(T::zero()); domain.nvars()]];
    if domain.coordinate_bound().is_some() && samples > 0 {
        points.extend(domain.sample_interior(samples, T::lit(1e-3), seed)?);
        points.extend(domain.sample_boundary(samples, seed)?);
    }
    let scale = T::one() + p.max_coeff_norm();
    let mut vals = points
        .into_iter()
        .map(|z| Ok((p.eval_scalar(&z)?.modulus(), z)))
        .collect::<Result<Vec<_>>>()?;
    vals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut best = vals[0].clone();
    // sampling rarely lands on a zero; polish the smallest values by
    // least-norm Newton steps and keep zeros that stay in the closed domain
    for (_, z0) in vals.iter().take(8) {
        let mut z = z0.clone();
        for _ in 0..30 {
            let v = p.eval_scalar(&z)?;
            let g = gradient(p, &z)?;
            let gn: T = g.iter().map(|c| c.norm_sqr()).fold(T::zero(), |a, b| a + b);
            if gn <= T::zero() || v.modulus() <= T::eps() * scale {
                break;
            }
            for (zi, gi) in z.iter_mut().zip(&g) {
                *zi -= v * gi.conj() / creal(gn);
            }
        }
        let v = p.eval_scalar(&z)?.modulus();
        if v < best.0 && domain.p_norm_at(&z)? <= T::one() + T::lit(1e-9) {
            best = (v, z);
        }
    }
    if best.0 <= T::lit(1e-12) * scale {
        return Err(Error::ScreenFailure { reason: "p vanishes".into(), point: pairs(&best.1), value: best.0.to_f64_lossy() });
    }
    Ok(best)
}

fn gradient<T: Real>(p: &MatPoly<T>, z: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    let mut g = vec![creal(T::zero()); z.len()];
    for (e, m) in p.terms() {
        for (i, gi) in g.iter_mut().enumerate() {
            let k = e.exponents()[i];
            if k == 0 {
                continue;
            }
            let mut ex = e.exponents().to_vec();
            ex[i] -= 1;
            *gi += m[(0, 0)] * creal(T::lit(k as f64)) * MultiIndex::new(ex).eval(z);
        }
    }
    Ok(g)
}

fn scale_target<T: Real>(p: &MatPoly<T>, c: T) -> Result<HermPoly<T>> {
    let d = p.nvars();
    HermPoly::gram(p).sub(&HermPoly::identity(d, 1).scale(c * c))
}

/// Largest `c` (to within `c_tol`) such that `p^*(w)p(z) - c²` has a
/// degree-`degree` certificate, searched by bisection on `(0, min |p|]`.
pub fn find_scale<T: Real>(
    p: &MatPoly<T>,
    domain: &DomainSpec<T>,
    degree: usize,
    c_tol: T,
    opts: &CertifyOptions,
    screen_samples: usize,
) -> Result<(T, Certificate<T>)> {
    if !(c_tol > T::zero()) {
        return Err(Error::InvalidParameter(format!("c_tol must be positive, got {c_tol}")));
    }
    let (upper, _) = stability_screen(p, domain, screen_samples, opts.seed)?;
    let defects = domain.defect_polys();
    let mut probe_opts = opts.clone();
    probe_opts.screen = false;
    let probe = |c: T| -> Result<Option<Certificate<T>>> {
        Ok(certify_at_degree(&scale_target(p, c)?, &defects, degree, &probe_opts)?.ok())
    };
    if let Some(cert) = probe(upper)? {
        return Ok((upper, cert));
    }
    let (mut lo, mut hi) = (T::zero(), upper);
    let mut best: Option<(T, Certificate<T>)> = None;
    while hi - lo > c_tol {
        let mid = (lo + hi) * T::lit(0.5);
        match probe(mid)? {
            Some(cert) => {
                lo = mid;
                best = Some((mid, cert));
            }
            None => hi = mid,
        }
    }
    best.ok_or(Error::NoScale(degree))
}

/// Graded-order monomial bound: per-variable degree used for interpolation.
fn det_degree_bound<T: Real>(domain: &DomainSpec<T>, n: &[usize]) -> usize {
    domain
        .blocks()
        .iter()
        .zip(n)
        .map(|(b, &ni)| ni * b.cols() * b.degree())
        .sum()
}

/// Coefficients of `det(I - K P(z)_n)` by interpolation on the tensor grid of
/// `(bound + 1)`-th roots of unity; exact up to rounding since no variable
/// exceeds degree `bound`.
pub fn determinant_poly<T: Real>(k: &CMat<T>, n: &[usize], domain: &DomainSpec<T>) -> Result<MatPoly<T>> {
    let d = domain.nvars();
    let bound = det_degree_bound(domain, n);
    if k.nrows() == 0 || bound == 0 {
        let v = pencil_det(k, n, domain, &vec![creal(T::zero()); d])?;
        return Ok(MatPoly::constant(d, CMat::from_element(1, 1, v)));
    }
    let len = bound + 1;
    let total = len.pow(d as u32);
    let roots: Vec<Complex<T>> = (0..len)
        .map(|j| {
            let a = T::two_pi() * T::lit(j as f64) / T::lit(len as f64);
            Complex::new(a.cos(), a.sin())
        })
        .collect();
    let digits = |mut idx: usize| -> Vec<usize> {
        let mut out = vec![0; d];
        for slot in out.iter_mut() {
            *slot = idx % len;
            idx /= len;
        }
        out
    };
    let mut vals = Vec::with_capacity(total);
    for idx in 0..total {
        let z: Vec<Complex<T>> = digits(idx).into_iter().map(|j| roots[j]).collect();
        vals.push(pencil_det(k, n, domain, &z)?);
    }
    // inverse DFT along each axis
    let inv = T::one() / T::lit(len as f64);
    let mut stride = 1;
    for _ in 0..d {
        let mut next = vals.clone();
        for idx in 0..total {
            let j = (idx / stride) % len;
            if j != 0 {
                continue;
            }
            for a in 0..len {
                let mut acc = creal(T::zero());
                for s in 0..len {
                    acc += vals[idx + s * stride] * roots[(a * s) % len].conj();
                }
                next[idx + a * stride] = acc * creal(inv);
            }
        }
        vals = next;
        stride *= len;
    }
    let terms = (0..total).filter_map(|idx| {
        let e = digits(idx);
        let deg: usize = e.iter().sum();
        (deg <= bound).then(|| (MultiIndex::new(e.into_iter().map(|x| x as u32).collect()), CMat::from_element(1, 1, vals[idx])))
    });
    MatPoly::from_terms(d, 1, 1, terms)
}

/// Graded-order long division `f = q p + r` of scalar polynomials. Terms of
/// `f` below `noise` are sent to the remainder instead of being divided.
pub fn divide<T: Real>(f: &MatPoly<T>, p: &MatPoly<T>, noise: T) -> Result<(MatPoly<T>, MatPoly<T>)> {
    scalar_poly(f)?;
    scalar_poly(p)?;
    if f.nvars() != p.nvars() {
        return Err(Error::DimensionMismatch { expected: f.nvars(), got: p.nvars() });
    }
    let d = f.nvars();
    let pt: Vec<(MultiIndex, Complex<T>)> = p.terms().map(|(e, m)| (e.clone(), m[(0, 0)])).collect();
    let Some((lead, lc)) = pt.last().cloned() else {
        return Err(Error::InvalidParameter("division by the zero polynomial".into()));
    };
    let mut work: BTreeMap<MultiIndex, Complex<T>> = f.terms().map(|(e, m)| (e.clone(), m[(0, 0)])).collect();
    let mut quo: BTreeMap<MultiIndex, Complex<T>> = BTreeMap::new();
    let mut rem: BTreeMap<MultiIndex, Complex<T>> = BTreeMap::new();
    while let Some((m, c)) = work.pop_last() {
        let shift = if c.modulus() > noise { m.checked_sub(&lead) } else { None };
        match shift {
            Some(s) => {
                let coef = c / lc;
                *quo.entry(s.clone()).or_insert_with(|| creal(T::zero())) += coef;
                for (e, pc) in &pt[..pt.len() - 1] {
                    *work.entry(e.add(&s)).or_insert_with(|| creal(T::zero())) -= coef * pc;
                }
            }
            None => {
                *rem.entry(m).or_insert_with(|| creal(T::zero())) += c;
            }
        }
    }
    let to_poly = |map: BTreeMap<MultiIndex, Complex<T>>| {
        MatPoly::from_terms(d, 1, 1, map.into_iter().map(|(e, c)| (e, CMat::from_element(1, 1, c))))
    };
    Ok((to_poly(quo)?, to_poly(rem)?))
}

fn coeff_norm<T: Real>(p: &MatPoly<T>) -> T {
    p.terms().map(|(_, m)| m[(0, 0)].norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt()
}

/// Finds a scale, realizes `c/p`, sets `K = A` and divides the expanded
/// `det(I - K P(z)_n)` by `p`. Degrees `d_min..=d_max` are tried in turn.
pub fn extract_detrep<T: Real>(p: &MatPoly<T>, domain: &DomainSpec<T>, d_min: usize, d_max: usize, opts: &DetRepOptions) -> Result<DetRep<T>> {
    scalar_poly(p)?;
    if d_min > d_max {
        return Err(Error::InvalidParameter(format!("D_min {d_min} exceeds D_max {d_max}")));
    }
    if !(opts.safety > 0.0 && opts.safety <= 1.0) {
        return Err(Error::InvalidParameter(format!("safety factor must lie in (0, 1], got {}", opts.safety)));
    }
    let d = domain.nvars();
    let origin = vec![creal(T::zero()); d];
    if p.eval_scalar(&origin)?.modulus() <= T::lit(1e-12) * (T::one() + p.max_coeff_norm()) {
        return Err(Error::ScreenFailure { reason: "p vanishes at the origin".into(), point: pairs(&origin), value: 0.0 });
    }
    stability_screen(p, domain, opts.screen_samples, opts.certify.seed)?;
    let tol = T::lit(opts.certify.tol);
    let mut last_err = None;
    for degree in d_min..=d_max {
        let (c_max, _) = match find_scale(p, domain, degree, T::lit(opts.c_tol), &opts.certify, opts.screen_samples) {
            Ok(v) => v,
            Err(Error::NoScale(_)) => {
                last_err = Some(Error::NoScale(degree));
                continue;
            }
            Err(e) => return Err(e),
        };
        let c = c_max * T::lit(opts.safety);
        let f = RationalMatFn::new(MatPoly::constant(d, CMat::from_element(1, 1, creal(c))), p.clone())?;
        let mut copts = opts.certify.clone();
        copts.screen = false;
        let cert = match certify_at_degree(&scale_target(p, c)?, &domain.defect_polys(), degree, &copts)? {
            Ok(cert) => cert,
            Err(_) => {
                last_err = Some(Error::NoScale(degree));
                continue;
            }
        };
        let col = match lurking_contraction(&f, &cert, domain, tol) {
            Ok(col) => col,
            Err(e @ (Error::ContractionViolation(_) | Error::Consistency(_))) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let k = col.a.clone();
        let n = col.n.clone();
        let det_poly = determinant_poly(&k, &n, domain)?;
        let scale = coeff_norm(&det_poly).max(T::eps());
        let (q, rem) = divide(&det_poly, p, scale * T::lit(1e-12))?;
        let remainder = (coeff_norm(&rem) / scale).to_f64_lossy();
        if remainder > opts.certify.tol {
            last_err = Some(Error::DivisionRemainder(remainder));
            continue;
        }
        let mut rep = DetRep {
            k,
            n,
            q,
            c,
            c_max,
            residual: 0.0,
            remainder,
            degree_bound: det_degree_bound(domain, &col.n),
            provenance: col.provenance.clone(),
        };
        rep.residual = verify_detrep(&rep, p, domain, opts.verify_samples, opts.certify.seed)?.max_residual;
        return Ok(rep);
    }
    Err(last_err.unwrap_or(Error::NoScale(d_max)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetRepReport {
    /// Max of `|p q - det(I - K P_n)| / (1 + |p q|)`.
    pub max_residual: f64,
    pub sigma_max: f64,
    /// `|p(0) q(0) - det(I - K P(0)_n)|`.
    pub origin_error: f64,
    pub samples: usize,
    pub seed: u64,
    pub margin: f64,
}

pub fn verify_detrep<T: Real>(rep: &DetRep<T>, p: &MatPoly<T>, domain: &DomainSpec<T>, samples: usize, seed: u64) -> Result<DetRepReport> {
    scalar_poly(p)?;
    let margin = 1e-2;
    let rel = |z: &[Complex<T>]| -> Result<T> {
        let pq = p.eval_scalar(z)? * rep.q.eval_scalar(z)?;
        Ok((pq - rep.pencil_det(domain, z)?).modulus() / (T::one() + pq.modulus()))
    };
    let origin = vec![creal(T::zero()); domain.nvars()];
    let origin_error = {
        let pq = p.eval_scalar(&origin)? * rep.q.eval_scalar(&origin)?;
        (pq - rep.pencil_det(domain, &origin)?).modulus().to_f64_lossy()
    };
    let mut worst = T::zero();
    for z in domain.sample_interior(samples, T::lit(margin), seed)? {
        worst = worst.max(rel(&z)?);
    }
    Ok(DetRepReport {
        max_residual: worst.to_f64_lossy(),
        sigma_max: rep.sigma_max().to_f64_lossy(),
        origin_error,
        samples,
        seed,
        margin,
    })
}

/// Smallest `|q|` found at one sampling margin.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginMin {
    pub margin: f64,
    pub min_modulus: f64,
    pub point: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub margins: Vec<MarginMin>,
    /// Minimum over all margins.
    pub min: f64,
    /// Set when some sample gives `|q| ≤ 1e-9`.
    pub flagged: bool,
    pub samples: usize,
    pub seed: u64,
}

pub const SCAN_MARGINS: [f64; 3] = [1e-1, 1e-2, 1e-3];

/// Minimum modulus of `q` over interior samples at margins `1e-1, 1e-2, 1e-3`
/// (plus the origin). This can falsify stability, never prove it.
pub fn stability_scan<T: Real>(q: &MatPoly<T>, domain: &DomainSpec<T>, samples: usize, seed: u64) -> Result<StabilityReport> {
    scalar_poly(q)?;
    let origin = vec![creal(T::zero()); domain.nvars()];
    let q0 = q.eval_scalar(&origin)?.modulus();
    let mut margins = Vec::with_capacity(SCAN_MARGINS.len());
    let mut min = q0.to_f64_lossy();
    for &m in &SCAN_MARGINS {
        let mut best = (q0, origin.clone());
        for z in domain.sample_interior(samples, T::lit(m), seed)? {
            let v = q.eval_scalar(&z)?.modulus();
            if v < best.0 {
                best = (v, z);
            }
        }
        let v = best.0.to_f64_lossy();
        min = min.min(v);
        margins.push(MarginMin { margin: m, min_modulus: v, point: pairs(&best.1) });
    }
    Ok(StabilityReport { margins, min, flagged: min <= 1e-9, samples, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{make_preset, Preset};
    use crate::scalar::cx;

    fn sp(d: usize, t: &[(Vec<u32>, f64)]) -> MatPoly<f64> {
        let terms: Vec<_> = t.iter().map(|(e, c)| (e.clone(), cx(*c, 0.0))).collect();
        MatPoly::scalar(d, &terms).unwrap()
    }

    #[test]
    fn find_scale_on_the_disk() {
        let dom = make_preset::<f64>(Preset::Polydisk(1)).unwrap();
        let p = sp(1, &[(vec![0], 1.0), (vec![1], -0.5)]);
        let (c, cert) = find_scale(&p, &dom, 1, 1e-3, &CertifyOptions::default(), 200).unwrap();
        assert!(c <= 0.5 + 1e-6 && c >= 0.5 - 1e-3 - 1e-9, "c = {c}");
        assert!(cert.residual <= 1e-8);
    }

    #[test]
    fn find_scale_constant() {
        let dom = make_preset::<f64>(Preset::Polydisk(2)).unwrap();
        let p = MatPoly::identity(2, 1);
        let (c, _) = find_scale(&p, &dom, 0, 1e-3, &CertifyOptions::default(), 50).unwrap();
        assert!((c - 1.0).abs() <= 1e-3);
    }

    #[test]
    fn divide_exact_and_remainder() {
        // (1 - z1)(1 + 2 z2) / (1 - z1) = 1 + 2 z2
        let p = sp(2, &[(vec![0, 0], 1.0), (vec![1, 0], -1.0)]);
        let q = sp(2, &[(vec![0, 0], 1.0), (vec![0, 1], 2.0)]);
        let f = p.mul(&q).unwrap();
        let (quo, rem) = divide(&f, &p, 1e-14).unwrap();
        assert!(rem.is_zero());
        assert!(quo.max_coeff_diff(&q).unwrap() < 1e-15);
        // z1 z2 + 1 = z2 (z1 - 1) + (z2 + 1)
        let f = sp(2, &[(vec![1, 1], 1.0), (vec![0, 0], 1.0)]);
        let g = sp(2, &[(vec![1, 0], 1.0), (vec![0, 0], -1.0)]);
        let (quo, rem) = divide(&f, &g, 1e-14).unwrap();
        assert!(quo.max_coeff_diff(&sp(2, &[(vec![0, 1], 1.0)])).unwrap() < 1e-15);
        assert!(rem.max_coeff_diff(&sp(2, &[(vec![0, 1], 1.0), (vec![0, 0], 1.0)])).unwrap() < 1e-15);
    }

    #[test]
    fn determinant_interpolation_matches_expansion() {
        let dom = make_preset::<f64>(Preset::Polydisk(2)).unwrap();
        let k = CMat::from_row_slice(2, 2, &[cx(0.3, 0.1), cx(0.2, 0.0), cx(-0.1, 0.0), cx(0.4, 0.0)]);
        let dp = determinant_poly(&k, &[1, 1], &dom).unwrap();
        // det [[1 - a z1, -b z2], [-c z1, 1 - d z2]] = 1 - a z1 - d z2 + (ad - bc) z1 z2
        let (a, b, c, d) = (k[(0, 0)], k[(0, 1)], k[(1, 0)], k[(1, 1)]);
        let want = MatPoly::scalar(2, &[(vec![0, 0], cx(1.0, 0.0)), (vec![1, 0], -a), (vec![0, 1], -d), (vec![1, 1], a * d - b * c)]).unwrap();
        assert!(dp.max_coeff_diff(&want).unwrap() < 1e-14);
    }

    #[test]
    fn one_dimensional_detrep() {
        let dom = make_preset::<f64>(Preset::Polydisk(1)).unwrap();
        let p = sp(1, &[(vec![0], 1.0), (vec![1], -0.5)]);
        let rep = extract_detrep(&p, &dom, 0, 2, &DetRepOptions::default()).unwrap();
        assert_eq!(rep.n, vec![1]);
        assert!((rep.k[(0, 0)] - cx(0.5, 0.0)).norm() < 1e-8, "{}", rep.k);
        assert!(rep.q.max_coeff_diff(&MatPoly::identity(1, 1)).unwrap() < 1e-8);
        let report = verify_detrep(&rep, &p, &dom, 100, 4).unwrap();
        assert!(report.max_residual <= 1e-12);
        let mut bad = rep.clone();
        bad.k[(0, 0)] += cx(1e-4, 0.0);
        let r = verify_detrep(&bad, &p, &dom, 100, 4).unwrap().max_residual;
        assert!((1e-6..=1e-3).contains(&r), "{r}");
        assert_eq!(verify_detrep(&rep, &p, &dom, 0, 4).unwrap().max_residual, 0.0);
    }

    #[test]
    fn constant_polynomial_has_empty_k() {
        let dom = make_preset::<f64>(Preset::Polydisk(2)).unwrap();
        let rep = extract_detrep(&MatPoly::identity(2, 1), &dom, 0, 1, &DetRepOptions::default()).unwrap();
        assert_eq!(rep.k.nrows(), 0);
        assert!(rep.q.max_coeff_diff(&MatPoly::identity(2, 1)).unwrap() < 1e-12);
    }

    #[test]
    fn scan_examples() {
        let dom = make_preset::<f64>(Preset::Polydisk(1)).unwrap();
        let one = stability_scan(&MatPoly::identity(1, 1), &dom, 50, 1).unwrap();
        assert_eq!(one.min, 1.0);
        let q = sp(1, &[(vec![0], 1.0), (vec![1], -1.0)]);
        let s = stability_scan(&q, &dom, 500, 1).unwrap();
        assert!(s.margins[0].min_modulus >= 0.1 - 1e-12);
        assert!(s.margins[0].min_modulus <= 0.2);
        assert!(!s.flagged);
    }

    #[test]
    fn zero_on_the_domain_is_screened() {
        let dom = make_preset::<f64>(Preset::Polydisk(1)).unwrap();
        let p = sp(1, &[(vec![0], 0.5), (vec![1], -1.0)]);
        assert!(matches!(extract_detrep(&p, &dom, 0, 2, &DetRepOptions::default()), Err(Error::ScreenFailure { .. })));
    }
}
