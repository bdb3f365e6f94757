//! Contractive transfer-function realizations by the lurking contraction.
//!
//! Given `F = Q R^{-1}` and a certificate
//! `R^*R - Q^*Q = H_0^*H_0 + Σ H_i^* ((I - P_i^*P_i) ⊗ I_{n_i}) H_i`,
//! set `v = [(P_i ⊗ I_{n_i}) H_i; R]` and `x = [H_i; Q]`. Then
//! `v^*v = H_0^*H_0 + x^*x`, so `v(z)y ↦ x(z)y` is a well-defined contraction
//! `S` on the span of the `v(z)y`. Extended by zero, its blocks
//! `S = [A B; C D]` give `F(z) = D + C P(z)_n (I - A P(z)_n)^{-1} B`.

use nalgebra::{Complex, ComplexField};

use crate::certificate::{certificate_residual, certify, Certificate, CertifyOptions};
use crate::domains::DomainSpec;
use crate::error::{Error, Result};
use crate::poly::{HermPoly, MatPoly, MultiIndex};
use crate::scalar::{creal, det, spectral_norm, CMat, Real};

/// `F = Q R^{-1}` with `Q` of shape `α × β` and `R` of shape `β × β`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMatFn<T: Real> {
    q: MatPoly<T>,
    r: MatPoly<T>,
}

impl<T: Real> RationalMatFn<T> {
    pub fn new(q: MatPoly<T>, r: MatPoly<T>) -> Result<Self> {
        if q.nvars() != r.nvars() {
            return Err(Error::DimensionMismatch { expected: q.nvars(), got: r.nvars() });
        }
        if r.rows() != r.cols() || q.cols() != r.rows() {
            return Err(Error::ShapeMismatch(format!(
                "Q is {}x{} and R is {}x{}; need Q alpha x beta and R beta x beta",
                q.rows(),
                q.cols(),
                r.rows(),
                r.cols()
            )));
        }
        Ok(RationalMatFn { q, r })
    }

    pub fn q(&self) -> &MatPoly<T> {
        &self.q
    }

    pub fn r(&self) -> &MatPoly<T> {
        &self.r
    }

    pub fn nvars(&self) -> usize {
        self.q.nvars()
    }

    /// `(α, β)`.
    pub fn shape(&self) -> (usize, usize) {
        self.q.shape()
    }

    /// `Q(z) R(z)^{-1}`.
    pub fn eval(&self, z: &[Complex<T>]) -> Result<CMat<T>> {
        let q = self.q.eval(z)?;
        let r = self.r.eval(z)?;
        // F = Q R^{-1}  ⟺  R^T F^T = Q^T
        let ft = r.transpose().lu().solve(&q.transpose()).ok_or(Error::NearSingular(f64::INFINITY))?;
        Ok(ft.transpose())
    }

    /// Smallest `|det R(z)|` over the points.
    pub fn min_abs_det_r(&self, points: &[Vec<Complex<T>>]) -> Result<T> {
        let mut best = T::max_value().unwrap_or_else(|| T::lit(1e300));
        for z in points {
            best = best.min(det(&self.r.eval(z)?).modulus());
        }
        Ok(best)
    }
}

/// `R^*(w) R(z) - Q^*(w) Q(z)`.
pub fn defect_of<T: Real>(f: &RationalMatFn<T>) -> Result<HermPoly<T>> {
    HermPoly::gram(&f.r).sub(&HermPoly::gram(&f.q))
}

/// Diagnostics recorded while building a colligation.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub degree: usize,
    pub solver_iterations: usize,
    pub certificate_residual: f64,
    /// Coefficientwise residual of `v^*v - H_0^*H_0 - x^*x`.
    pub lurking_residual: f64,
    /// `‖X - S V‖_F`, the part of `X` not supported on the span of `V`.
    pub consistency_residual: f64,
    /// Largest singular value of `S` before any clipping.
    pub raw_sigma_max: f64,
    /// Whether singular values slightly above 1 were clipped.
    pub clipped: bool,
    /// Relative singular value cut used for the pseudoinverse.
    pub pinv_cut: f64,
}

/// `[A B; C D]` with multiplicities `n` for the blocks `P_i ⊗ I_{n_i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Colligation<T: Real> {
    pub a: CMat<T>,
    pub b: CMat<T>,
    pub c: CMat<T>,
    pub d: CMat<T>,
    pub n: Vec<usize>,
    /// `(ℓ_i, m_i)` of the domain blocks.
    pub block_shapes: Vec<(usize, usize)>,
    pub provenance: Option<Provenance>,
}

impl<T: Real> Colligation<T> {
    /// Checks that the block sizes agree with `n` and the domain shapes.
    pub fn new(a: CMat<T>, b: CMat<T>, c: CMat<T>, d: CMat<T>, n: Vec<usize>, block_shapes: Vec<(usize, usize)>) -> Result<Self> {
        if n.len() != block_shapes.len() {
            return Err(Error::DimensionMismatch { expected: block_shapes.len(), got: n.len() });
        }
        let sm: usize = n.iter().zip(&block_shapes).map(|(ni, (_, m))| ni * m).sum();
        let sl: usize = n.iter().zip(&block_shapes).map(|(ni, (l, _))| ni * l).sum();
        let (alpha, beta) = d.shape();
        let ok = a.shape() == (sm, sl) && b.shape() == (sm, beta) && c.shape() == (alpha, sl);
        if !ok {
            return Err(Error::ShapeMismatch(format!(
                "colligation blocks A {:?}, B {:?}, C {:?}, D {:?} do not fit n = {n:?}",
                a.shape(),
                b.shape(),
                c.shape(),
                d.shape()
            )));
        }
        Ok(Colligation { a, b, c, d, n, block_shapes, provenance: None })
    }

    /// `[A B; C D]`.
    pub fn matrix(&self) -> CMat<T> {
        let (sm, sl) = self.a.shape();
        let (alpha, beta) = self.d.shape();
        let mut s = CMat::zeros(sm + alpha, sl + beta);
        s.view_mut((0, 0), (sm, sl)).copy_from(&self.a);
        s.view_mut((0, sl), (sm, beta)).copy_from(&self.b);
        s.view_mut((sm, 0), (alpha, sl)).copy_from(&self.c);
        s.view_mut((sm, sl), (alpha, beta)).copy_from(&self.d);
        s
    }

    pub fn sigma_max(&self) -> T {
        spectral_norm(&self.matrix())
    }
}

/// `v = [(P_i ⊗ I_{n_i}) H_i; R]` and `x = [H_i; Q]`.
pub fn lurking_vectors<T: Real>(f: &RationalMatFn<T>, cert: &Certificate<T>, domain: &DomainSpec<T>) -> Result<(MatPoly<T>, MatPoly<T>)> {
    let d = f.nvars();
    let beta = f.shape().1;
    if cert.gamma() != beta || cert.h.len() != domain.blocks().len() {
        return Err(Error::ShapeMismatch(format!(
            "certificate has gamma {} and {} witnesses; expected {beta} and {}",
            cert.gamma(),
            cert.h.len(),
            domain.blocks().len()
        )));
    }
    let mut vparts = Vec::new();
    let mut xparts = Vec::new();
    for ((p, h), &n) in domain.blocks().iter().zip(&cert.h).zip(&cert.n) {
        if n == 0 {
            continue;
        }
        vparts.push(p.kron_identity(n).mul(h)?);
        xparts.push(h.clone());
    }
    vparts.push(f.r.clone());
    xparts.push(f.q.clone());
    let v = MatPoly::vstack(d, beta, &vparts.iter().collect::<Vec<_>>())?;
    let x = MatPoly::vstack(d, beta, &xparts.iter().collect::<Vec<_>>())?;
    Ok((v, x))
}

/// Coefficientwise residual of `v^*v - H_0^*H_0 - x^*x`.
pub fn lurking_residual<T: Real>(f: &RationalMatFn<T>, cert: &Certificate<T>, domain: &DomainSpec<T>) -> Result<T> {
    let (v, x) = lurking_vectors(f, cert, domain)?;
    let lhs = HermPoly::gram(&v);
    let rhs = HermPoly::gram(&cert.h0).add(&HermPoly::gram(&x))?;
    lhs.max_coeff_diff(&rhs)
}

fn common_basis<T: Real>(polys: &[&MatPoly<T>]) -> Vec<MultiIndex> {
    let mut b: Vec<MultiIndex> = polys.iter().flat_map(|p| p.support().cloned()).collect();
    b.sort();
    b.dedup();
    b
}

/// Numerical rank with cut `rel · σ_max`.
pub fn numerical_rank<T: Real>(m: &CMat<T>, rel: T) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().fold(T::zero(), |a, &b| a.max(b));
    sv.iter().filter(|&&s| s > rel * smax && s > T::zero()).count()
}

/// `rank([V; X]) - rank(V)` on the coefficient span matrices; zero when
/// every `X`-row lies in the row space spanned by the `V`-coefficients.
pub fn kernel_rank_gap<T: Real>(f: &RationalMatFn<T>, cert: &Certificate<T>, domain: &DomainSpec<T>, rel: T) -> Result<isize> {
    let (v, x) = lurking_vectors(f, cert, domain)?;
    let basis = common_basis(&[&v, &x]);
    let vh = v.coeff_span_matrix(&basis)?;
    let xh = x.coeff_span_matrix(&basis)?;
    let stacked = crate::scalar::vstack(&[vh.clone(), xh], vh.ncols());
    Ok(numerical_rank(&stacked, rel) as isize - numerical_rank(&vh, rel) as isize)
}

/// `X · V^+` with the pseudoinverse truncated at `cut · σ_max`.
fn span_map<T: Real>(vh: &CMat<T>, xh: &CMat<T>, cut: T) -> CMat<T> {
    let (rv, rx) = (vh.nrows(), xh.nrows());
    if rv == 0 || vh.ncols() == 0 {
        return CMat::zeros(rx, rv);
    }
    let svd = vh.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let smax = svd.singular_values.iter().fold(T::zero(), |a, &b| a.max(b));
    let mut s = CMat::zeros(rx, rv);
    for (k, &sk) in svd.singular_values.iter().enumerate() {
        if sk > cut * smax && sk > T::zero() {
            // X w_k σ_k^{-1} u_k^*
            let wk = vt.row(k).adjoint();
            let xw = xh * wk * creal(T::one() / sk);
            s += xw * u.column(k).adjoint();
        }
    }
    s
}

/// Clips singular values above 1.
fn clip_contraction<T: Real>(s: &CMat<T>) -> CMat<T> {
    if s.nrows() == 0 || s.ncols() == 0 {
        return s.clone();
    }
    let svd = s.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let sig = svd.singular_values.map(|x| creal(x.min(T::one())));
    let k = sig.len();
    let mut out = CMat::zeros(s.nrows(), s.ncols());
    for i in 0..k {
        out += u.column(i) * vt.row(i) * sig[i];
    }
    out
}

/// Builds the colligation from a certificate of `R^*R - Q^*Q`.
pub fn lurking_contraction<T: Real>(f: &RationalMatFn<T>, cert: &Certificate<T>, domain: &DomainSpec<T>, tol: T) -> Result<Colligation<T>> {
    let cres = certificate_residual(&defect_of(f)?, cert, domain)?;
    if cres > tol {
        return Err(Error::Consistency(cres.to_f64_lossy()));
    }
    let (v, x) = lurking_vectors(f, cert, domain)?;
    let basis = common_basis(&[&v, &x]);
    let vh = v.coeff_span_matrix(&basis)?;
    let xh = x.coeff_span_matrix(&basis)?;
    let scale = vh.norm().max(xh.norm()).max(T::one());

    // X vanishes on the kernel of V and S is contractive in exact arithmetic.
    // The pseudoinverse cut is raised only if noise in the certificate
    // pushes S past the contraction bound.
    let overshoot = T::lit(100.0) * tol;
    let cuts = [1e-9, 1e-8, 1e-7, 1e-6];
    let mut chosen = None;
    for &cut in &cuts {
        let s = span_map(&vh, &xh, T::lit(cut));
        let mismatch = (&xh - &s * &vh).norm();
        let smax = spectral_norm(&s);
        let ok = smax <= T::one() + overshoot;
        if chosen.is_none() || ok {
            chosen = Some((s, mismatch, smax, cut));
        }
        if ok {
            break;
        }
    }
    let (mut s, mismatch, smax, cut) = chosen.expect("at least one cut");
    if mismatch > T::lit(1e-5) * scale {
        return Err(Error::Consistency(mismatch.to_f64_lossy()));
    }
    if smax > T::one() + overshoot {
        return Err(Error::ContractionViolation(smax.to_f64_lossy()));
    }
    let clipped = smax > T::one();
    if clipped {
        s = clip_contraction(&s);
    }

    let n = cert.n.clone();
    let shapes = domain.block_shapes();
    let sm: usize = n.iter().zip(&shapes).map(|(ni, (_, m))| ni * m).sum();
    let sl: usize = n.iter().zip(&shapes).map(|(ni, (l, _))| ni * l).sum();
    let (alpha, beta) = f.shape();
    let a = s.view((0, 0), (sm, sl)).into_owned();
    let b = s.view((0, sl), (sm, beta)).into_owned();
    let c = s.view((sm, 0), (alpha, sl)).into_owned();
    let d = s.view((sm, sl), (alpha, beta)).into_owned();
    let mut col = Colligation::new(a, b, c, d, n, shapes)?;
    col.provenance = Some(Provenance {
        degree: cert.degree,
        solver_iterations: cert.iterations,
        certificate_residual: cres.to_f64_lossy(),
        lurking_residual: lurking_residual(f, cert, domain)?.to_f64_lossy(),
        consistency_residual: mismatch.to_f64_lossy(),
        raw_sigma_max: smax.to_f64_lossy(),
        clipped,
        pinv_cut: cut,
    });
    Ok(col)
}

/// Settings for [`realize`].
#[derive(Clone, Debug)]
pub struct RealizeOptions {
    pub certify: CertifyOptions,
    /// Interior samples for the sup-norm and `det R` screens.
    pub screen_samples: usize,
}

impl Default for RealizeOptions {
    fn default() -> Self {
        RealizeOptions { certify: CertifyOptions::default(), screen_samples: 200 }
    }
}

fn pairs<T: Real>(z: &[Complex<T>]) -> Vec<(f64, f64)> {
    z.iter().map(|c| (c.re.to_f64_lossy(), c.im.to_f64_lossy())).collect()
}

/// Screens `sup ‖F‖ < 1` and `det R ≠ 0` on samples, certifies
/// `R^*R - Q^*Q` with degree escalation and builds the colligation.
pub fn realize<T: Real>(f: &RationalMatFn<T>, domain: &DomainSpec<T>, d_min: usize, d_max: usize, opts: &RealizeOptions) -> Result<Colligation<T>> {
    if f.nvars() != domain.nvars() {
        return Err(Error::DimensionMismatch { expected: domain.nvars(), got: f.nvars() });
    }
    let mut points = vec![vec![creal(T::zero()); domain.nvars()]];
    if domain.coordinate_bound().is_some() {
        points.extend(domain.sample_interior(opts.screen_samples, T::lit(1e-3), opts.certify.seed)?);
    }
    for z in &points {
        let dr = det(&f.r.eval(z)?).modulus();
        if dr <= T::lit(1e-12) {
            return Err(Error::ScreenFailure { reason: "det R vanishes".into(), point: pairs(z), value: dr.to_f64_lossy() });
        }
        let nf = spectral_norm(&f.eval(z)?);
        if nf >= T::one() {
            return Err(Error::ScreenFailure { reason: "sup norm is not below 1".into(), point: pairs(z), value: nf.to_f64_lossy() });
        }
    }
    let defect = defect_of(f)?;
    let cert = certify(&defect, domain, d_min, d_max, &opts.certify)?;
    let tol = T::lit(opts.certify.tol);
    let first = lurking_contraction(f, &cert, domain, tol);
    if !matches!(first, Err(Error::ContractionViolation(_)) | Err(Error::Consistency(_))) {
        return first;
    }
    // A nearly singular Gram matrix amplifies solver noise in S; re-solve
    // the same degree at tighter accuracy before giving up.
    let floor = T::eps().to_f64_lossy() * 1e3;
    let mut inner = opts.certify.clone();
    let mut last = first;
    while inner.tol * 1e-2 >= floor {
        inner.tol *= 1e-2;
        inner.screen = false;
        let Ok(c) = certify(&defect, domain, cert.degree, cert.degree, &inner) else { break };
        last = lurking_contraction(f, &c, domain, tol);
        if last.is_ok() {
            break;
        }
    }
    last
}

/// `D + C P(z)_n (I - A P(z)_n)^{-1} B`.
pub fn eval_realization<T: Real>(col: &Colligation<T>, domain: &DomainSpec<T>, z: &[Complex<T>]) -> Result<CMat<T>> {
    let pn = domain.eval_amplified(z, &col.n)?;
    let k = col.a.nrows();
    if k == 0 {
        return Ok(col.d.clone());
    }
    let m = CMat::identity(k, k) - &col.a * &pn;
    let sv = m.clone().singular_values();
    let smin = sv.iter().fold(T::max_value().unwrap_or_else(|| T::lit(1e300)), |a, &b| a.min(b));
    let smax = sv.iter().fold(T::zero(), |a, &b| a.max(b));
    if smin <= T::lit(1e-13) * smax {
        let cond = if smin > T::zero() { (smax / smin).to_f64_lossy() } else { f64::INFINITY };
        return Err(Error::NearSingular(cond));
    }
    let x = m.lu().solve(&col.b).ok_or(Error::NearSingular(f64::INFINITY))?;
    Ok(&col.d + &col.c * pn * x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealizationReport {
    pub max_error: f64,
    pub sigma_max: f64,
    pub samples: usize,
    pub seed: u64,
    pub margin: f64,
}

/// Largest `‖eval_realization(z) - Q(z)R(z)^{-1}‖` over interior samples.
pub fn verify_realization<T: Real>(
    col: &Colligation<T>,
    f: &RationalMatFn<T>,
    domain: &DomainSpec<T>,
    samples: usize,
    seed: u64,
) -> Result<RealizationReport> {
    let margin = 1e-2;
    let mut max_error = T::zero();
    for z in domain.sample_interior(samples, T::lit(margin), seed)? {
        let e = spectral_norm(&(eval_realization(col, domain, &z)? - f.eval(&z)?));
        max_error = max_error.max(e);
    }
    Ok(RealizationReport {
        max_error: max_error.to_f64_lossy(),
        sigma_max: col.sigma_max().to_f64_lossy(),
        samples,
        seed,
        margin,
    })
}
