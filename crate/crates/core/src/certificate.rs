//! Membership certificates in the quadratic module generated by domain defects:
//!
//! `P(w, z) = H_0^*(w) H_0(z) + Σ_j H_j^*(w) (P_j(w, z) ⊗ I_{n_j}) H_j(z)`.
//!
//! The search is a Gram-matrix feasibility problem. With witnesses of degree
//! `≤ D`, the unknowns are `G_0 = V_0^* V_0` indexed by `(μ, a)` (monomial,
//! column) and `W_j = V_j^* V_j` indexed by `(r, μ, a)` (defect row, monomial,
//! column). Coefficient matching of every `(λ, μ)` pair gives the affine
//! constraints; witnesses are read off a PSD factorization.

use std::collections::BTreeMap;

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domains::DomainSpec;
use crate::error::{DegreeAttempt, Error, NotFound, Result};
use crate::poly::{monomials_up_to, CommutingTuple, HermPoly, MatPoly, MultiIndex};
use crate::scalar::{creal, hermitian_eigenvalues, CMat, Real};
use crate::sdp::{psd_factor, solve_psd_feasibility, PsdFeasibilityProblem, SolveOutcome, Term};

/// Gram formulation of a certificate search at one witness degree.
#[derive(Clone, Debug)]
pub struct GramProblem<T: Real> {
    pub target: HermPoly<T>,
    pub defects: Vec<HermPoly<T>>,
    pub degree: usize,
    /// Monomials of degree `≤ degree`, shared by `B_0` and every `B_j`.
    pub basis: Vec<MultiIndex>,
    pub sdp: PsdFeasibilityProblem<T>,
}

impl<T: Real> GramProblem<T> {
    pub fn gamma(&self) -> usize {
        self.target.size()
    }

    /// Block index of `G_0[(μ, a), ...]`.
    pub fn g0_index(&self, mu: usize, a: usize) -> usize {
        mu * self.gamma() + a
    }

    /// Block index of `W_j[(r, μ, a), ...]`.
    pub fn w_index(&self, r: usize, mu: usize, a: usize) -> usize {
        r * self.basis.len() * self.gamma() + mu * self.gamma() + a
    }
}

/// Sum-of-squares witness for one target.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate<T: Real> {
    /// `n_0 × γ`.
    pub h0: MatPoly<T>,
    /// `H_j` of shape `(m_j n_j) × γ`, rows ordered `r·n_j + t`.
    pub h: Vec<MatPoly<T>>,
    pub n: Vec<usize>,
    pub degree: usize,
    pub residual: T,
    pub iterations: usize,
}

impl<T: Real> Certificate<T> {
    pub fn n0(&self) -> usize {
        self.h0.rows()
    }

    pub fn gamma(&self) -> usize {
        self.h0.cols()
    }

    /// Right-hand side of the identity, `H_0^* H_0 + Σ H_j^* (P_j ⊗ I) H_j`.
    pub fn reconstruct(&self, defects: &[HermPoly<T>]) -> Result<HermPoly<T>> {
        if defects.len() != self.h.len() {
            return Err(Error::DimensionMismatch { expected: self.h.len(), got: defects.len() });
        }
        let mut acc = HermPoly::gram(&self.h0);
        for ((dj, hj), &nj) in defects.iter().zip(&self.h).zip(&self.n) {
            if nj == 0 {
                continue;
            }
            acc = acc.add(&dj.kron_identity(nj).congruence(hj)?)?;
        }
        Ok(acc)
    }

    /// Certificate of `P + P'` from certificates of `P` and `P'` (witnesses stacked).
    pub fn sum(&self, other: &Self, defect_sizes: &[usize]) -> Result<Self> {
        let d = self.h0.nvars();
        let gamma = self.gamma();
        let h0 = MatPoly::vstack(d, gamma, &[&self.h0, &other.h0])?;
        let mut h = Vec::new();
        let mut n = Vec::new();
        for j in 0..self.h.len() {
            let m = defect_sizes[j];
            // interleave the r-blocks so that rows stay in r·(n + n') + t order
            let (na, nb) = (self.n[j], other.n[j]);
            let mut parts = Vec::new();
            let row_block = |p: &MatPoly<T>, nn: usize, r: usize| -> Result<MatPoly<T>> {
                select_rows(p, r * nn, nn)
            };
            for r in 0..m {
                parts.push(row_block(&self.h[j], na, r)?);
                parts.push(row_block(&other.h[j], nb, r)?);
            }
            let refs: Vec<&MatPoly<T>> = parts.iter().collect();
            h.push(MatPoly::vstack(d, gamma, &refs)?);
            n.push(na + nb);
        }
        Ok(Certificate {
            h0,
            h,
            n,
            degree: self.degree.max(other.degree),
            residual: self.residual + other.residual,
            iterations: self.iterations + other.iterations,
        })
    }

    /// Certificate of `F^*(w) P F(z)`: every witness is multiplied by `F` on the right.
    pub fn congruence(&self, f: &MatPoly<T>) -> Result<Self> {
        Ok(Certificate {
            h0: self.h0.mul(f)?,
            h: self.h.iter().map(|h| h.mul(f)).collect::<Result<Vec<_>>>()?,
            n: self.n.clone(),
            degree: self.degree + f.degree(),
            residual: self.residual,
            iterations: self.iterations,
        })
    }

    /// Certificate of `P ⊕ P'`.
    pub fn direct_sum(&self, other: &Self, defect_sizes: &[usize]) -> Result<Self> {
        let d = self.h0.nvars();
        let h0 = MatPoly::direct_sum(d, &[&self.h0, &other.h0])?;
        let mut h = Vec::new();
        let mut n = Vec::new();
        for j in 0..self.h.len() {
            let m = defect_sizes[j];
            let (na, nb) = (self.n[j], other.n[j]);
            let mut parts = Vec::new();
            for r in 0..m {
                let a = select_rows(&self.h[j], r * na, na)?;
                let b = select_rows(&other.h[j], r * nb, nb)?;
                parts.push(MatPoly::direct_sum(d, &[&a, &MatPoly::zero(d, 0, other.gamma())])?);
                parts.push(MatPoly::direct_sum(d, &[&MatPoly::zero(d, 0, self.gamma()), &b])?);
            }
            let refs: Vec<&MatPoly<T>> = parts.iter().collect();
            h.push(MatPoly::vstack(d, self.gamma() + other.gamma(), &refs)?);
            n.push(na + nb);
        }
        Ok(Certificate {
            h0,
            h,
            n,
            degree: self.degree.max(other.degree),
            residual: self.residual + other.residual,
            iterations: self.iterations + other.iterations,
        })
    }
}

fn select_rows<T: Real>(p: &MatPoly<T>, start: usize, count: usize) -> Result<MatPoly<T>> {
    let terms: Vec<(MultiIndex, CMat<T>)> =
        p.terms().map(|(e, c)| (e.clone(), c.rows(start, count).into_owned())).collect();
    MatPoly::from_terms(p.nvars(), count, p.cols(), terms)
}

/// Largest `w`- (equivalently `z`-) degree of a Hermitian polynomial's support.
fn window<T: Real>(defects: &[HermPoly<T>], degree: usize) -> usize {
    degree + defects.iter().map(|p| p.degree()).max().unwrap_or(0)
}

/// Assembles the Gram feasibility problem for witnesses of degree `≤ degree`.
pub fn build_gram_problem<T: Real>(target: &HermPoly<T>, defects: &[HermPoly<T>], degree: usize) -> Result<GramProblem<T>> {
    let d = target.nvars();
    for p in defects {
        if p.nvars() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.nvars() });
        }
    }
    let win = window(defects, degree);
    if target.degree() > win {
        return Err(Error::DegreeWindow { target: target.degree(), window: win });
    }
    let gamma = target.size();
    let basis = monomials_up_to(d, degree);
    let nb = basis.len();
    let mut sizes = vec![nb * gamma];
    sizes.extend(defects.iter().map(|p| p.size() * nb * gamma));

    // (λ, μ, a, b) with λ ≤ μ (and a ≤ b when λ = μ) ↦ terms
    type Key = (MultiIndex, MultiIndex, usize, usize);
    let mut rows: BTreeMap<Key, Vec<Term<T>>> = BTreeMap::new();
    let one = creal(T::one());
    for (i, l) in basis.iter().enumerate() {
        for (k, m) in basis.iter().enumerate() {
            if l > m {
                continue;
            }
            for a in 0..gamma {
                for b in 0..gamma {
                    if l == m && a > b {
                        continue;
                    }
                    rows.entry((l.clone(), m.clone(), a, b)).or_default().push(Term {
                        block: 0,
                        row: i * gamma + a,
                        col: k * gamma + b,
                        coeff: one,
                    });
                }
            }
        }
    }
    for (j, p) in defects.iter().enumerate() {
        let mj = p.size();
        for ((al, be), c) in p.terms() {
            for r in 0..mj {
                for s in 0..mj {
                    let crs = c[(r, s)];
                    if crs == creal(T::zero()) {
                        continue;
                    }
                    for (i, l1) in basis.iter().enumerate() {
                        let l = al.add(l1);
                        for (k, m1) in basis.iter().enumerate() {
                            let m = be.add(m1);
                            if l > m {
                                continue;
                            }
                            for a in 0..gamma {
                                for b in 0..gamma {
                                    if l == m && a > b {
                                        continue;
                                    }
                                    rows.entry((l.clone(), m.clone(), a, b)).or_default().push(Term {
                                        block: j + 1,
                                        row: r * nb * gamma + i * gamma + a,
                                        col: s * nb * gamma + k * gamma + b,
                                        coeff: crs,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    // target coefficients outside the reachable set become term-free rows
    for ((l, m), c) in target.terms() {
        if l > m {
            continue;
        }
        for a in 0..gamma {
            for b in 0..gamma {
                if l == m && a > b {
                    continue;
                }
                if c[(a, b)] != creal(T::zero()) {
                    rows.entry((l.clone(), m.clone(), a, b)).or_default();
                }
            }
        }
    }
    let mut sdp = PsdFeasibilityProblem::new(sizes);
    let zero = CMat::zeros(gamma, gamma);
    for ((l, m, a, b), terms) in rows {
        let rhs = target.coeff(&l, &m).unwrap_or(&zero)[(a, b)];
        sdp.add_constraint(terms, rhs)?;
    }
    Ok(GramProblem { target: target.clone(), defects: defects.to_vec(), degree, basis, sdp })
}

/// Settings for [`certify`].
#[derive(Clone, Debug)]
pub struct CertifyOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub rank_tol: f64,
    /// Run the necessity screen before solving.
    pub screen: bool,
    pub screen_samples: usize,
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            tol: crate::sdp::DEFAULT_TOL,
            max_iter: crate::sdp::DEFAULT_MAX_ITER,
            rank_tol: crate::sdp::DEFAULT_RANK_TOL,
            screen: true,
            screen_samples: 64,
            seed: 0,
        }
    }
}

/// Checks `P(z̄, z) ⪰ -tol` at the origin and on interior and boundary samples.
/// Returns the first violating point and its smallest eigenvalue.
pub fn necessity_screen<T: Real>(
    target: &HermPoly<T>,
    domain: &DomainSpec<T>,
    samples: usize,
    seed: u64,
    tol: T,
) -> Result<Option<(Vec<Complex<T>>, T)>> {
    let mut points = vec![vec![creal(T::zero()); domain.nvars()]];
    // custom domains without a declared bound are screened at the origin only
    if domain.coordinate_bound().is_some() && samples > 0 {
        points.extend(domain.sample_interior(samples, T::lit(1e-3), seed)?);
        points.extend(domain.sample_boundary(samples, seed)?);
    }
    for z in points {
        let ev = hermitian_eigenvalues(&target.eval_diagonal(&z)?);
        if let Some(&lmin) = ev.first() {
            if lmin < -tol {
                return Ok(Some((z, lmin)));
            }
        }
    }
    Ok(None)
}

fn to_pairs<T: Real>(z: &[Complex<T>]) -> Vec<(f64, f64)> {
    z.iter().map(|c| (c.re.to_f64_lossy(), c.im.to_f64_lossy())).collect()
}

/// Extracts witnesses from a Gram solution. Eigenvalues below
/// `rank_tol · λ_max` (over all blocks) or below `floor` are dropped.
fn extract<T: Real>(gp: &GramProblem<T>, blocks: &[CMat<T>], rank_tol: T, floor: T) -> Result<Certificate<T>> {
    let d = gp.target.nvars();
    let gamma = gp.gamma();
    let nb = gp.basis.len();
    let global = blocks
        .iter()
        .filter(|b| b.nrows() > 0)
        .map(|b| *hermitian_eigenvalues(b).last().unwrap())
        .fold(T::zero(), |a, b| a.max(b));
    let cut = (rank_tol * global).max(floor);
    let factor = |w: &CMat<T>| -> Result<CMat<T>> {
        let lmax = if w.nrows() == 0 { T::zero() } else { *hermitian_eigenvalues(w).last().unwrap() };
        if lmax <= cut {
            return Ok(CMat::zeros(0, w.nrows()));
        }
        Ok(psd_factor(&crate::sdp::clip_psd(w), cut / lmax)?.0)
    };
    let to_poly = |v: &CMat<T>, rblocks: usize| -> Result<(MatPoly<T>, usize)> {
        let n = v.nrows();
        let mut terms = Vec::new();
        for (mu, e) in gp.basis.iter().enumerate() {
            let mut c = CMat::zeros(rblocks * n, gamma);
            for r in 0..rblocks {
                let col0 = r * nb * gamma + mu * gamma;
                c.view_mut((r * n, 0), (n, gamma)).copy_from(&v.view((0, col0), (n, gamma)));
            }
            terms.push((e.clone(), c));
        }
        Ok((MatPoly::from_terms(d, rblocks * n, gamma, terms)?, n))
    };
    let (h0, _) = to_poly(&factor(&blocks[0])?, 1)?;
    let mut h = Vec::new();
    let mut n = Vec::new();
    for (j, p) in gp.defects.iter().enumerate() {
        let (hj, nj) = to_poly(&factor(&blocks[j + 1])?, p.size())?;
        h.push(hj);
        n.push(nj);
    }
    let mut cert = Certificate { h0, h, n, degree: gp.degree, residual: T::zero(), iterations: 0 };
    cert.residual = gp.target.max_coeff_diff(&cert.reconstruct(&gp.defects)?)?;
    Ok(cert)
}

/// Solves one degree. `Ok(Ok(cert))` on success, `Ok(Err(attempt))` when
/// this degree yields nothing.
pub fn certify_at_degree<T: Real>(
    target: &HermPoly<T>,
    defects: &[HermPoly<T>],
    degree: usize,
    opts: &CertifyOptions,
) -> Result<std::result::Result<Certificate<T>, DegreeAttempt>> {
    let tol = T::lit(opts.tol);
    let gp = match build_gram_problem(target, defects, degree) {
        Ok(g) => g,
        Err(Error::DegreeWindow { .. }) => {
            return Ok(Err(DegreeAttempt {
                degree,
                outcome: "structural".into(),
                iterations: 0,
                slack: f64::NEG_INFINITY,
                residual: f64::INFINITY,
            }))
        }
        Err(e) => return Err(e),
    };
    let attempt = |outcome: &str, iterations: usize, slack: f64, residual: f64| DegreeAttempt {
        degree,
        outcome: outcome.into(),
        iterations,
        slack,
        residual,
    };
    match solve_psd_feasibility(&gp.sdp, tol, opts.max_iter)? {
        SolveOutcome::Solved(sol) => {
            let floors = [tol * T::lit(1e-2), T::zero()];
            let mut best: Option<Certificate<T>> = None;
            for (k, &floor) in floors.iter().enumerate() {
                let rt = if k == 0 { T::lit(opts.rank_tol) } else { T::zero() };
                let mut c = extract(&gp, &sol.blocks, rt, floor)?;
                c.iterations = sol.iterations;
                if c.residual <= tol {
                    return Ok(Ok(c));
                }
                if best.as_ref().map_or(true, |b| c.residual < b.residual) {
                    best = Some(c);
                }
            }
            let b = best.expect("at least one extraction");
            Ok(Err(attempt("residual", sol.iterations, sol.slack.to_f64_lossy(), b.residual.to_f64_lossy())))
        }
        SolveOutcome::Infeasible(inf) => {
            let kind = match inf.reason {
                crate::sdp::InfeasibilityReason::Structural => "structural",
                _ => "infeasible",
            };
            Ok(Err(attempt(kind, inf.iterations, inf.slack_bound, f64::NAN)))
        }
        SolveOutcome::IterationBudgetExceeded { iterations, slack, residual } => {
            Ok(Err(attempt("iteration-budget", iterations, slack, residual)))
        }
    }
}

/// Degree-escalating certificate search for `target ∈ M_γ` over `domain`.
pub fn certify<T: Real>(
    target: &HermPoly<T>,
    domain: &DomainSpec<T>,
    d_min: usize,
    d_max: usize,
    opts: &CertifyOptions,
) -> Result<Certificate<T>> {
    if d_min > d_max {
        return Err(Error::InvalidParameter(format!("D_min {d_min} exceeds D_max {d_max}")));
    }
    if target.nvars() != domain.nvars() {
        return Err(Error::DimensionMismatch { expected: domain.nvars(), got: target.nvars() });
    }
    let tol = T::lit(opts.tol);
    if opts.screen {
        if let Some((z, v)) = necessity_screen(target, domain, opts.screen_samples, opts.seed, tol)? {
            return Err(Error::NotFound(Box::new(NotFound {
                highest_degree: None,
                attempts: Vec::new(),
                screen_witness: Some(to_pairs(&z)),
                screen_value: Some(v.to_f64_lossy()),
            })));
        }
    }
    let defects = domain.defect_polys();
    let mut attempts = Vec::new();
    for degree in d_min..=d_max {
        match certify_at_degree(target, &defects, degree, opts)? {
            Ok(c) => return Ok(c),
            Err(a) => attempts.push(a),
        }
    }
    Err(Error::NotFound(Box::new(NotFound {
        highest_degree: Some(d_max),
        attempts,
        screen_witness: None,
        screen_value: None,
    })))
}

/// Largest coefficient mismatch between `target` and the certificate's right-hand side.
pub fn certificate_residual<T: Real>(target: &HermPoly<T>, cert: &Certificate<T>, domain: &DomainSpec<T>) -> Result<T> {
    target.max_coeff_diff(&cert.reconstruct(&domain.defect_polys())?)
}

/// One hereditary evaluation check.
#[derive(Clone, Debug, PartialEq)]
pub struct SpotTrial {
    pub defect_min_eigs: Vec<f64>,
    pub target_min_eig: f64,
    /// `‖P(T^*, T) - RHS(T^*, T)‖_F`.
    pub mismatch: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SpotCheckReport {
    pub trials: Vec<SpotTrial>,
    pub failures: usize,
    pub tol: f64,
}

impl SpotCheckReport {
    pub fn max_mismatch(&self) -> f64 {
        self.trials.iter().map(|t| t.mismatch).fold(0.0, f64::max)
    }

    pub fn min_target_eig(&self) -> f64 {
        self.trials.iter().map(|t| t.target_min_eig).fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates target, reconstruction and defects at one commuting tuple.
pub fn spot_check_tuple<T: Real>(
    target: &HermPoly<T>,
    cert: &Certificate<T>,
    domain: &DomainSpec<T>,
    tuple: &CommutingTuple<T>,
) -> Result<SpotTrial> {
    let defects = domain.defect_polys();
    let lhs = target.hereditary_eval(tuple)?;
    let rhs = cert.reconstruct(&defects)?.hereditary_eval(tuple)?;
    let min_eig = |m: &CMat<T>| hermitian_eigenvalues(m).first().map_or(0.0, |v| v.to_f64_lossy());
    Ok(SpotTrial {
        defect_min_eigs: defects.iter().map(|p| p.hereditary_eval(tuple).map(|m| min_eig(&m))).collect::<Result<_>>()?,
        target_min_eig: min_eig(&lhs),
        mismatch: (lhs - rhs).norm().to_f64_lossy(),
    })
}

/// Random commuting normal tuples `U diag(z^(1..N)) U^*` with joint spectrum
/// drawn inside the domain; a trial fails when a defect or the target is not
/// PSD up to `tol` or when the target and reconstruction disagree by more than `tol`.
pub fn hereditary_spot_check<T: Real>(
    target: &HermPoly<T>,
    cert: &Certificate<T>,
    domain: &DomainSpec<T>,
    trials: usize,
    matrix_size: usize,
    seed: u64,
    tol: f64,
) -> Result<SpotCheckReport> {
    let mut report = SpotCheckReport { trials: Vec::new(), failures: 0, tol };
    if trials == 0 {
        return Ok(report);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let s: u64 = rng.gen();
        let pts = domain.sample_interior(matrix_size, T::lit(1e-3), s)?;
        let diag = CommutingTuple::diagonal(&pts, domain.nvars())?;
        let g = CMat::<T>::from_fn(matrix_size, matrix_size, |_, _| {
            Complex::new(T::lit(rng.gen::<f64>() - 0.5), T::lit(rng.gen::<f64>() - 0.5))
        });
        let u = g.qr().q();
        let tuple = diag.conjugated(&u)?;
        let trial = spot_check_tuple(target, cert, domain, &tuple)?;
        let bad = trial.mismatch > tol || trial.target_min_eig < -tol || trial.defect_min_eigs.iter().any(|&v| v < -tol);
        if bad {
            report.failures += 1;
        }
        report.trials.push(trial);
    }
    Ok(report)
}
