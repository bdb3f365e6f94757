//! Hermitian PSD feasibility with affine constraints.
//!
//! A problem has Hermitian variables `X_1, ..., X_J` and complex affine
//! constraints `Σ c · X_j[p, q] = b`. The solver maximizes the minimum
//! eigenvalue slack `t` (every `X_j ⪰ t I`) and reports the problem
//! feasible when `t ≥ -tol` with constraint residual `≤ tol`.
//!
//! Pipeline: split every complex constraint into real Hermitian trace
//! functionals, presolve (diagonal entries forced to zero remove their
//! row and column; empty rows are checked), select an independent row set
//! and check affine consistency by least-norm projection, then run an
//! infeasible-start primal-dual interior point method (HKM direction with
//! Mehrotra correction) on `max t  s.t.  A(Y + tI) = b, Y ⪰ 0`.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{Cholesky, Complex, ComplexField, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{creal, hermitian_eigenvalues, hermitian_part, CMat, Real};

/// One summand `coeff · X_block[row, col]` of a constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct Term<T: Real> {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub coeff: Complex<T>,
}

/// `Σ terms = rhs` over the complex numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<T: Real> {
    pub terms: Vec<Term<T>>,
    pub rhs: Complex<T>,
}

#[derive(Clone, Debug, Default)]
pub struct PsdFeasibilityProblem<T: Real> {
    block_sizes: Vec<usize>,
    constraints: Vec<Constraint<T>>,
}

impl<T: Real> PsdFeasibilityProblem<T> {
    pub fn new(block_sizes: Vec<usize>) -> Self {
        PsdFeasibilityProblem { block_sizes, constraints: Vec::new() }
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn constraints(&self) -> &[Constraint<T>] {
        &self.constraints
    }

    pub fn add_constraint(&mut self, terms: Vec<Term<T>>, rhs: Complex<T>) -> Result<()> {
        for t in &terms {
            let n = *self.block_sizes.get(t.block).ok_or_else(|| {
                Error::ShapeMismatch(format!("constraint references block {} of {}", t.block, self.block_sizes.len()))
            })?;
            if t.row >= n || t.col >= n {
                return Err(Error::ShapeMismatch(format!(
                    "entry ({}, {}) outside block {} of size {n}",
                    t.row, t.col, t.block
                )));
            }
        }
        self.constraints.push(Constraint { terms, rhs });
        Ok(())
    }

    /// Largest constraint violation `|Σ c X[p,q] - b|` at the given blocks.
    pub fn residual(&self, blocks: &[CMat<T>]) -> T {
        self.constraints
            .iter()
            .map(|c| {
                let mut acc = -c.rhs;
                for t in &c.terms {
                    acc += t.coeff * blocks[t.block][(t.row, t.col)];
                }
                acc.modulus()
            })
            .fold(T::zero(), |a, b| a.max(b))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsdSolution<T: Real> {
    pub blocks: Vec<CMat<T>>,
    /// Smallest eigenvalue over all blocks.
    pub slack: T,
    pub residual: T,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InfeasibilityReason {
    /// A constraint touches no free variable but has a nonzero right-hand side.
    Structural,
    /// The affine constraint set is inconsistent; carries its least-squares distance.
    AffineInconsistent(f64),
    /// A dual feasible point bounds the achievable slack below zero.
    DualBound,
    /// The interior point iteration stopped making progress with a negative slack.
    Stalled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Infeasible {
    pub reason: InfeasibilityReason,
    /// Upper bound (or best estimate) of the achievable slack.
    pub slack_bound: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolveOutcome<T: Real> {
    Solved(PsdSolution<T>),
    /// Infeasible at this precision; never a claim of mathematical nonexistence.
    Infeasible(Infeasible),
    IterationBudgetExceeded { iterations: usize, slack: f64, residual: f64 },
}

impl<T: Real> SolveOutcome<T> {
    pub fn solution(&self) -> Option<&PsdSolution<T>> {
        match self {
            SolveOutcome::Solved(s) => Some(s),
            _ => None,
        }
    }
}

/// Default solver tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default iteration budget.
pub const DEFAULT_MAX_ITER: usize = 50_000;
/// Default relative eigenvalue cut for [`psd_factor`].
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// `[[Re H, -Im H], [Im H, Re H]]`.
pub fn embed_complex<T: Real>(h: &CMat<T>) -> Result<DMatrix<T>> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::ShapeMismatch(format!("embed_complex needs a square matrix, got {}x{}", n, h.ncols())));
    }
    let dev = (h - h.adjoint()).iter().map(|z| z.modulus()).fold(T::zero(), |a, b| a.max(b));
    let scale = h.iter().map(|z| z.modulus()).fold(T::one(), |a, b| a.max(b));
    if dev > T::lit(1e-12) * scale {
        return Err(Error::NotHermitian(dev.to_f64_lossy()));
    }
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    Ok(out)
}

/// Inverse of [`embed_complex`]; averages the redundant blocks.
pub fn unembed_complex<T: Real>(s: &DMatrix<T>) -> Result<CMat<T>> {
    if s.nrows() != s.ncols() || s.nrows() % 2 != 0 {
        return Err(Error::ShapeMismatch(format!("expected 2n x 2n, got {}x{}", s.nrows(), s.ncols())));
    }
    let n = s.nrows() / 2;
    let half = T::lit(0.5);
    Ok(CMat::from_fn(n, n, |i, j| {
        Complex::new(
            (s[(i, j)] + s[(i + n, j + n)]) * half,
            (s[(i + n, j)] - s[(i, j + n)]) * half,
        )
    }))
}

/// Factors a PSD matrix as `W ≈ V^* V` keeping eigenvalues above
/// `rank_tol · λ_max`. Rows of `V` follow descending eigenvalues and each
/// row is phase-normalized so its largest-modulus entry is real positive.
pub fn psd_factor<T: Real>(w: &CMat<T>, rank_tol: T) -> Result<(CMat<T>, usize)> {
    let n = w.nrows();
    if w.ncols() != n {
        return Err(Error::ShapeMismatch(format!("psd_factor needs a square matrix, got {}x{}", n, w.ncols())));
    }
    if n == 0 {
        return Ok((CMat::zeros(0, 0), 0));
    }
    let eig = hermitian_part(w).symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(T::zero(), |a, &b| a.max(b));
    let lmin = eig.eigenvalues.iter().fold(T::zero(), |a, &b| a.min(b));
    if lmin < -rank_tol * lmax.max(T::one()) {
        return Err(Error::Indefinite(lmin.to_f64_lossy()));
    }
    let cut = rank_tol * lmax;
    let mut order: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > cut && eig.eigenvalues[i] > T::zero()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let r = order.len();
    let mut v = CMat::zeros(r, n);
    for (row, &k) in order.iter().enumerate() {
        let s = eig.eigenvalues[k].sqrt();
        let col = eig.eigenvectors.column(k);
        let mut best = 0;
        for i in 0..n {
            if col[i].modulus() > col[best].modulus() + T::eps() * T::lit(16.0) {
                best = i;
            }
        }
        let phase = if col[best].modulus() > T::zero() { col[best] / creal(col[best].modulus()) } else { creal(T::one()) };
        // row = sqrt(λ) u^*, rotated so the entry at `best` is real positive
        for i in 0..n {
            v[(row, i)] = (col[i] * phase.conj()).conj() * creal(s);
        }
    }
    Ok((v, r))
}

// ---------------------------------------------------------------------------
// internal representation

/// Hermitian sparse functional `X ↦ Σ_j tr(A_j X_j)`; entries list both halves.
#[derive(Clone, Debug)]
struct HermRow<T: Real> {
    entries: BTreeMap<(usize, usize, usize), Complex<T>>,
    rhs: T,
}

impl<T: Real> HermRow<T> {
    fn from_real_part(terms: &[Term<T>], rotate: Complex<T>, rhs: T) -> Self {
        let half = creal(T::lit(0.5));
        let mut entries: BTreeMap<(usize, usize, usize), Complex<T>> = BTreeMap::new();
        for t in terms {
            let c = t.coeff * rotate;
            if t.row == t.col {
                *entries.entry((t.block, t.row, t.row)).or_insert_with(|| creal(T::zero())) += creal(c.re);
            } else {
                // Re(c X[p,q]) = tr(A X) with A[q,p] = c/2, A[p,q] = conj(c)/2
                *entries.entry((t.block, t.col, t.row)).or_insert_with(|| creal(T::zero())) += c * half;
                *entries.entry((t.block, t.row, t.col)).or_insert_with(|| creal(T::zero())) += c.conj() * half;
            }
        }
        let scale = entries.values().map(|z| z.modulus()).fold(T::zero(), |a, b| a.max(b));
        let thr = scale * T::eps() * T::lit(8.0);
        entries.retain(|_, z| z.modulus() > thr);
        HermRow { entries, rhs }
    }

    fn norm(&self) -> T {
        self.entries.values().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt()
    }

    fn trace(&self) -> T {
        self.entries.iter().filter(|((_, p, q), _)| p == q).map(|(_, v)| v.re).fold(T::zero(), |a, b| a + b)
    }
}

struct Presolved<T: Real> {
    /// Kept original indices per block.
    keep: Vec<Vec<usize>>,
    rows: Vec<HermRow<T>>,
}

enum PresolveResult<T: Real> {
    Ready(Presolved<T>),
    Infeasible(InfeasibilityReason, f64),
}

fn presolve<T: Real>(sizes: &[usize], rows: Vec<HermRow<T>>, tol: T) -> PresolveResult<T> {
    let mut removed: Vec<Vec<bool>> = sizes.iter().map(|&n| vec![false; n]).collect();
    let mut rows = rows;
    let bscale = rows.iter().map(|r| r.rhs.abs()).fold(T::one(), |a, b| a.max(b));
    let zero_rhs = bscale * T::eps() * T::lit(64.0);
    loop {
        let mut changed = false;
        for r in &rows {
            if r.entries.is_empty() || r.rhs.abs() > zero_rhs {
                continue;
            }
            let diag_only = r.entries.keys().all(|(_, p, q)| p == q);
            if !diag_only {
                continue;
            }
            let pos = r.entries.values().all(|v| v.re > T::zero());
            let neg = r.entries.values().all(|v| v.re < T::zero());
            if pos || neg {
                for &(j, p, _) in r.entries.keys() {
                    if !removed[j][p] {
                        removed[j][p] = true;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
        for r in rows.iter_mut() {
            r.entries.retain(|&(j, p, q), _| !removed[j][p] && !removed[j][q]);
        }
    }
    let mut kept_rows = Vec::new();
    for r in rows {
        if r.entries.is_empty() {
            if r.rhs.abs() > tol {
                return PresolveResult::Infeasible(InfeasibilityReason::Structural, r.rhs.abs().to_f64_lossy());
            }
        } else {
            kept_rows.push(r);
        }
    }
    let keep: Vec<Vec<usize>> = removed.iter().map(|rm| (0..rm.len()).filter(|&i| !rm[i]).collect()).collect();
    let index: Vec<HashMap<usize, usize>> =
        keep.iter().map(|k| k.iter().enumerate().map(|(new, &old)| (old, new)).collect()).collect();
    for r in kept_rows.iter_mut() {
        let entries = std::mem::take(&mut r.entries);
        r.entries = entries.into_iter().map(|((j, p, q), v)| ((j, index[j][&p], index[j][&q]), v)).collect();
    }
    PresolveResult::Ready(Presolved { keep, rows: kept_rows })
}

fn row_gram<T: Real>(rows: &[HermRow<T>]) -> DMatrix<T> {
    let m = rows.len();
    // ordered so the accumulation (and hence the solve) is reproducible
    let mut by_key: BTreeMap<(usize, usize, usize), Vec<(usize, Complex<T>)>> = BTreeMap::new();
    for (k, r) in rows.iter().enumerate() {
        for (&key, &v) in &r.entries {
            by_key.entry(key).or_default().push((k, v));
        }
    }
    let mut g = DMatrix::zeros(m, m);
    for list in by_key.values() {
        for &(k, a) in list {
            for &(l, b) in list {
                if l >= k {
                    g[(k, l)] += (a * b.conj()).re;
                }
            }
        }
    }
    for k in 0..m {
        for l in 0..k {
            g[(k, l)] = g[(l, k)];
        }
    }
    g
}

/// Greedy pivoted Cholesky; returns the selected (independent) rows.
fn independent_rows<T: Real>(g: &DMatrix<T>, rel_tol: T) -> Vec<usize> {
    let m = g.nrows();
    let mut diag: Vec<T> = (0..m).map(|i| g[(i, i)]).collect();
    let dmax = diag.iter().fold(T::zero(), |a, &b| a.max(b));
    let mut l: Vec<Vec<T>> = Vec::new();
    let mut selected = Vec::new();
    let mut used = vec![false; m];
    loop {
        let mut piv = None;
        let mut best = rel_tol * dmax;
        for i in 0..m {
            if !used[i] && diag[i] > best {
                best = diag[i];
                piv = Some(i);
            }
        }
        let Some(p) = piv else { break };
        used[p] = true;
        let sp = diag[p].sqrt();
        let mut col = vec![T::zero(); m];
        for i in 0..m {
            if used[i] && i != p {
                continue;
            }
            let mut s = g[(i, p)];
            for lc in &l {
                s -= lc[i] * lc[p];
            }
            col[i] = s / sp;
        }
        for i in 0..m {
            if !used[i] {
                diag[i] -= col[i] * col[i];
            }
        }
        l.push(col);
        selected.push(p);
    }
    selected.sort_unstable();
    selected
}

fn cholesky_solve_regularized<T: Real>(m: &DMatrix<T>) -> Option<Cholesky<T, nalgebra::Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c);
    }
    let scale = (0..m.nrows()).map(|i| m[(i, i)].abs()).fold(T::zero(), |a, b| a.max(b)).max(T::eps());
    let mut reg = scale * T::lit(1e-14);
    for _ in 0..8 {
        let mut mm = m.clone();
        for i in 0..mm.nrows() {
            mm[(i, i)] += reg;
        }
        if let Some(c) = Cholesky::new(mm) {
            return Some(c);
        }
        reg *= T::lit(100.0);
    }
    None
}

/// Largest `α ≤ cap` keeping `X + α dX ⪰ 0` (given `X ≻ 0`).
fn max_step<T: Real>(x: &CMat<T>, dx: &CMat<T>) -> T {
    let big = T::lit(1e30);
    if x.nrows() == 0 {
        return big;
    }
    let Some(ch) = Cholesky::new(x.clone()) else { return T::zero() };
    let l = ch.l();
    let Some(w) = l.solve_lower_triangular(dx) else { return T::zero() };
    let Some(m) = l.solve_lower_triangular(&w.adjoint()) else { return T::zero() };
    let ev = hermitian_eigenvalues(&m);
    match ev.first() {
        Some(&lmin) if lmin < T::zero() => -T::one() / lmin,
        _ => big,
    }
}

/// `tr(A X)` for a row on reduced blocks.
fn row_apply<T: Real>(row: &HermRow<T>, blocks: &[CMat<T>]) -> T {
    let mut acc = T::zero();
    for (&(j, p, q), v) in &row.entries {
        acc += (v * blocks[j][(q, p)]).re;
    }
    acc
}

fn inner<T: Real>(a: &[CMat<T>], b: &[CMat<T>]) -> T {
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        for (p, q) in x.iter().zip(y.iter()) {
            acc += (p * q.conj()).re;
        }
    }
    acc
}

struct IpmResult<T: Real> {
    y_blocks: Vec<CMat<T>>,
    t: T,
    iterations: usize,
    /// Primal objective is `-t`; this is the dual objective `b^T y`.
    dual_obj: T,
    primal_inf: T,
    dual_inf: T,
    converged: bool,
}

/// Interior point method for `min -t  s.t.  tr(A_k Y) + a_k t = b_k, Y ⪰ 0`.
fn ipm<T: Real>(sizes: &[usize], rows: &[HermRow<T>], a: &DVector<T>, b: &DVector<T>, eps: T, max_iter: usize) -> IpmResult<T> {
    let m = rows.len();
    let nb = sizes.len();
    let ntot: usize = sizes.iter().sum();
    let cz = creal(T::zero());

    // per-block row lists: (row index, entries)
    let mut block_rows: Vec<Vec<(usize, Vec<(usize, usize, Complex<T>)>)>> = vec![Vec::new(); nb];
    for (k, r) in rows.iter().enumerate() {
        let mut per: BTreeMap<usize, Vec<(usize, usize, Complex<T>)>> = BTreeMap::new();
        for (&(j, p, q), &v) in &r.entries {
            per.entry(j).or_default().push((p, q, v));
        }
        for (j, e) in per {
            block_rows[j].push((k, e));
        }
    }

    let apply_a = |ys: &[CMat<T>]| -> DVector<T> {
        let mut out = DVector::zeros(m);
        for j in 0..nb {
            for (k, e) in &block_rows[j] {
                let mut acc = T::zero();
                for &(p, q, v) in e {
                    acc += (v * ys[j][(q, p)]).re;
                }
                out[*k] += acc;
            }
        }
        out
    };
    let apply_at = |y: &DVector<T>| -> Vec<CMat<T>> {
        let mut out: Vec<CMat<T>> = sizes.iter().map(|&n| CMat::zeros(n, n)).collect();
        for j in 0..nb {
            for (k, e) in &block_rows[j] {
                let s = creal(y[*k]);
                for &(p, q, v) in e {
                    out[j][(p, q)] += v * s;
                }
            }
        }
        out
    };

    let bnorm = b.amax();
    let x0 = T::one().max(bnorm).sqrt() * T::lit(10.0);
    let mut ys: Vec<CMat<T>> = sizes.iter().map(|&n| CMat::identity(n, n) * creal(x0)).collect();
    let mut zs: Vec<CMat<T>> = sizes.iter().map(|&n| CMat::identity(n, n) * creal(x0)).collect();
    let mut y = DVector::<T>::zeros(m);
    let mut t = T::zero();
    let c_t = -T::one();

    let mut best_merit = T::max_value().unwrap_or_else(|| T::lit(1e300));
    // late iterations can lose primal accuracy; the best iterate seen is returned
    let mut snap_merit = best_merit;
    let mut snapshot = (ys.clone(), t, y.clone(), T::one(), T::one());
    let mut stall = 0usize;
    let mut iterations = 0usize;
    let mut converged = false;
    let (mut pinf, mut dinf) = (T::zero(), T::zero());

    while iterations < max_iter {
        let ay = apply_a(&ys);
        let rp = b - &ay - a * t;
        let aty = apply_at(&y);
        let rd: Vec<CMat<T>> = aty.iter().zip(&zs).map(|(q, z)| -(q + z)).collect();
        let rdt = c_t - a.dot(&y);
        let mu = inner(&ys, &zs) / T::lit(ntot.max(1) as f64);
        let pobj = -t;
        let dobj = b.dot(&y);
        pinf = rp.norm() / (T::one() + bnorm);
        let rdn = rd.iter().map(|r| r.norm()).fold(T::zero(), |acc, v| acc + v * v).sqrt();
        dinf = (rdn + rdt.abs()) / T::one();
        let gap = (pobj - dobj).abs() / (T::one() + pobj.abs() + dobj.abs());
        let mu_rel = mu / (T::one() + pobj.abs() + dobj.abs());
        if pinf < eps && dinf < eps && gap < eps && mu_rel < eps {
            converged = true;
            break;
        }
        let merit = pinf.max(dinf).max(gap);
        if merit < snap_merit {
            snap_merit = merit;
            snapshot = (ys.clone(), t, y.clone(), pinf, dinf);
        }
        if merit < best_merit * T::lit(0.95) {
            best_merit = merit;
            stall = 0;
        } else {
            stall += 1;
            if stall > 12 {
                break;
            }
        }
        iterations += 1;

        // inverses
        let mut zinv: Vec<CMat<T>> = Vec::with_capacity(nb);
        let mut ok = true;
        for z in &zs {
            if z.nrows() == 0 {
                zinv.push(z.clone());
                continue;
            }
            match Cholesky::new(z.clone()) {
                Some(c) => zinv.push(hermitian_part(&c.inverse())),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            break;
        }

        // Schur complement M_kl = Re tr(A_k Y A_l Z^{-1})
        let mut schur = DMatrix::<T>::zeros(m, m);
        for j in 0..nb {
            let n = sizes[j];
            let yj = &ys[j];
            let zj = &zinv[j];
            for (ia, (k, ek)) in block_rows[j].iter().enumerate() {
                let mut g = CMat::<T>::zeros(n, n);
                for &(p, q, v) in ek {
                    // g += v · Y[:, p] Zinv[q, :]
                    for r in 0..n {
                        let yv = yj[(r, p)] * v;
                        if yv == cz {
                            continue;
                        }
                        for c in 0..n {
                            g[(r, c)] += yv * zj[(q, c)];
                        }
                    }
                }
                for (l, el) in block_rows[j].iter().skip(ia) {
                    let mut acc = T::zero();
                    for &(p, q, v) in el {
                        acc += (v * g[(q, p)]).re;
                    }
                    schur[(*k, *l)] += acc;
                    if k != l {
                        schur[(*l, *k)] += acc;
                    }
                }
            }
        }
        let Some(chol) = cholesky_solve_regularized(&schur) else { break };
        let minv_a = chol.solve(a);
        let a_minv_a = a.dot(&minv_a);

        let solve_dir = |k_blocks: &[CMat<T>]| -> (DVector<T>, T, Vec<CMat<T>>, Vec<CMat<T>>) {
            // r1 = rp - A(K - Y Rd Z^{-1})
            let tmp: Vec<CMat<T>> = (0..nb)
                .map(|j| &k_blocks[j] - &ys[j] * &rd[j] * &zinv[j])
                .collect();
            let r1 = &rp - apply_a(&tmp);
            let u = chol.solve(&r1);
            let dt = (a.dot(&u) - rdt) / a_minv_a;
            let dy = u - &minv_a * dt;
            let atdy = apply_at(&dy);
            let dz: Vec<CMat<T>> = (0..nb).map(|j| &rd[j] - &atdy[j]).collect();
            let dyb: Vec<CMat<T>> = (0..nb)
                .map(|j| hermitian_part(&(&k_blocks[j] - &ys[j] * &dz[j] * &zinv[j])))
                .collect();
            (dy, dt, dyb, dz)
        };
        let steps = |dyb: &[CMat<T>], dz: &[CMat<T>]| -> (T, T) {
            let mut ap = T::lit(1e30);
            let mut ad = T::lit(1e30);
            for j in 0..nb {
                ap = ap.min(max_step(&ys[j], &dyb[j]));
                ad = ad.min(max_step(&zs[j], &dz[j]));
            }
            (ap, ad)
        };

        // predictor
        let k_aff: Vec<CMat<T>> = ys.iter().map(|x| -x.clone()).collect();
        let (_, _, dy_aff, dz_aff) = solve_dir(&k_aff);
        let (ap, ad) = steps(&dy_aff, &dz_aff);
        let (ap, ad) = (ap.min(T::one()), ad.min(T::one()));
        let ys_a: Vec<CMat<T>> = (0..nb).map(|j| &ys[j] + &dy_aff[j] * creal(ap)).collect();
        let zs_a: Vec<CMat<T>> = (0..nb).map(|j| &zs[j] + &dz_aff[j] * creal(ad)).collect();
        let mu_aff = inner(&ys_a, &zs_a) / T::lit(ntot.max(1) as f64);
        let sigma = {
            let r = (mu_aff / mu).max(T::zero()).min(T::one());
            r * r * r
        };

        // corrector
        let k_cor: Vec<CMat<T>> = (0..nb)
            .map(|j| {
                &zinv[j] * creal(sigma * mu) - &ys[j] - &dy_aff[j] * &dz_aff[j] * &zinv[j]
            })
            .collect();
        let (dy, dt, dyb, dz) = solve_dir(&k_cor);
        let (ap, ad) = steps(&dyb, &dz);
        let gamma = T::lit(0.95);
        let ap = (gamma * ap).min(T::one());
        let ad = (gamma * ad).min(T::one());
        for j in 0..nb {
            ys[j] = hermitian_part(&(&ys[j] + &dyb[j] * creal(ap)));
            zs[j] = hermitian_part(&(&zs[j] + &dz[j] * creal(ad)));
        }
        t += dt * ap;
        y += dy * ad;
    }

    if converged {
        return IpmResult { y_blocks: ys, t, iterations, dual_obj: b.dot(&y), primal_inf: pinf, dual_inf: dinf, converged };
    }
    let (ys, t, y, pinf, dinf) = snapshot;
    IpmResult { y_blocks: ys, t, iterations, dual_obj: b.dot(&y), primal_inf: pinf, dual_inf: dinf, converged }
}

/// Maximizes the minimum-eigenvalue slack subject to the constraints.
pub fn solve_psd_feasibility<T: Real>(problem: &PsdFeasibilityProblem<T>, tol: T, max_iter: usize) -> Result<SolveOutcome<T>> {
    let sizes = problem.block_sizes();

    // real split
    let mut rows: Vec<HermRow<T>> = Vec::with_capacity(problem.constraints.len() * 2);
    let minus_i = Complex::new(T::zero(), -T::one());
    for c in &problem.constraints {
        rows.push(HermRow::from_real_part(&c.terms, creal(T::one()), c.rhs.re));
        rows.push(HermRow::from_real_part(&c.terms, minus_i, c.rhs.im));
    }

    let pre = match presolve(sizes, rows, tol) {
        PresolveResult::Ready(p) => p,
        PresolveResult::Infeasible(reason, v) => {
            return Ok(SolveOutcome::Infeasible(Infeasible { reason, slack_bound: -v, iterations: 0 }));
        }
    };
    let red_sizes: Vec<usize> = pre.keep.iter().map(|k| k.len()).collect();

    let assemble = |yb: &[CMat<T>]| -> Vec<CMat<T>> {
        sizes
            .iter()
            .enumerate()
            .map(|(j, &n)| {
                let mut full = CMat::zeros(n, n);
                for (a, &oa) in pre.keep[j].iter().enumerate() {
                    for (b, &ob) in pre.keep[j].iter().enumerate() {
                        full[(oa, ob)] = yb[j][(a, b)];
                    }
                }
                full
            })
            .collect()
    };
    let finish = |blocks: Vec<CMat<T>>, iterations: usize| -> PsdSolution<T> {
        let residual = problem.residual(&blocks);
        let slack = blocks
            .iter()
            .filter(|b| b.nrows() > 0)
            .map(|b| hermitian_eigenvalues(b)[0])
            .fold(T::max_value().unwrap_or_else(|| T::lit(1e300)), |a, b| a.min(b));
        let slack = if blocks.iter().all(|b| b.nrows() == 0) { T::zero() } else { slack };
        PsdSolution { blocks, slack, residual, iterations }
    };

    if pre.rows.is_empty() {
        // only trivially satisfied constraints remain; the zero matrix is feasible
        let blocks: Vec<CMat<T>> = sizes.iter().map(|&n| CMat::zeros(n, n)).collect();
        return Ok(SolveOutcome::Solved(finish(blocks, 0)));
    }

    // normalize rows
    let mut rows = pre.rows;
    for r in rows.iter_mut() {
        let n = r.norm();
        let s = creal(T::one() / n);
        for v in r.entries.values_mut() {
            *v *= s;
        }
        r.rhs /= n;
    }

    // independent subset and affine consistency
    let g = row_gram(&rows);
    let sel = independent_rows(&g, T::lit(1e-12));
    let m_all = rows.len();
    let bfull = DVector::from_iterator(m_all, rows.iter().map(|r| r.rhs));
    let gs = DMatrix::from_fn(sel.len(), sel.len(), |i, j| g[(sel[i], sel[j])]);
    let Some(gs_chol) = cholesky_solve_regularized(&gs) else {
        return Err(Error::Solver("constraint Gram matrix is not positive definite".into()));
    };
    {
        let bs = DVector::from_iterator(sel.len(), sel.iter().map(|&i| bfull[i]));
        let coef = gs_chol.solve(&bs);
        let mut worst = T::zero();
        for k in 0..m_all {
            let mut v = -bfull[k];
            for (i, &s) in sel.iter().enumerate() {
                v += g[(k, s)] * coef[i];
            }
            worst = worst.max(v.abs());
        }
        if worst > tol {
            return Ok(SolveOutcome::Infeasible(Infeasible {
                reason: InfeasibilityReason::AffineInconsistent(worst.to_f64_lossy()),
                slack_bound: f64::NEG_INFINITY,
                iterations: 0,
            }));
        }
    }
    let mut rows: Vec<HermRow<T>> = sel.iter().map(|&i| rows[i].clone()).collect();

    // slack cap row: t + s = cap, with s an extra 1x1 block
    let nb = red_sizes.len();
    let mut ipm_sizes = red_sizes.clone();
    ipm_sizes.push(1);
    let bmax = rows.iter().map(|r| r.rhs.abs()).fold(T::zero(), |a, b| a.max(b));
    let cap = T::lit(1e3) * (T::one() + bmax);
    let mut a_vec: Vec<T> = rows.iter().map(|r| r.trace()).collect();
    let mut cap_row = HermRow { entries: BTreeMap::new(), rhs: cap };
    cap_row.entries.insert((nb, 0, 0), creal(T::one()));
    rows.push(cap_row);
    a_vec.push(T::one());
    let a = DVector::from_vec(a_vec);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.rhs));

    let eps = (tol * T::lit(0.1)).max(T::eps() * T::lit(1e3));
    let res = ipm(&ipm_sizes, &rows, &a, &b, eps, max_iter);

    // X = Y + tI on the reduced blocks, then alternate least-norm affine
    // corrections with PSD clipping to remove the interior-point residue
    let t = res.t;
    let mut xb: Vec<CMat<T>> = res.y_blocks[..nb]
        .iter()
        .map(|y| y + CMat::identity(y.nrows(), y.nrows()) * creal(t))
        .collect();
    let sel_rows = &rows[..rows.len() - 1];
    // near-degenerate problems (optimal slack 0) leave t slightly negative;
    // a few dozen alternating rounds recover a feasible point there
    let rounds = if t >= -tol * T::lit(1e3) { 60 } else { 1 };
    let neg_cut = -tol * T::lit(1e-3);
    for round in 0..rounds {
        if t < -tol || round > 0 {
            let neg = xb.iter().any(|x| x.nrows() > 0 && hermitian_eigenvalues(x)[0] < neg_cut);
            if !neg {
                break;
            }
            for x in xb.iter_mut() {
                *x = clip_psd(x);
            }
        }
        let r = DVector::from_iterator(sel_rows.len(), sel_rows.iter().map(|row| row_apply(row, &xb) - row.rhs));
        let c = gs_chol.solve(&r);
        for (k, row) in sel_rows.iter().enumerate() {
            let ck = creal(c[k]);
            for (&(j, p, q), v) in &row.entries {
                xb[j][(p, q)] -= v * ck;
            }
        }
        for x in xb.iter_mut() {
            *x = hermitian_part(x);
        }
    }
    if t >= -tol * T::lit(1e3) {
        if let Some(fb) = face_refine(&xb, sel_rows, tol) {
            let cand = finish(assemble(&fb), res.iterations);
            let cur_res = problem.residual(&assemble(&xb));
            if cand.slack >= -tol && cand.residual <= cur_res.max(tol * T::lit(1e-2)) {
                xb = fb;
            }
        }
    }
    let blocks = assemble(&xb);
    let sol = finish(blocks, res.iterations);

    if sol.residual <= tol && sol.slack >= -tol {
        return Ok(SolveOutcome::Solved(sol));
    }
    // dual bound: t* <= -b^T y when the dual iterate is feasible
    let bound = -res.dual_obj;
    if res.dual_inf < eps.max(T::lit(1e-9)) && bound < -tol {
        return Ok(SolveOutcome::Infeasible(Infeasible {
            reason: InfeasibilityReason::DualBound,
            slack_bound: bound.to_f64_lossy(),
            iterations: res.iterations,
        }));
    }
    if res.primal_inf < tol && t < -tol {
        return Ok(SolveOutcome::Infeasible(Infeasible {
            reason: InfeasibilityReason::Stalled,
            slack_bound: t.to_f64_lossy(),
            iterations: res.iterations,
        }));
    }
    if !res.converged && res.iterations >= max_iter {
        return Ok(SolveOutcome::IterationBudgetExceeded {
            iterations: res.iterations,
            slack: t.to_f64_lossy(),
            residual: sol.residual.to_f64_lossy(),
        });
    }
    Ok(SolveOutcome::Infeasible(Infeasible {
        reason: InfeasibilityReason::Stalled,
        slack_bound: t.min(-sol.residual).to_f64_lossy(),
        iterations: res.iterations,
    }))
}

/// Restricts to the face spanned by the dominant eigenvectors and solves
/// the affine constraints exactly there. Degenerate problems (optimal slack
/// zero) leave the interior-point iterate with tiny spurious eigenvalues;
/// on the right face the least-norm correction is accurate to rounding.
fn face_refine<T: Real>(xb: &[CMat<T>], rows: &[HermRow<T>], tol: T) -> Option<Vec<CMat<T>>> {
    let eigs: Vec<(DVector<T>, CMat<T>)> = xb
        .iter()
        .map(|x| {
            if x.nrows() == 0 {
                (DVector::zeros(0), CMat::zeros(0, 0))
            } else {
                let e = hermitian_part(x).symmetric_eigen();
                (e.eigenvalues, e.eigenvectors)
            }
        })
        .collect();
    let lmax = eigs
        .iter()
        .flat_map(|e| e.0.iter().copied())
        .fold(T::zero(), |a, b| a.max(b));
    if lmax <= T::zero() {
        return None;
    }
    let mut best: Option<(T, Vec<CMat<T>>)> = None;
    for &tau in &[1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3] {
        let cut = lmax * T::lit(tau);
        let mut us = Vec::with_capacity(xb.len());
        let mut zs = Vec::with_capacity(xb.len());
        for (vals, vecs) in &eigs {
            let n = vals.len();
            let keep: Vec<usize> = (0..n).filter(|&k| vals[k] > cut).collect();
            let u = CMat::from_fn(n, keep.len(), |p, a| vecs[(p, keep[a])]);
            let z = CMat::from_fn(keep.len(), keep.len(), |a, b| if a == b { creal(vals[keep[a]]) } else { creal(T::zero()) });
            us.push(u);
            zs.push(z);
        }
        // reduced rows: U^* A U per block
        let red: Vec<HermRow<T>> = rows
            .iter()
            .map(|row| {
                let mut entries = BTreeMap::new();
                for (&(j, p, q), &v) in &row.entries {
                    let u = &us[j];
                    for a in 0..u.ncols() {
                        let ua = u[(p, a)].conj() * v;
                        for b in 0..u.ncols() {
                            *entries.entry((j, a, b)).or_insert_with(|| creal(T::zero())) += ua * u[(q, b)];
                        }
                    }
                }
                HermRow { entries, rhs: row.rhs }
            })
            .collect();
        let g = row_gram(&red);
        let sel = independent_rows(&g, T::lit(1e-13));
        if sel.is_empty() {
            continue;
        }
        let gs = DMatrix::from_fn(sel.len(), sel.len(), |i, j| g[(sel[i], sel[j])]);
        let Some(ch) = Cholesky::new(gs) else { continue };
        for _ in 0..3 {
            let r = DVector::from_iterator(sel.len(), sel.iter().map(|&k| row_apply(&red[k], &zs) - red[k].rhs));
            let c = ch.solve(&r);
            for (i, &k) in sel.iter().enumerate() {
                let ck = creal(c[i]);
                for (&(j, a, b), v) in &red[k].entries {
                    zs[j][(a, b)] -= v * ck;
                }
            }
            for z in zs.iter_mut() {
                *z = hermitian_part(z);
            }
        }
        let worst = red.iter().map(|r| (row_apply(r, &zs) - r.rhs).abs()).fold(T::zero(), |a, b| a.max(b));
        let zmin = zs
            .iter()
            .filter(|z| z.nrows() > 0)
            .map(|z| hermitian_eigenvalues(z)[0])
            .fold(T::max_value().unwrap_or_else(|| T::lit(1e300)), |a, b| a.min(b));
        if zmin < -tol * T::lit(1e-3) || worst > tol {
            continue;
        }
        let full: Vec<CMat<T>> = us.iter().zip(&zs).map(|(u, z)| hermitian_part(&(u * z * u.adjoint()))).collect();
        if best.as_ref().map_or(true, |(w, _)| worst < *w) {
            best = Some((worst, full));
        }
        if worst <= T::eps() * T::lit(1e4) {
            break;
        }
    }
    best.map(|(_, b)| b)
}

/// Projection onto the PSD cone by eigenvalue clipping.
pub fn clip_psd<T: Real>(x: &CMat<T>) -> CMat<T> {
    if x.nrows() == 0 {
        return x.clone();
    }
    let eig = hermitian_part(x).symmetric_eigen();
    let n = x.nrows();
    let mut out = CMat::zeros(n, n);
    for k in 0..n {
        let l = eig.eigenvalues[k];
        if l > T::zero() {
            let v = eig.eigenvectors.column(k);
            out += v * v.adjoint() * creal(l);
        }
    }
    hermitian_part(&out)
}
