//! Multivariate polynomials with complex matrix coefficients.
//!
//! [`MatPoly`] is a polynomial in `z = (z_1, ..., z_d)`. [`BiPoly`] is a
//! polynomial in two sets of variables `(w, z)` where `w` stands for the
//! conjugated copy of `z`; [`HermPoly`] is a square `BiPoly` whose
//! coefficient array is Hermitian, `P_{λμ} = P_{μλ}^*`.
//!
//! Monomials are ordered graded-lexicographically with `z_1 > z_2 > ...`,
//! so a basis of degree `≤ 2` in two variables reads
//! `1, z1, z2, z1^2, z1 z2, z2^2`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::scalar::{creal, fro, hermitian_part, hstack, kron, vstack, CMat, Real};

/// Exponent vector of a monomial.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    /// Exponent of `z_i` alone.
    pub fn unit(d: usize, i: usize) -> Self {
        let mut e = vec![0; d];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other` when every entry stays nonnegative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        let mut out = Vec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            out.push(a.checked_sub(*b)?);
        }
        Some(MultiIndex(out))
    }

    /// `z^self` at a point.
    pub fn eval<T: Real>(&self, z: &[Complex<T>]) -> Complex<T> {
        let mut acc = creal(T::one());
        for (zi, &e) in z.iter().zip(&self.0) {
            if e > 0 {
                acc *= zi.powu(e);
            }
        }
        acc
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All monomials in `d` variables of total degree `≤ max_degree`, in graded-lex order.
pub fn monomials_up_to(d: usize, max_degree: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for deg in 0..=max_degree {
        let mut cur = vec![0u32; d];
        exact_degree(d, deg, 0, &mut cur, &mut out);
    }
    out.sort();
    out
}

fn exact_degree(d: usize, remaining: usize, pos: usize, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if d == 0 {
        if remaining == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return;
    }
    if pos == d - 1 {
        cur[pos] = remaining as u32;
        out.push(MultiIndex(cur.clone()));
        cur[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        cur[pos] = e as u32;
        exact_degree(d, remaining - e, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

fn drop_threshold<T: Real>(max_norm: T) -> T {
    let rel = T::lit(1e-14).max(T::eps() * T::lit(4.0));
    rel * max_norm
}

fn normalize_map<K: Ord + Clone, T: Real>(coeffs: &mut BTreeMap<K, CMat<T>>) {
    let max = coeffs.values().map(fro).fold(T::zero(), |a, b| a.max(b));
    let thr = drop_threshold(max);
    coeffs.retain(|_, m| {
        let n = fro(m);
        n > thr && n > T::zero()
    });
}

/// Polynomial in `z` with `rows × cols` complex matrix coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MatPoly<T: Real> {
    d: usize,
    rows: usize,
    cols: usize,
    coeffs: BTreeMap<MultiIndex, CMat<T>>,
}

impl<T: Real> MatPoly<T> {
    pub fn zero(d: usize, rows: usize, cols: usize) -> Self {
        MatPoly { d, rows, cols, coeffs: BTreeMap::new() }
    }

    pub fn constant(d: usize, c: CMat<T>) -> Self {
        Self::monomial(d, MultiIndex::zero(d), c)
    }

    pub fn identity(d: usize, n: usize) -> Self {
        Self::constant(d, CMat::identity(n, n))
    }

    pub fn monomial(d: usize, exp: MultiIndex, c: CMat<T>) -> Self {
        let (rows, cols) = c.shape();
        let mut coeffs = BTreeMap::new();
        coeffs.insert(exp, c);
        let mut p = MatPoly { d, rows, cols, coeffs };
        p.normalize();
        p
    }

    /// Scalar polynomial `z_i`.
    pub fn variable(d: usize, i: usize) -> Self {
        Self::monomial(d, MultiIndex::unit(d, i), CMat::identity(1, 1))
    }

    /// Scalar polynomial from `(exponents, coefficient)` pairs; repeated exponents add up.
    pub fn scalar(d: usize, terms: &[(Vec<u32>, Complex<T>)]) -> Result<Self> {
        let mats = terms
            .iter()
            .map(|(e, c)| (MultiIndex::new(e.clone()), CMat::from_element(1, 1, *c)));
        Self::from_terms(d, 1, 1, mats)
    }

    /// Builds a polynomial from terms, summing duplicates and validating shapes.
    pub fn from_terms<I>(d: usize, rows: usize, cols: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, CMat<T>)>,
    {
        let mut coeffs: BTreeMap<MultiIndex, CMat<T>> = BTreeMap::new();
        for (e, m) in terms {
            if e.nvars() != d {
                return Err(Error::DimensionMismatch { expected: d, got: e.nvars() });
            }
            if m.shape() != (rows, cols) {
                return Err(Error::ShapeMismatch(format!(
                    "coefficient at {:?} is {}x{}, expected {rows}x{cols}",
                    e.exponents(),
                    m.nrows(),
                    m.ncols()
                )));
            }
            match coeffs.get_mut(&e) {
                Some(acc) => *acc += m,
                None => {
                    coeffs.insert(e, m);
                }
            }
        }
        let mut p = MatPoly { d, rows, cols, coeffs };
        p.normalize();
        Ok(p)
    }

    /// Like [`MatPoly::from_terms`] but keeps every coefficient that is not
    /// exactly zero, so values survive a serialization round trip bit for bit.
    pub fn from_terms_exact<I>(d: usize, rows: usize, cols: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, CMat<T>)>,
    {
        let mut p = Self::zero(d, rows, cols);
        for (e, m) in terms {
            if e.nvars() != d {
                return Err(Error::DimensionMismatch { expected: d, got: e.nvars() });
            }
            if m.shape() != (rows, cols) {
                return Err(Error::ShapeMismatch(format!(
                    "coefficient at {:?} is {}x{}, expected {rows}x{cols}",
                    e.exponents(),
                    m.nrows(),
                    m.ncols()
                )));
            }
            match p.coeffs.get_mut(&e) {
                Some(acc) => *acc += m,
                None => {
                    p.coeffs.insert(e, m);
                }
            }
        }
        p.coeffs.retain(|_, m| m.iter().any(|z| *z != Complex::new(T::zero(), T::zero())));
        Ok(p)
    }

    fn normalize(&mut self) {
        normalize_map(&mut self.coeffs);
    }

    pub fn nvars(&self) -> usize {
        self.d
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, e: &MultiIndex) -> Option<&CMat<T>> {
        self.coeffs.get(e)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &CMat<T>)> {
        self.coeffs.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &MultiIndex> {
        self.coeffs.keys()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    /// Largest coefficient Frobenius norm.
    pub fn max_coeff_norm(&self) -> T {
        self.coeffs.values().map(fro).fold(T::zero(), |a, b| a.max(b))
    }

    /// Scalar value of a 1×1 polynomial at a point.
    pub fn eval_scalar(&self, z: &[Complex<T>]) -> Result<Complex<T>> {
        if self.shape() != (1, 1) {
            return Err(Error::ShapeMismatch(format!("expected scalar polynomial, got {}x{}", self.rows, self.cols)));
        }
        Ok(self.eval(z)?[(0, 0)])
    }

    /// `Σ_μ p_μ z^μ`.
    pub fn eval(&self, z: &[Complex<T>]) -> Result<CMat<T>> {
        if z.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: z.len() });
        }
        let mut out = CMat::zeros(self.rows, self.cols);
        for (e, c) in &self.coeffs {
            out += c * e.eval(z);
        }
        Ok(out)
    }

    /// Substitutes commuting `N×N` matrices: `Σ_μ p_μ ⊗ T^μ`.
    pub fn eval_tuple(&self, t: &CommutingTuple<T>) -> Result<CMat<T>> {
        if t.nvars() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: t.nvars() });
        }
        let n = t.size();
        let mut out = CMat::zeros(self.rows * n, self.cols * n);
        for (e, c) in &self.coeffs {
            out += kron(c, &t.power(e));
        }
        Ok(out)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: other.d });
        }
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut coeffs = self.coeffs.clone();
        for (e, m) in &other.coeffs {
            match coeffs.get_mut(e) {
                Some(acc) => *acc += m,
                None => {
                    coeffs.insert(e.clone(), m.clone());
                }
            }
        }
        let mut p = MatPoly { d: self.d, rows: self.rows, cols: self.cols, coeffs };
        p.normalize();
        Ok(p)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(creal(-T::one())))
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let coeffs = self.coeffs.iter().map(|(e, m)| (e.clone(), m * s)).collect();
        let mut p = MatPoly { d: self.d, rows: self.rows, cols: self.cols, coeffs };
        p.normalize();
        p
    }

    /// Matrix product `self(z) · other(z)`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: other.d });
        }
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let terms = self.coeffs.iter().flat_map(|(ea, a)| {
            other.coeffs.iter().map(move |(eb, b)| (ea.add(eb), a * b))
        });
        Self::from_terms(self.d, self.rows, other.cols, terms)
    }

    /// `self ⊗ I_n` coefficientwise.
    pub fn kron_identity(&self, n: usize) -> Self {
        let id = CMat::identity(n, n);
        let coeffs = self.coeffs.iter().map(|(e, m)| (e.clone(), kron(m, &id))).collect();
        MatPoly { d: self.d, rows: self.rows * n, cols: self.cols * n, coeffs }
    }

    /// Vertical stack of polynomials sharing `d` and the column count.
    pub fn vstack(d: usize, cols: usize, parts: &[&MatPoly<T>]) -> Result<Self> {
        let mut rows = 0;
        for p in parts {
            if p.d != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.d });
            }
            if p.cols != cols {
                return Err(Error::ShapeMismatch(format!("vstack: {} columns, expected {cols}", p.cols)));
            }
            rows += p.rows;
        }
        let support: BTreeSet<MultiIndex> = parts.iter().flat_map(|p| p.coeffs.keys().cloned()).collect();
        let terms = support.into_iter().map(|e| {
            let blocks: Vec<CMat<T>> = parts
                .iter()
                .map(|p| p.coeffs.get(&e).cloned().unwrap_or_else(|| CMat::zeros(p.rows, cols)))
                .collect();
            (e, vstack(&blocks, cols))
        });
        Self::from_terms(d, rows, cols, terms)
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(d: usize, parts: &[&MatPoly<T>]) -> Result<Self> {
        let rows: usize = parts.iter().map(|p| p.rows).sum();
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let support: BTreeSet<MultiIndex> = parts.iter().flat_map(|p| p.coeffs.keys().cloned()).collect();
        for p in parts {
            if p.d != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.d });
            }
        }
        let terms = support.into_iter().map(|e| {
            let blocks: Vec<CMat<T>> = parts
                .iter()
                .map(|p| p.coeffs.get(&e).cloned().unwrap_or_else(|| CMat::zeros(p.rows, p.cols)))
                .collect();
            (e, crate::scalar::block_diag(&blocks))
        });
        Self::from_terms(d, rows, cols, terms)
    }

    /// Vertical stack of the coefficients over `basis`: `(|basis|·rows) × cols`.
    pub fn coeff_matrix(&self, basis: &[MultiIndex]) -> Result<CMat<T>> {
        self.check_basis(basis)?;
        let blocks: Vec<CMat<T>> = basis
            .iter()
            .map(|e| self.coeffs.get(e).cloned().unwrap_or_else(|| CMat::zeros(self.rows, self.cols)))
            .collect();
        Ok(vstack(&blocks, self.cols))
    }

    /// Horizontal concatenation `[p_μ]_{μ ∈ basis}`: `rows × (|basis|·cols)`.
    ///
    /// Its column space is the span of `p(z)y` over all `z` and `y`.
    pub fn coeff_span_matrix(&self, basis: &[MultiIndex]) -> Result<CMat<T>> {
        self.check_basis(basis)?;
        let blocks: Vec<CMat<T>> = basis
            .iter()
            .map(|e| self.coeffs.get(e).cloned().unwrap_or_else(|| CMat::zeros(self.rows, self.cols)))
            .collect();
        Ok(hstack(&blocks, self.rows))
    }

    fn check_basis(&self, basis: &[MultiIndex]) -> Result<()> {
        for e in self.coeffs.keys() {
            if !basis.contains(e) {
                return Err(Error::BasisMissesSupport(e.exponents().to_vec()));
            }
        }
        for e in basis {
            if e.nvars() != self.d {
                return Err(Error::DimensionMismatch { expected: self.d, got: e.nvars() });
            }
        }
        Ok(())
    }

    /// Largest coefficient distance between two polynomials of the same shape.
    pub fn max_coeff_diff(&self, other: &Self) -> Result<T> {
        Ok(self.sub(other)?.max_coeff_norm())
    }
}

/// Polynomial in `(w, z)` with `rows × cols` matrix coefficients indexed by `(λ, μ)`
/// for the monomial `w^λ z^μ`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiPoly<T: Real> {
    d: usize,
    rows: usize,
    cols: usize,
    coeffs: BTreeMap<(MultiIndex, MultiIndex), CMat<T>>,
}

impl<T: Real> BiPoly<T> {
    pub fn zero(d: usize, rows: usize, cols: usize) -> Self {
        BiPoly { d, rows, cols, coeffs: BTreeMap::new() }
    }

    pub fn from_terms<I>(d: usize, rows: usize, cols: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = ((MultiIndex, MultiIndex), CMat<T>)>,
    {
        let mut coeffs: BTreeMap<(MultiIndex, MultiIndex), CMat<T>> = BTreeMap::new();
        for (k, m) in terms {
            if k.0.nvars() != d || k.1.nvars() != d {
                return Err(Error::DimensionMismatch { expected: d, got: k.0.nvars().max(k.1.nvars()) });
            }
            if m.shape() != (rows, cols) {
                return Err(Error::ShapeMismatch(format!(
                    "coefficient is {}x{}, expected {rows}x{cols}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            match coeffs.get_mut(&k) {
                Some(acc) => *acc += m,
                None => {
                    coeffs.insert(k, m);
                }
            }
        }
        normalize_map(&mut coeffs);
        Ok(BiPoly { d, rows, cols, coeffs })
    }

    pub fn nvars(&self) -> usize {
        self.d
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, w: &MultiIndex, z: &MultiIndex) -> Option<&CMat<T>> {
        self.coeffs.get(&(w.clone(), z.clone()))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(MultiIndex, MultiIndex), &CMat<T>)> {
        self.coeffs.iter()
    }

    /// Largest total degree in `w` and in `z` separately.
    pub fn degrees(&self) -> (usize, usize) {
        self.coeffs.keys().fold((0, 0), |(a, b), (l, m)| (a.max(l.degree()), b.max(m.degree())))
    }

    pub fn max_coeff_norm(&self) -> T {
        self.coeffs.values().map(fro).fold(T::zero(), |a, b| a.max(b))
    }

    /// `f^*(w) g(z)`, i.e. coefficients `(λ, μ) ↦ f_λ^* g_μ`.
    pub fn outer(f: &MatPoly<T>, g: &MatPoly<T>) -> Result<Self> {
        if f.d != g.d {
            return Err(Error::DimensionMismatch { expected: f.d, got: g.d });
        }
        if f.rows != g.rows {
            return Err(Error::ShapeMismatch(format!("outer: {} rows vs {} rows", f.rows, g.rows)));
        }
        let terms = f.coeffs.iter().flat_map(|(l, a)| {
            g.coeffs.iter().map(move |(m, b)| ((l.clone(), m.clone()), a.adjoint() * b))
        });
        Self::from_terms(f.d, f.cols, g.cols, terms)
    }

    /// `f^*(w) · self(w, z) · g(z)`.
    pub fn sandwich(&self, f: &MatPoly<T>, g: &MatPoly<T>) -> Result<Self> {
        if f.d != self.d || g.d != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: f.d.max(g.d) });
        }
        if f.rows != self.rows || g.rows != self.cols {
            return Err(Error::ShapeMismatch(format!(
                "sandwich: f is {}x{}, middle is {}x{}, g is {}x{}",
                f.rows, f.cols, self.rows, self.cols, g.rows, g.cols
            )));
        }
        let mut terms = Vec::new();
        for ((l, m), p) in &self.coeffs {
            for (a, fa) in &f.coeffs {
                let left = fa.adjoint() * p;
                for (b, gb) in &g.coeffs {
                    terms.push(((a.add(l), m.add(b)), &left * gb));
                }
            }
        }
        Self::from_terms(self.d, f.cols, g.cols, terms)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: other.d });
        }
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let terms = self
            .coeffs
            .iter()
            .chain(other.coeffs.iter())
            .map(|(k, m)| (k.clone(), m.clone()));
        Self::from_terms(self.d, self.rows, self.cols, terms)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-T::one()))
    }

    pub fn scale(&self, r: T) -> Self {
        let coeffs = self.coeffs.iter().map(|(k, m)| (k.clone(), m * creal(r))).collect();
        let mut out = BiPoly { d: self.d, rows: self.rows, cols: self.cols, coeffs };
        normalize_map(&mut out.coeffs);
        out
    }

    /// `self ⊗ I_n` coefficientwise.
    pub fn kron_identity(&self, n: usize) -> Self {
        let id = CMat::identity(n, n);
        let coeffs = self.coeffs.iter().map(|(k, m)| (k.clone(), kron(m, &id))).collect();
        BiPoly { d: self.d, rows: self.rows * n, cols: self.cols * n, coeffs }
    }

    /// Value at a pair of points `(w, z)`.
    pub fn eval(&self, w: &[Complex<T>], z: &[Complex<T>]) -> Result<CMat<T>> {
        for p in [w, z] {
            if p.len() != self.d {
                return Err(Error::DimensionMismatch { expected: self.d, got: p.len() });
            }
        }
        let mut out = CMat::zeros(self.rows, self.cols);
        for ((l, m), c) in &self.coeffs {
            out += c * (l.eval(w) * m.eval(z));
        }
        Ok(out)
    }

    /// `Σ P_{λμ} ⊗ T^{*λ} T^μ`.
    pub fn hereditary_eval(&self, t: &CommutingTuple<T>) -> Result<CMat<T>> {
        if t.nvars() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: t.nvars() });
        }
        let n = t.size();
        let mut cache: HashMap<MultiIndex, CMat<T>> = HashMap::new();
        let mut out = CMat::zeros(self.rows * n, self.cols * n);
        for ((l, m), c) in &self.coeffs {
            let tl = cache.entry(l.clone()).or_insert_with(|| t.power(l)).adjoint();
            let tm = cache.entry(m.clone()).or_insert_with(|| t.power(m)).clone();
            out += kron(c, &(tl * tm));
        }
        Ok(out)
    }

    /// Largest distance `|P_{λμ} - P_{μλ}^*|_F` over the support.
    pub fn hermitian_defect(&self) -> T {
        if self.rows != self.cols {
            return T::max_value().unwrap_or_else(T::one);
        }
        let zero = CMat::zeros(self.rows, self.cols);
        let mut worst = T::zero();
        for ((l, m), c) in &self.coeffs {
            let mirror = self.coeffs.get(&(m.clone(), l.clone())).unwrap_or(&zero);
            worst = worst.max(fro(&(c - mirror.adjoint())));
        }
        worst
    }
}

/// Square [`BiPoly`] with Hermitian coefficient array.
#[derive(Clone, Debug, PartialEq)]
pub struct HermPoly<T: Real>(BiPoly<T>);

impl<T: Real> HermPoly<T> {
    pub fn zero(d: usize, size: usize) -> Self {
        HermPoly(BiPoly::zero(d, size, size))
    }

    /// Constant Hermitian matrix `A`.
    pub fn constant(d: usize, a: CMat<T>) -> Result<Self> {
        let b = BiPoly::from_terms(d, a.nrows(), a.ncols(), [((MultiIndex::zero(d), MultiIndex::zero(d)), a)])?;
        Self::from_bipoly(b, T::lit(1e-12))
    }

    pub fn identity(d: usize, size: usize) -> Self {
        HermPoly(
            BiPoly::from_terms(d, size, size, [((MultiIndex::zero(d), MultiIndex::zero(d)), CMat::identity(size, size))])
                .expect("identity shape"),
        )
    }

    /// `f^*(w) f(z)`. The result is symmetric by construction: only the
    /// coefficients with `λ ≤ μ` are computed, the others are their adjoints.
    pub fn gram(f: &MatPoly<T>) -> Self {
        let mut coeffs = BTreeMap::new();
        for (l, a) in &f.coeffs {
            for (m, b) in &f.coeffs {
                if l <= m {
                    let c = a.adjoint() * b;
                    if l == m {
                        coeffs.insert((l.clone(), m.clone()), hermitian_part(&c));
                    } else {
                        coeffs.insert((m.clone(), l.clone()), c.adjoint());
                        coeffs.insert((l.clone(), m.clone()), c);
                    }
                }
            }
        }
        let mut b = BiPoly { d: f.d, rows: f.cols, cols: f.cols, coeffs };
        normalize_map(&mut b.coeffs);
        HermPoly(b)
    }

    /// Accepts a square `BiPoly` whose coefficient array is Hermitian within `tol`
    /// (relative to its largest coefficient) and makes the symmetry exact.
    pub fn from_bipoly(b: BiPoly<T>, tol: T) -> Result<Self> {
        if b.rows != b.cols {
            return Err(Error::ShapeMismatch(format!("hermitian polynomial must be square, got {}x{}", b.rows, b.cols)));
        }
        let dev = b.hermitian_defect();
        if dev > tol * (T::one() + b.max_coeff_norm()) {
            return Err(Error::NotHermitian(dev.to_f64_lossy()));
        }
        Ok(Self::symmetrize(b))
    }

    /// Hermitian polynomial from `((w-exponent, z-exponent), matrix)` terms
    /// without dropping small coefficients. The coefficient array must be
    /// Hermitian to within `tol` relative to its largest coefficient.
    pub fn from_terms_exact<I>(d: usize, size: usize, terms: I, tol: T) -> Result<Self>
    where
        I: IntoIterator<Item = ((MultiIndex, MultiIndex), CMat<T>)>,
    {
        let mut coeffs: BTreeMap<(MultiIndex, MultiIndex), CMat<T>> = BTreeMap::new();
        for (k, m) in terms {
            if k.0.nvars() != d || k.1.nvars() != d {
                return Err(Error::DimensionMismatch { expected: d, got: k.0.nvars().max(k.1.nvars()) });
            }
            if m.shape() != (size, size) {
                return Err(Error::ShapeMismatch(format!("coefficient is {}x{}, expected {size}x{size}", m.nrows(), m.ncols())));
            }
            match coeffs.get_mut(&k) {
                Some(acc) => *acc += m,
                None => {
                    coeffs.insert(k, m);
                }
            }
        }
        coeffs.retain(|_, m| m.iter().any(|z| *z != Complex::new(T::zero(), T::zero())));
        let b = BiPoly { d, rows: size, cols: size, coeffs };
        let dev = b.hermitian_defect();
        if dev > tol * (T::one() + b.max_coeff_norm()) {
            return Err(Error::NotHermitian(dev.to_f64_lossy()));
        }
        let mut out = Self::symmetrize_keep(b);
        out.0.coeffs.retain(|_, m| m.iter().any(|z| *z != Complex::new(T::zero(), T::zero())));
        Ok(out)
    }

    fn symmetrize(b: BiPoly<T>) -> Self {
        let mut out = Self::symmetrize_keep(b);
        normalize_map(&mut out.0.coeffs);
        out
    }

    fn symmetrize_keep(b: BiPoly<T>) -> Self {
        let half = creal(T::lit(0.5));
        let zero = CMat::zeros(b.rows, b.cols);
        let mut coeffs = BTreeMap::new();
        for ((l, m), c) in &b.coeffs {
            if l < m || !b.coeffs.contains_key(&(m.clone(), l.clone())) || l == m {
                let mirror = b.coeffs.get(&(m.clone(), l.clone())).unwrap_or(&zero);
                if l == m {
                    coeffs.insert((l.clone(), m.clone()), hermitian_part(c));
                } else {
                    let s = (c + mirror.adjoint()) * half;
                    coeffs.insert((m.clone(), l.clone()), s.adjoint());
                    coeffs.insert((l.clone(), m.clone()), s);
                }
            }
        }
        HermPoly(BiPoly { d: b.d, rows: b.rows, cols: b.cols, coeffs })
    }

    pub fn as_bipoly(&self) -> &BiPoly<T> {
        &self.0
    }

    pub fn into_bipoly(self) -> BiPoly<T> {
        self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.d
    }

    pub fn size(&self) -> usize {
        self.0.rows
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn coeff(&self, w: &MultiIndex, z: &MultiIndex) -> Option<&CMat<T>> {
        self.0.coeff(w, z)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(MultiIndex, MultiIndex), &CMat<T>)> {
        self.0.terms()
    }

    /// Largest of the `w`- and `z`-degrees (equal by symmetry).
    pub fn degree(&self) -> usize {
        let (a, b) = self.0.degrees();
        a.max(b)
    }

    pub fn max_coeff_norm(&self) -> T {
        self.0.max_coeff_norm()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self::symmetrize(self.0.add(&other.0)?))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(Self::symmetrize(self.0.sub(&other.0)?))
    }

    pub fn scale(&self, r: T) -> Self {
        HermPoly(self.0.scale(r))
    }

    /// `F^*(w) P(w, z) F(z)`.
    pub fn congruence(&self, f: &MatPoly<T>) -> Result<Self> {
        Ok(Self::symmetrize(self.0.sandwich(f, f)?))
    }

    pub fn kron_identity(&self, n: usize) -> Self {
        HermPoly(self.0.kron_identity(n))
    }

    /// `P ⊕ P'`.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.nvars() != other.nvars() {
            return Err(Error::DimensionMismatch { expected: self.nvars(), got: other.nvars() });
        }
        let (a, b) = (self.size(), other.size());
        let keys: BTreeSet<(MultiIndex, MultiIndex)> =
            self.0.coeffs.keys().chain(other.0.coeffs.keys()).cloned().collect();
        let terms = keys.into_iter().map(|k| {
            let x = self.0.coeffs.get(&k).cloned().unwrap_or_else(|| CMat::zeros(a, a));
            let y = other.0.coeffs.get(&k).cloned().unwrap_or_else(|| CMat::zeros(b, b));
            (k, crate::scalar::block_diag(&[x, y]))
        });
        Ok(HermPoly(BiPoly::from_terms(self.nvars(), a + b, a + b, terms)?))
    }

    pub fn eval(&self, w: &[Complex<T>], z: &[Complex<T>]) -> Result<CMat<T>> {
        self.0.eval(w, z)
    }

    /// `P(z̄, z)`, a Hermitian matrix.
    pub fn eval_diagonal(&self, z: &[Complex<T>]) -> Result<CMat<T>> {
        let w: Vec<Complex<T>> = z.iter().map(|c| c.conj()).collect();
        Ok(hermitian_part(&self.0.eval(&w, z)?))
    }

    pub fn hereditary_eval(&self, t: &CommutingTuple<T>) -> Result<CMat<T>> {
        self.0.hereditary_eval(t)
    }

    pub fn max_coeff_diff(&self, other: &Self) -> Result<T> {
        Ok(self.0.sub(&other.0)?.max_coeff_norm())
    }
}

/// `f^*(w) g(z)`.
pub fn bivar_outer<T: Real>(f: &MatPoly<T>, g: &MatPoly<T>) -> Result<BiPoly<T>> {
    BiPoly::outer(f, g)
}

pub fn herm_sub<T: Real>(p: &HermPoly<T>, q: &HermPoly<T>) -> Result<HermPoly<T>> {
    p.sub(q)
}

pub fn herm_scale<T: Real>(p: &HermPoly<T>, r: T) -> HermPoly<T> {
    p.scale(r)
}

pub fn hereditary_eval<T: Real>(p: &HermPoly<T>, t: &CommutingTuple<T>) -> Result<CMat<T>> {
    p.hereditary_eval(t)
}

/// A tuple of pairwise commuting square matrices.
#[derive(Clone, Debug)]
pub struct CommutingTuple<T: Real> {
    mats: Vec<CMat<T>>,
    size: usize,
}

impl<T: Real> CommutingTuple<T> {
    /// Default commutation tolerance `1e-10 · max_i |T_i|^2`.
    pub fn new(mats: Vec<CMat<T>>) -> Result<Self> {
        let scale = mats.iter().map(fro).fold(T::zero(), |a, b| a.max(b));
        let tol = T::lit(1e-10) * (scale * scale).max(T::eps());
        Self::with_tolerance(mats, tol)
    }

    pub fn with_tolerance(mats: Vec<CMat<T>>, tol: T) -> Result<Self> {
        let size = mats.first().map(|m| m.nrows()).unwrap_or(1);
        for m in &mats {
            if m.shape() != (size, size) {
                return Err(Error::ShapeMismatch(format!(
                    "tuple entries must be {size}x{size}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        for i in 0..mats.len() {
            for j in i + 1..mats.len() {
                let c = &mats[i] * &mats[j] - &mats[j] * &mats[i];
                let norm = fro(&c);
                if norm > tol {
                    return Err(Error::CommutationViolation { i, j, norm: norm.to_f64_lossy(), tol: tol.to_f64_lossy() });
                }
            }
        }
        Ok(CommutingTuple { mats, size })
    }

    /// Diagonal tuple `T_i = diag(z^{(1)}_i, ..., z^{(N)}_i)` from joint eigenvalues.
    pub fn diagonal(points: &[Vec<Complex<T>>], d: usize) -> Result<Self> {
        let n = points.len();
        let mut mats = vec![CMat::zeros(n, n); d];
        for (k, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.len() });
            }
            for i in 0..d {
                mats[i][(k, k)] = p[i];
            }
        }
        Ok(CommutingTuple { mats, size: n })
    }

    /// `U T_i U^*` for every entry.
    pub fn conjugated(&self, u: &CMat<T>) -> Result<Self> {
        let mats = self.mats.iter().map(|m| u * m * u.adjoint()).collect();
        Self::new(mats)
    }

    pub fn nvars(&self) -> usize {
        self.mats.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn matrices(&self) -> &[CMat<T>] {
        &self.mats
    }

    /// `T^e = T_1^{e_1} ··· T_d^{e_d}`, each power by repeated squaring.
    pub fn power(&self, e: &MultiIndex) -> CMat<T> {
        let mut out = CMat::identity(self.size, self.size);
        for (m, &k) in self.mats.iter().zip(e.exponents()) {
            if k > 0 {
                out *= matrix_power(m, k);
            }
        }
        out
    }
}

fn matrix_power<T: Real>(m: &CMat<T>, mut k: u32) -> CMat<T> {
    let mut result = CMat::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}
