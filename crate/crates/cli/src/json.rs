//! JSON interchange types. Complex numbers are `[re, im]`, matrices are
//! row-major nested arrays, exponents are integer arrays.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use schur_agler::certificate::Certificate;
use schur_agler::detrep::DetRep;
use schur_agler::domains::DomainSpec;
use schur_agler::poly::{HermPoly, MatPoly, MultiIndex};
use schur_agler::realization::{Colligation, Provenance};
use schur_agler::scalar::CMat;

pub type Mat = Vec<Vec<[f64; 2]>>;

#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

type In<T> = Result<T, InputError>;

pub fn mat_to_json(m: &CMat<f64>) -> Mat {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn mat_from_json(m: &Mat, rows: usize, cols: usize, what: &str) -> In<CMat<f64>> {
    if m.len() != rows {
        return Err(InputError(format!("{what}: expected {rows} rows, found {}", m.len())));
    }
    for (i, r) in m.iter().enumerate() {
        if r.len() != cols {
            return Err(InputError(format!("{what}: row {i} has {} entries, expected {cols}", r.len())));
        }
        if let Some(j) = r.iter().position(|z| !z[0].is_finite() || !z[1].is_finite()) {
            return Err(InputError(format!("{what}: entry ({i}, {j}) is not finite")));
        }
    }
    Ok(CMat::from_fn(rows, cols, |i, j| Complex::new(m[i][j][0], m[i][j][1])))
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MonoJson {
    pub exp: Vec<u32>,
    pub mat: Mat,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatPolyJson {
    pub d: usize,
    pub rows: usize,
    pub cols: usize,
    pub coeffs: Vec<MonoJson>,
}

impl MatPolyJson {
    pub fn from_poly(p: &MatPoly<f64>) -> Self {
        MatPolyJson {
            d: p.nvars(),
            rows: p.rows(),
            cols: p.cols(),
            coeffs: p.terms().map(|(e, m)| MonoJson { exp: e.exponents().to_vec(), mat: mat_to_json(m) }).collect(),
        }
    }

    pub fn to_poly(&self) -> In<MatPoly<f64>> {
        let mut terms = Vec::with_capacity(self.coeffs.len());
        for (k, t) in self.coeffs.iter().enumerate() {
            if t.exp.len() != self.d {
                return Err(InputError(format!("coeffs[{k}]: exp has length {}, expected d = {}", t.exp.len(), self.d)));
            }
            let m = mat_from_json(&t.mat, self.rows, self.cols, &format!("coeffs[{k}].mat"))?;
            terms.push((MultiIndex::new(t.exp.clone()), m));
        }
        MatPoly::from_terms_exact(self.d, self.rows, self.cols, terms).map_err(|e| InputError(e.to_string()))
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HermTermJson {
    pub w: Vec<u32>,
    pub z: Vec<u32>,
    pub mat: Mat,
}

/// `P(w, z) = Σ P_{λμ} w^λ z^μ` with `P_{λμ} = P_{μλ}^*`.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HermPolyJson {
    pub d: usize,
    pub size: usize,
    pub coeffs: Vec<HermTermJson>,
}

impl HermPolyJson {
    pub fn from_poly(p: &HermPoly<f64>) -> Self {
        HermPolyJson {
            d: p.nvars(),
            size: p.size(),
            coeffs: p
                .terms()
                .map(|((w, z), m)| HermTermJson { w: w.exponents().to_vec(), z: z.exponents().to_vec(), mat: mat_to_json(m) })
                .collect(),
        }
    }

    pub fn to_poly(&self) -> In<HermPoly<f64>> {
        let mut terms = Vec::with_capacity(self.coeffs.len());
        for (k, t) in self.coeffs.iter().enumerate() {
            if t.w.len() != self.d || t.z.len() != self.d {
                return Err(InputError(format!("coeffs[{k}]: w and z must have length d = {}", self.d)));
            }
            let m = mat_from_json(&t.mat, self.size, self.size, &format!("coeffs[{k}].mat"))?;
            terms.push(((MultiIndex::new(t.w.clone()), MultiIndex::new(t.z.clone())), m));
        }
        HermPoly::from_terms_exact(self.d, self.size, terms, 1e-12).map_err(|e| InputError(e.to_string()))
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DomainJson {
    pub d: usize,
    pub blocks: Vec<MatPolyJson>,
    /// Declared bound `|z_i| ≤ r`; enables sampling without an Archimedean search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinate_bound: Option<f64>,
    #[serde(default)]
    pub allow_constant: bool,
}

impl DomainJson {
    pub fn to_domain(&self) -> In<DomainSpec<f64>> {
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| b.to_poly().map_err(|e| InputError(format!("blocks[{i}]: {e}"))))
            .collect::<In<Vec<_>>>()?;
        let mut dom = DomainSpec::new(self.d, blocks, self.allow_constant).map_err(|e| InputError(e.to_string()))?;
        if let Some(r) = self.coordinate_bound {
            if !(r > 0.0 && r.is_finite()) {
                return Err(InputError(format!("coordinate_bound must be positive and finite, got {r}")));
            }
            dom = dom.with_coordinate_bound(r);
        }
        Ok(dom)
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CertificateJson {
    pub h0: MatPolyJson,
    pub h: Vec<MatPolyJson>,
    pub n: Vec<usize>,
    pub degree: usize,
    pub residual: f64,
    pub iterations: usize,
}

impl CertificateJson {
    pub fn from_cert(c: &Certificate<f64>) -> Self {
        CertificateJson {
            h0: MatPolyJson::from_poly(&c.h0),
            h: c.h.iter().map(MatPolyJson::from_poly).collect(),
            n: c.n.clone(),
            degree: c.degree,
            residual: c.residual,
            iterations: c.iterations,
        }
    }

    pub fn to_cert(&self) -> In<Certificate<f64>> {
        let h0 = self.h0.to_poly().map_err(|e| InputError(format!("h0: {e}")))?;
        let h = self
            .h
            .iter()
            .enumerate()
            .map(|(j, p)| p.to_poly().map_err(|e| InputError(format!("h[{j}]: {e}"))))
            .collect::<In<Vec<_>>>()?;
        if h.len() != self.n.len() {
            return Err(InputError(format!("h has {} entries but n has {}", h.len(), self.n.len())));
        }
        if let Some(j) = h.iter().position(|p| p.cols() != h0.cols()) {
            return Err(InputError(format!("h[{j}] has {} columns, h0 has {}", h[j].cols(), h0.cols())));
        }
        Ok(Certificate { h0, h, n: self.n.clone(), degree: self.degree, residual: self.residual, iterations: self.iterations })
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProvenanceJson {
    pub degree: usize,
    pub solver_iterations: usize,
    pub certificate_residual: f64,
    pub lurking_residual: f64,
    pub consistency_residual: f64,
    pub raw_sigma_max: f64,
    pub clipped: bool,
    pub pinv_cut: f64,
}

impl From<&Provenance> for ProvenanceJson {
    fn from(p: &Provenance) -> Self {
        ProvenanceJson {
            degree: p.degree,
            solver_iterations: p.solver_iterations,
            certificate_residual: p.certificate_residual,
            lurking_residual: p.lurking_residual,
            consistency_residual: p.consistency_residual,
            raw_sigma_max: p.raw_sigma_max,
            clipped: p.clipped,
            pinv_cut: p.pinv_cut,
        }
    }
}

impl From<&ProvenanceJson> for Provenance {
    fn from(p: &ProvenanceJson) -> Self {
        Provenance {
            degree: p.degree,
            solver_iterations: p.solver_iterations,
            certificate_residual: p.certificate_residual,
            lurking_residual: p.lurking_residual,
            consistency_residual: p.consistency_residual,
            raw_sigma_max: p.raw_sigma_max,
            clipped: p.clipped,
            pinv_cut: p.pinv_cut,
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ColligationJson {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
    pub n: Vec<usize>,
    /// `(ℓ_i, m_i)` of the domain blocks.
    pub block_shapes: Vec<[usize; 2]>,
    /// Row split `Σ m_i n_i | α` and column split `Σ ℓ_i n_i | β`.
    pub partition: Partition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<ProvenanceJson>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Partition {
    pub state_rows: usize,
    pub state_cols: usize,
    pub alpha: usize,
    pub beta: usize,
}

impl ColligationJson {
    pub fn from_col(c: &Colligation<f64>) -> Self {
        ColligationJson {
            a: mat_to_json(&c.a),
            b: mat_to_json(&c.b),
            c: mat_to_json(&c.c),
            d: mat_to_json(&c.d),
            n: c.n.clone(),
            block_shapes: c.block_shapes.iter().map(|&(l, m)| [l, m]).collect(),
            partition: Partition { state_rows: c.a.nrows(), state_cols: c.a.ncols(), alpha: c.d.nrows(), beta: c.d.ncols() },
            provenance: c.provenance.as_ref().map(ProvenanceJson::from),
        }
    }

    pub fn to_col(&self) -> In<Colligation<f64>> {
        let p = &self.partition;
        let a = mat_from_json(&self.a, p.state_rows, p.state_cols, "a")?;
        let b = mat_from_json(&self.b, p.state_rows, p.beta, "b")?;
        let c = mat_from_json(&self.c, p.alpha, p.state_cols, "c")?;
        let d = mat_from_json(&self.d, p.alpha, p.beta, "d")?;
        let shapes = self.block_shapes.iter().map(|s| (s[0], s[1])).collect();
        let mut col = Colligation::new(a, b, c, d, self.n.clone(), shapes).map_err(|e| InputError(e.to_string()))?;
        col.provenance = self.provenance.as_ref().map(Provenance::from);
        Ok(col)
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DetRepJson {
    pub k: Mat,
    pub k_rows: usize,
    pub k_cols: usize,
    pub n: Vec<usize>,
    pub q: MatPolyJson,
    pub c: f64,
    pub c_max: f64,
    pub residual: f64,
    pub remainder: f64,
    pub degree_bound: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<ProvenanceJson>,
}

impl DetRepJson {
    pub fn from_rep(r: &DetRep<f64>) -> Self {
        DetRepJson {
            k: mat_to_json(&r.k),
            k_rows: r.k.nrows(),
            k_cols: r.k.ncols(),
            n: r.n.clone(),
            q: MatPolyJson::from_poly(&r.q),
            c: r.c,
            c_max: r.c_max,
            residual: r.residual,
            remainder: r.remainder,
            degree_bound: r.degree_bound,
            provenance: r.provenance.as_ref().map(ProvenanceJson::from),
        }
    }

    pub fn to_rep(&self) -> In<DetRep<f64>> {
        let k = mat_from_json(&self.k, self.k_rows, self.k_cols, "k")?;
        Ok(DetRep {
            k,
            n: self.n.clone(),
            q: self.q.to_poly().map_err(|e| InputError(format!("q: {e}")))?,
            c: self.c,
            c_max: self.c_max,
            residual: self.residual,
            remainder: self.remainder,
            degree_bound: self.degree_bound,
            provenance: self.provenance.as_ref().map(Provenance::from),
        })
    }
}

/// Parses `text` as `T`; errors name the JSON path and the line/column.
pub fn parse<T: for<'de> Deserialize<'de>>(text: &str, source: &str) -> In<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        InputError(format!("{source}: at {path}: {inner}"))
    })
}

pub fn read_file<T: for<'de> Deserialize<'de>>(path: &std::path::Path) -> In<T> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    parse(&text, &path.display().to_string())
}

pub fn parse_poly(path: &std::path::Path) -> In<MatPoly<f64>> {
    read_file::<MatPolyJson>(path)?.to_poly().map_err(|e| InputError(format!("{}: {e}", path.display())))
}

pub fn emit_poly(p: &MatPoly<f64>) -> String {
    serde_json::to_string(&MatPolyJson::from_poly(p)).expect("finite polynomial serializes")
}
