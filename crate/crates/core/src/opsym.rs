//! First-order constant-coefficient operators `A u = sum_i A_i d_i u` and
//! their Fourier symbols.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldlab::{Field, Grid};

/// Default relative rank threshold.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default number of quasi-uniform sphere samples.
pub const DEFAULT_SPHERE_SAMPLES: usize = 4096;
/// Relative threshold for the essential range factorization.
pub const RANGE_TOL: f64 = 1e-12;

const SPHERE_SEED: u64 = 0x5EED_0A11;
const MAX_WITNESSES: usize = 32;

/// `A u = sum_i A_i d_i u` with `A_i : V -> W`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffOp {
    n: usize,
    dim_v: usize,
    dim_w: usize,
    coeffs: Vec<DMatrix<f64>>,
    name: Option<String>,
}

/// JSON form of a [`DiffOp`]: coefficient matrices as lists of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpDescriptor {
    pub n: usize,
    #[serde(rename = "dimV")]
    pub dim_v: usize,
    #[serde(rename = "dimW")]
    pub dim_w: usize,
    pub coeffs: Vec<Vec<Vec<f64>>>,
}

impl DiffOp {
    pub fn new(coeffs: Vec<DMatrix<f64>>) -> Result<Self> {
        let Some(first) = coeffs.first() else {
            return Err(Error::Malformed("operator needs at least one coefficient matrix".into()));
        };
        let (dim_w, dim_v) = first.shape();
        for a in &coeffs {
            if a.nrows() != dim_w {
                return Err(Error::DimensionMismatch { expected: dim_w, got: a.nrows() });
            }
            if a.ncols() != dim_v {
                return Err(Error::DimensionMismatch { expected: dim_v, got: a.ncols() });
            }
        }
        Ok(Self { n: coeffs.len(), dim_v, dim_w, coeffs, name: None })
    }

    fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    /// Named operator. `dim_v` only matters for `grad`, where it defaults to `n`.
    pub fn preset(name: &str, n: usize, dim_v: Option<usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Malformed("space dimension must be at least 1".into()));
        }
        let unit = |rows: usize, cols: usize, entries: &[(usize, usize, f64)]| {
            let mut m = DMatrix::zeros(rows, cols);
            for &(r, c, v) in entries {
                m[(r, c)] += v;
            }
            m
        };
        let coeffs: Vec<DMatrix<f64>> = match name {
            "grad" => {
                let dv = dim_v.unwrap_or(n);
                (0..n).map(|i| unit(dv * n, dv, &(0..dv).map(|j| (j * n + i, j, 1.0)).collect::<Vec<_>>())).collect()
            }
            "sym_grad" => (0..n)
                .map(|i| unit(n * n, n, &(0..n).flat_map(|j| [(j * n + i, j, 0.5), (i * n + j, j, 0.5)]).collect::<Vec<_>>()))
                .collect(),
            "dev_sym_grad" => {
                let tr = 1.0 / n as f64;
                (0..n)
                    .map(|i| {
                        let mut entries: Vec<_> = (0..n).flat_map(|j| [(j * n + i, j, 0.5), (i * n + j, j, 0.5)]).collect();
                        entries.extend((0..n).map(|k| (k * n + k, i, -tr)));
                        unit(n * n, n, &entries)
                    })
                    .collect()
            }
            "div" => (0..n).map(|i| unit(1, n, &[(0, i, 1.0)])).collect(),
            "d1" => (0..n).map(|i| unit(1, 1, if i == 0 { &[(0, 0, 1.0)] } else { &[] })).collect(),
            _ => return Err(Error::UnknownPreset(name.to_string())),
        };
        Ok(Self::new(coeffs)?.named(name))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    pub fn dim_w(&self) -> usize {
        self.dim_w
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn descriptor(&self) -> OpDescriptor {
        OpDescriptor {
            n: self.n,
            dim_v: self.dim_v,
            dim_w: self.dim_w,
            coeffs: self.coeffs.iter().map(|a| a.row_iter().map(|r| r.iter().copied().collect()).collect()).collect(),
        }
    }

    pub fn from_descriptor(d: &OpDescriptor) -> Result<Self> {
        if d.coeffs.len() != d.n {
            return Err(Error::DimensionMismatch { expected: d.n, got: d.coeffs.len() });
        }
        let mut mats = Vec::with_capacity(d.n);
        for rows in &d.coeffs {
            if rows.len() != d.dim_w {
                return Err(Error::DimensionMismatch { expected: d.dim_w, got: rows.len() });
            }
            if let Some(bad) = rows.iter().find(|r| r.len() != d.dim_v) {
                return Err(Error::DimensionMismatch { expected: d.dim_v, got: bad.len() });
            }
            mats.push(DMatrix::from_fn(d.dim_w, d.dim_v, |r, c| rows[r][c]));
        }
        if d.n == 0 {
            return Err(Error::Malformed("space dimension must be at least 1".into()));
        }
        Ok(Self { n: d.n, dim_v: d.dim_v, dim_w: d.dim_w, coeffs: mats, name: None })
    }

    /// `A[xi] = sum_i A_i xi_i`.
    pub fn symbol(&self, xi: &[f64]) -> Result<DMatrix<f64>> {
        if xi.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: xi.len() });
        }
        let mut s = DMatrix::zeros(self.dim_w, self.dim_v);
        for (a, &x) in self.coeffs.iter().zip(xi) {
            s += a * x;
        }
        Ok(s)
    }

    /// `a ⊗_A b = A[b] a`.
    pub fn tensor_a(&self, a: &[f64], b: &[f64]) -> Result<DVector<f64>> {
        if a.len() != self.dim_v {
            return Err(Error::DimensionMismatch { expected: self.dim_v, got: a.len() });
        }
        Ok(self.symbol(b)? * DVector::from_column_slice(a))
    }

    /// The map `pi_A` with `A v = pi_A(grad v)`; Jacobian slot `(j, i)`
    /// (`d_i v_j`) sits at column `j * n + i`.
    pub fn projection_pi(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut p = DMatrix::zeros(self.dim_w, self.dim_v * n);
        for (i, a) in self.coeffs.iter().enumerate() {
            for j in 0..self.dim_v {
                p.set_column(j * n + i, &a.column(j));
            }
        }
        p
    }

    /// Spectral norm of [`DiffOp::projection_pi`].
    pub fn projection_norm(&self) -> f64 {
        let p = self.projection_pi();
        if p.is_empty() {
            return 0.0;
        }
        p.singular_values().max()
    }

    /// Orthonormal basis (as columns) of `span{A_i e_j}`.
    pub fn essential_range(&self) -> DMatrix<f64> {
        let p = self.projection_pi();
        if p.is_empty() {
            return DMatrix::zeros(self.dim_w, 0);
        }
        let svd = p.svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let smax = svd.singular_values.max();
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&k| smax > 0.0 && svd.singular_values[k] > RANGE_TOL * smax)
            .collect();
        DMatrix::from_fn(self.dim_w, keep.len(), |r, c| u[(r, keep[c])])
    }

    /// Symbol analysis with default sampling and tolerance.
    pub fn analyze_default(&self) -> SymbolAnalysis {
        self.analyze(DEFAULT_SPHERE_SAMPLES, DEFAULT_TOL)
    }

    /// Samples the unit sphere and classifies ellipticity and constant rank.
    pub fn analyze(&self, sphere_samples: usize, tol: f64) -> SymbolAnalysis {
        let directions = sphere_directions(self.n, sphere_samples.max(2 * self.n * self.n));
        let mut ranks = BTreeSet::new();
        let mut witnesses = Vec::new();
        let mut min_sigma = f64::INFINITY;
        let mut max_sigma: f64 = 0.0;
        let rows = self.dim_w.max(self.dim_v);
        for xi in &directions {
            let s = self.symbol(xi).expect("direction has the operator dimension");
            let padded = DMatrix::from_fn(rows, self.dim_v, |r, c| if r < self.dim_w { s[(r, c)] } else { 0.0 });
            let svd = padded.svd(false, true);
            let sv = &svd.singular_values;
            let smax = sv.max();
            let smin = if self.dim_v == 0 { f64::INFINITY } else { sv.min() };
            let rank = sv.iter().filter(|&&x| smax > 0.0 && x > tol * smax).count();
            ranks.insert(rank);
            min_sigma = min_sigma.min(smin);
            max_sigma = max_sigma.max(smax);
            if rank < self.dim_v && witnesses.len() < MAX_WITNESSES {
                let vt = svd.v_t.as_ref().expect("right singular vectors requested");
                let k = (0..sv.len()).min_by(|&a, &b| sv[a].total_cmp(&sv[b])).unwrap_or(0);
                let mut v: Vec<f64> = vt.row(k).iter().copied().collect();
                let lead = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
                if lead < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
                witnesses.push(Witness { xi: xi.clone(), kernel: v });
            }
        }
        let elliptic = self.dim_v > 0 && max_sigma > 0.0 && min_sigma > tol * max_sigma;
        SymbolAnalysis {
            elliptic,
            min_singular_on_sphere: if self.dim_v == 0 { 0.0 } else { min_sigma },
            max_singular_on_sphere: max_sigma,
            constant_rank: ranks.len() == 1,
            rank_profile: ranks.into_iter().collect(),
            witnesses,
            samples: directions.len(),
            tol,
        }
    }

    /// The Fourier multiplier `m_j(xi) = xi_j (A[xi]^T A[xi])^{-1} A[xi]^T`.
    pub fn multiplier(&self, j: usize) -> Result<Multiplier> {
        if j >= self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: j });
        }
        let analysis = self.analyze(256, DEFAULT_TOL);
        if !analysis.elliptic {
            let xi = analysis.witnesses.first().map(|w| w.xi.clone()).unwrap_or_default();
            return Err(Error::SingularSymbol { xi });
        }
        Ok(Multiplier { kind: MultiplierKind::Operator { op: Arc::new(self.clone()), axis: j } })
    }
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.name {
            Some(name) => write!(f, "{name}(n={}, V=R^{}, W=R^{})", self.n, self.dim_v, self.dim_w),
            None => write!(f, "op(n={}, V=R^{}, W=R^{})", self.n, self.dim_v, self.dim_w),
        }
    }
}

/// Coordinate directions, quasi-uniform sphere points, then normalized
/// small-integer directions.
fn sphere_directions(n: usize, samples: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    match n {
        1 => out.push(vec![-1.0]),
        2 => out.extend((0..samples).map(|k| {
            let th = std::f64::consts::TAU * (k as f64 + 0.5) / samples as f64;
            vec![th.cos(), th.sin()]
        })),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(SPHERE_SEED);
            for _ in 0..samples {
                let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    out.push(v.into_iter().map(|x| x / norm).collect());
                }
            }
        }
    }
    if n <= 4 {
        let total = 5usize.pow(n as u32);
        for code in 0..total {
            let v: Vec<f64> = (0..n).map(|i| ((code / 5usize.pow(i as u32)) % 5) as f64 - 2.0).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                out.push(v.into_iter().map(|x| x / norm).collect());
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub xi: Vec<f64>,
    pub kernel: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolAnalysis {
    pub elliptic: bool,
    pub min_singular_on_sphere: f64,
    pub max_singular_on_sphere: f64,
    pub rank_profile: Vec<usize>,
    pub constant_rank: bool,
    pub witnesses: Vec<Witness>,
    pub samples: usize,
    pub tol: f64,
}

type MatrixFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

#[derive(Clone)]
enum MultiplierKind {
    Identity { dim: usize },
    Operator { op: Arc<DiffOp>, axis: usize },
    Custom { rows: usize, cols: usize, f: Arc<MatrixFn> },
}

/// A matrix-valued Fourier multiplier acting on `cols`-vector fields.
#[derive(Clone)]
pub struct Multiplier {
    kind: MultiplierKind,
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            MultiplierKind::Identity { dim } => write!(f, "Multiplier::Identity({dim})"),
            MultiplierKind::Operator { op, axis } => write!(f, "Multiplier::Operator({op}, axis {axis})"),
            MultiplierKind::Custom { rows, cols, .. } => write!(f, "Multiplier::Custom({rows}x{cols})"),
        }
    }
}

impl Multiplier {
    /// The identity multiplier; keeps the mean mode.
    pub fn identity(dim: usize) -> Self {
        Self { kind: MultiplierKind::Identity { dim } }
    }

    pub fn custom(rows: usize, cols: usize, f: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self { kind: MultiplierKind::Custom { rows, cols, f: Arc::new(f) } }
    }

    /// Output dimension.
    pub fn rows(&self) -> usize {
        match &self.kind {
            MultiplierKind::Identity { dim } => *dim,
            MultiplierKind::Operator { op, .. } => op.dim_v,
            MultiplierKind::Custom { rows, .. } => *rows,
        }
    }

    /// Input dimension.
    pub fn cols(&self) -> usize {
        match &self.kind {
            MultiplierKind::Identity { dim } => *dim,
            MultiplierKind::Operator { op, .. } => op.dim_w,
            MultiplierKind::Custom { cols, .. } => *cols,
        }
    }

    pub fn eval(&self, xi: &[f64]) -> DMatrix<f64> {
        match &self.kind {
            MultiplierKind::Identity { dim } => DMatrix::identity(*dim, *dim),
            MultiplierKind::Custom { f, .. } => f(xi),
            MultiplierKind::Operator { op, axis } => {
                let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return DMatrix::zeros(op.dim_v, op.dim_w);
                }
                let unit: Vec<f64> = xi.iter().map(|x| x / norm).collect();
                let s = op.symbol(&unit).expect("frequency has the operator dimension");
                let st = s.transpose();
                let gram = &st * &s;
                let sol = gram.lu().solve(&st).expect("elliptic symbol has an invertible Gram matrix");
                sol * unit[*axis]
            }
        }
    }
}

/// One-dimensional profile `g` for kernel fields `v(x) = v0 g(<x, xi0>)`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelProfile {
    /// `1` on `[1/2, 1)` modulo 1, `0` elsewhere.
    Step,
    /// `sin(2 pi s)`
    Sin,
    /// Mean of the first `depth` dyadic square waves `floor(2^k s) mod 2`.
    Staircase { depth: u32 },
    #[serde(skip)]
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for KernelProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelProfile::Step => write!(f, "Step"),
            KernelProfile::Sin => write!(f, "Sin"),
            KernelProfile::Staircase { depth } => write!(f, "Staircase({depth})"),
            KernelProfile::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl KernelProfile {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            KernelProfile::Step => {
                if s.rem_euclid(1.0) >= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            KernelProfile::Sin => (std::f64::consts::TAU * s).sin(),
            KernelProfile::Staircase { depth } => {
                if *depth == 0 {
                    return 0.0;
                }
                let sum: f64 = (1..=*depth).map(|k| (2f64.powi(k as i32) * s).floor().rem_euclid(2.0)).sum();
                sum / *depth as f64
            }
            KernelProfile::Custom(g) => g(s),
        }
    }
}

/// `v(x) = v0 g(<x, xi0>)` for the first kernel witness of a non-elliptic
/// operator.
pub fn kernel_field(op: &DiffOp, profile: &KernelProfile, grid: &Grid) -> Result<Field> {
    let analysis = op.analyze(256, DEFAULT_TOL);
    if analysis.elliptic {
        return Err(Error::NoKernel);
    }
    let w = analysis.witnesses.first().ok_or(Error::NoKernel)?;
    kernel_field_with(op, &w.xi, &w.kernel, profile, grid)
}

/// Kernel field for an explicit direction `xi0` and vector `v0`.
pub fn kernel_field_with(op: &DiffOp, xi0: &[f64], v0: &[f64], profile: &KernelProfile, grid: &Grid) -> Result<Field> {
    if xi0.len() != op.n || grid.n() != op.n {
        return Err(Error::DimensionMismatch { expected: op.n, got: xi0.len().min(grid.n()) });
    }
    if v0.len() != op.dim_v {
        return Err(Error::DimensionMismatch { expected: op.dim_v, got: v0.len() });
    }
    Ok(Field::from_fn(grid.clone(), op.dim_v, |x, out| {
        let s: f64 = x.iter().zip(xi0).map(|(a, b)| a * b).sum();
        let g = profile.eval(s);
        for (o, v) in out.iter_mut().zip(v0) {
            *o = v * g;
        }
    }))
}
