use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nfunc::{v_function, v_gradient, NFunction};
use crate::opsym::DiffOp;

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// JSON form of the shipped integrands.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntegrandSpec {
    /// `|z|^2`
    SquaredNorm,
    /// `|z|^p`
    PowerNorm { p: f64 },
    /// `V_phi(z) = phi(sqrt(1+|z|^2)) - phi(1)`
    VFunction { phi: NFunction },
    Constant { value: f64 },
}

/// A density `F : W -> R` with optional gradient and a reference growth
/// function.
#[derive(Clone)]
pub struct Integrand {
    dim_w: usize,
    name: String,
    value: Arc<ValueFn>,
    grad: Option<Arc<GradFn>>,
    growth: NFunction,
    /// Multiplicative inflation of the growth bound (operator norm of a
    /// reduction, 1 otherwise).
    growth_factor: f64,
}

impl fmt::Debug for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Integrand({}, dim_w={})", self.name, self.dim_w)
    }
}

impl Integrand {
    pub fn new(
        dim_w: usize,
        name: impl Into<String>,
        growth: NFunction,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: Option<Arc<GradFn>>,
    ) -> Self {
        Self { dim_w, name: name.into(), value: Arc::new(value), grad, growth, growth_factor: 1.0 }
    }

    pub fn from_spec(spec: &IntegrandSpec, dim_w: usize) -> Result<Self> {
        Ok(match spec {
            IntegrandSpec::SquaredNorm => Self::squared_norm(dim_w),
            IntegrandSpec::PowerNorm { p } => Self::power_norm(dim_w, *p)?,
            IntegrandSpec::VFunction { phi } => Self::v_function(dim_w, phi.clone()),
            IntegrandSpec::Constant { value } => Self::constant(dim_w, *value),
        })
    }

    pub fn squared_norm(dim_w: usize) -> Self {
        Self::new(
            dim_w,
            "|z|^2",
            NFunction::power(2.0),
            |z| z.iter().map(|x| x * x).sum(),
            Some(Arc::new(|z: &[f64], g: &mut [f64]| {
                for (gi, zi) in g.iter_mut().zip(z) {
                    *gi = 2.0 * zi;
                }
            })),
        )
    }

    pub fn power_norm(dim_w: usize, p: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::Domain(format!("power integrand needs p > 1, got {p}")));
        }
        Ok(Self::new(
            dim_w,
            format!("|z|^{p}"),
            NFunction::power(p),
            move |z| z.iter().map(|x| x * x).sum::<f64>().powf(p / 2.0),
            Some(Arc::new(move |z: &[f64], g: &mut [f64]| {
                let r2: f64 = z.iter().map(|x| x * x).sum();
                let k = if r2 > 0.0 { p * r2.powf(p / 2.0 - 1.0) } else { 0.0 };
                for (gi, zi) in g.iter_mut().zip(z) {
                    *gi = k * zi;
                }
            })),
        ))
    }

    pub fn v_function(dim_w: usize, phi: NFunction) -> Self {
        let (pv, pg) = (phi.clone(), phi.clone());
        Self::new(
            dim_w,
            format!("V[{phi}]"),
            phi,
            move |z| v_function(&pv, z),
            Some(Arc::new(move |z: &[f64], g: &mut [f64]| g.copy_from_slice(&v_gradient(&pg, z)))),
        )
    }

    pub fn constant(dim_w: usize, c: f64) -> Self {
        Self::new(
            dim_w,
            format!("{c}"),
            NFunction::power(2.0),
            move |_| c,
            Some(Arc::new(|_: &[f64], g: &mut [f64]| g.iter_mut().for_each(|x| *x = 0.0))),
        )
    }

    pub fn dim_w(&self) -> usize {
        self.dim_w
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn growth(&self) -> &NFunction {
        &self.growth
    }

    pub fn growth_factor(&self) -> f64 {
        self.growth_factor
    }

    pub fn has_grad(&self) -> bool {
        self.grad.is_some()
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        (self.value)(z)
    }

    pub fn grad(&self, z: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.grad {
            Some(g) => {
                g(z, out);
                Ok(())
            }
            None => Err(Error::Unsupported(format!("integrand {} has no gradient", self.name))),
        }
    }

    /// `G(M) = F(pi_A M)` on the full Jacobian space, gradient by the chain rule.
    pub fn reduce(&self, op: &DiffOp) -> Result<Integrand> {
        if op.dim_w() != self.dim_w {
            return Err(Error::DimensionMismatch { expected: self.dim_w, got: op.dim_w() });
        }
        let p = Arc::new(op.projection_pi());
        let pt = Arc::new(p.transpose());
        let (fv, fg) = (self.value.clone(), self.grad.clone());
        let pv = p.clone();
        let value = move |m: &[f64]| fv(&(pv.as_ref() * DVector::from_column_slice(m)).as_slice().to_vec());
        let grad: Option<Arc<GradFn>> = fg.map(|fg| {
            let dim_w = p.nrows();
            Arc::new(move |m: &[f64], out: &mut [f64]| {
                let z = p.as_ref() * DVector::from_column_slice(m);
                let mut gz = vec![0.0; dim_w];
                fg(z.as_slice(), &mut gz);
                let g = pt.as_ref() * DVector::from_vec(gz);
                out.copy_from_slice(g.as_slice());
            }) as Arc<GradFn>
        });
        let mut g = Integrand::new(op.dim_v() * op.n(), format!("{} o pi", self.name), self.growth.clone(), value, grad);
        let norm = op.projection_norm();
        g.growth_factor = self.growth_factor * norm.max(1.0);
        Ok(g)
    }

    /// Largest relative error between the gradient and central differences of
    /// the value along random directions.
    pub fn gradient_check(&self, samples: usize, scale: f64, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut g = vec![0.0; self.dim_w];
        for _ in 0..samples {
            let z0: Vec<f64> = (0..self.dim_w).map(|_| StandardNormal.sample(&mut rng)).collect();
            let z: Vec<f64> = z0.iter().map(|x| scale * x).collect();
            let d: Vec<f64> = (0..self.dim_w).map(|_| StandardNormal.sample(&mut rng)).collect();
            self.grad(&z, &mut g)?;
            let exact: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
            let h = 1e-6 * (1.0 + z.iter().map(|x| x * x).sum::<f64>().sqrt());
            let zp: Vec<f64> = z.iter().zip(&d).map(|(a, b)| a + h * b).collect();
            let zm: Vec<f64> = z.iter().zip(&d).map(|(a, b)| a - h * b).collect();
            let fd = (self.value(&zp) - self.value(&zm)) / (2.0 * h);
            let gnorm = g.iter().map(|x| x * x).sum::<f64>().sqrt() * d.iter().map(|x| x * x).sum::<f64>().sqrt();
            worst = worst.max((fd - exact).abs() / gnorm.max(1e-300).max(exact.abs()));
        }
        Ok(worst)
    }

    /// Least `c` with `|F(z)| <= c (1 + growth(|z|))` on random samples with
    /// norms log-uniform in `[1e-3, radius]`.
    pub fn growth_constant(&self, samples: usize, radius: f64, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c: f64 = 0.0;
        for _ in 0..samples {
            let dir: Vec<f64> = (0..self.dim_w).map(|_| StandardNormal.sample(&mut rng)).collect();
            let dn = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            let r = (1e-3f64).ln() + rng.random::<f64>() * (radius / 1e-3).ln();
            let r = r.exp();
            let z: Vec<f64> = dir.iter().map(|x| x * r / dn).collect();
            c = c.max(self.value(&z).abs() / (1.0 + self.growth.value(r)));
        }
        c
    }
}

/// Matrix form of `pi_A` exposed for diagnostics.
pub fn projection_matrix(op: &DiffOp) -> DMatrix<f64> {
    op.projection_pi()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_gradients_match_differences() {
        let cases = [
            Integrand::squared_norm(4),
            Integrand::power_norm(4, 4.0).unwrap(),
            Integrand::v_function(4, NFunction::power(2.0)),
            Integrand::v_function(4, NFunction::power(3.0)),
            Integrand::v_function(4, NFunction::LLogL),
        ];
        for f in &cases {
            for scale in [0.1, 1.0, 30.0] {
                let e = f.gradient_check(20, scale, 11).unwrap();
                assert!(e < 1e-5, "{f:?} scale {scale}: {e}");
            }
        }
    }

    #[test]
    fn reduction_of_sym_grad() {
        let op = DiffOp::preset("sym_grad", 2, None).unwrap();
        let g = Integrand::squared_norm(4).reduce(&op).unwrap();
        let m = [1.0, 2.0, -3.0, 0.5];
        let sym = [1.0, -0.5, -0.5, 0.5];
        assert!((g.value(&m) - sym.iter().map(|x| x * x).sum::<f64>()).abs() < 1e-15);
        assert!(g.gradient_check(10, 1.0, 3).unwrap() < 1e-6);
        assert!((g.growth_factor() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn growth_of_squared_norm() {
        let c = Integrand::squared_norm(3).growth_constant(500, 1e3, 1);
        assert!(c <= 1.0 && c > 0.9);
    }

    #[test]
    fn spec_round_trip() {
        let spec: IntegrandSpec = serde_json::from_str(r#"{"kind":"v_function","phi":{"kind":"llogl"}}"#).unwrap();
        let f = Integrand::from_spec(&spec, 2).unwrap();
        assert!((f.value(&[3f64.sqrt(), 0.0]) - (2.0 * 3f64.ln() - 2f64.ln())).abs() < 1e-12);
    }
}
