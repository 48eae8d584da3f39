//! Bayes linear emulators for a single simulator output.

use std::io::{Read, Write};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::basis::{eval_mean, Term};
use crate::error::{Error, Result};

pub const EMULATOR_FORMAT: &str = "hmatch-emulator";
pub const EMULATOR_VERSION: u32 = 1;

/// Structural and second-order specification of an emulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmulatorSpec {
    pub output: String,
    pub active_set: Vec<usize>,
    pub basis: Vec<Term>,
    pub coefficients: Vec<f64>,
    /// Variance of the correlated residual process.
    pub sigma_u2: f64,
    /// Correlation length for each active input, in active-set order.
    pub theta: Vec<f64>,
    /// Nugget variance.
    pub sigma_w2: f64,
}

impl EmulatorSpec {
    pub fn validate(&self, dims: usize) -> Result<()> {
        let bad = |reason: String| Error::Fit {
            output: self.output.clone(),
            reason,
        };
        if !(self.sigma_u2 >= 0.0 && self.sigma_w2 >= 0.0) {
            return Err(bad(format!("negative variance ({}, {})", self.sigma_u2, self.sigma_w2)));
        }
        if self.theta.len() != self.active_set.len() || self.theta.iter().any(|t| !(*t > 0.0)) {
            return Err(bad("need one positive correlation length per active input".into()));
        }
        if self.basis.len() != self.coefficients.len() {
            return Err(bad("basis and coefficients differ in length".into()));
        }
        if self.active_set.iter().any(|&a| a >= dims) {
            return Err(bad(format!("active input index out of range for {dims} inputs")));
        }
        for t in &self.basis {
            if t.inputs().iter().any(|i| !self.active_set.contains(i)) {
                return Err(bad(format!("basis term {t:?} uses an inactive input")));
            }
        }
        Ok(())
    }

    /// Prior expectation `E[f(x)] = sum beta_j g_j(x)`.
    pub fn prior_mean(&self, x: &[f64]) -> f64 {
        eval_mean(&self.basis, &self.coefficients, x)
    }

    pub fn prior_variance(&self) -> f64 {
        self.sigma_u2 + self.sigma_w2
    }

    /// Gaussian correlation over the active inputs.
    pub fn correlation(&self, a: &[f64], b: &[f64]) -> f64 {
        let s: f64 = self
            .active_set
            .iter()
            .zip(&self.theta)
            .map(|(&i, &t)| {
                let d = (a[i] - b[i]) / t;
                d * d
            })
            .sum();
        (-s).exp()
    }
}

/// Training runs for one output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl TrainingSet {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Config(format!("{} design points but {} values", x.len(), y.len())));
        }
        if let Some(d) = x.first().map(Vec::len) {
            if x.iter().any(|r| r.len() != d) {
                return Err(Error::Config("design points differ in dimension".into()));
            }
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    /// SHA-256 over the exact bit patterns of the design and values.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.len() as u64).to_le_bytes());
        h.update((self.dims() as u64).to_le_bytes());
        for (r, y) in self.x.iter().zip(&self.y) {
            for v in r {
                h.update(v.to_bits().to_le_bytes());
            }
            h.update(y.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// A fitted emulator: specification, training data and cached factors.
#[derive(Debug, Clone)]
pub struct Emulator {
    spec: EmulatorSpec,
    train: TrainingSet,
    /// Cholesky factor of `Var[D]`, absent when there is no correlated part.
    chol: Option<Cholesky<f64, Dyn>>,
    /// `Var[D]^{-1} (D - E[D])`.
    alpha: DVector<f64>,
    /// Training inputs restricted to actives and divided by theta.
    scaled: Vec<Vec<f64>>,
}

impl Emulator {
    pub fn fit(spec: EmulatorSpec, train: TrainingSet) -> Result<Self> {
        spec.validate(train.dims().max(spec.active_set.iter().map(|a| a + 1).max().unwrap_or(0)))?;
        let n = train.len();
        let scaled: Vec<Vec<f64>> = train
            .x
            .iter()
            .map(|r| spec.active_set.iter().zip(&spec.theta).map(|(&i, &t)| r[i] / t).collect())
            .collect();
        if spec.sigma_u2 == 0.0 || n == 0 {
            return Ok(Self {
                spec,
                train,
                chol: None,
                alpha: DVector::zeros(n),
                scaled,
            });
        }
        let mut v = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            v[(i, i)] = spec.sigma_u2 + spec.sigma_w2;
            for j in 0..i {
                let c = spec.sigma_u2 * sq_exp(&scaled[i], &scaled[j]);
                v[(i, j)] = c;
                v[(j, i)] = c;
            }
        }
        let not_pd = || Error::Fit {
            output: spec.output.clone(),
            reason: "Var[D] is not positive definite; increase the nugget variance".into(),
        };
        let chol = Cholesky::new(v).ok_or_else(not_pd)?;
        // Pivots this small mean the factorisation only succeeded by round-off.
        let floor = 1e-12 * (spec.sigma_u2 + spec.sigma_w2);
        if chol.l_dirty().diagonal().iter().any(|d| d * d < floor) {
            return Err(not_pd());
        }
        let resid = DVector::from_iterator(n, train.x.iter().zip(&train.y).map(|(x, y)| y - spec.prior_mean(x)));
        let alpha = chol.solve(&resid);
        Ok(Self {
            spec,
            train,
            chol: Some(chol),
            alpha,
            scaled,
        })
    }

    pub fn spec(&self) -> &EmulatorSpec {
        &self.spec
    }

    pub fn training(&self) -> &TrainingSet {
        &self.train
    }

    pub fn output(&self) -> &str {
        &self.spec.output
    }

    pub fn prior_variance(&self) -> f64 {
        self.spec.prior_variance()
    }

    fn cross_cov(&self, x: &[f64]) -> DVector<f64> {
        let xs: Vec<f64> = self
            .spec
            .active_set
            .iter()
            .zip(&self.spec.theta)
            .map(|(&i, &t)| x[i] / t)
            .collect();
        DVector::from_iterator(
            self.scaled.len(),
            self.scaled.iter().map(|r| self.spec.sigma_u2 * sq_exp(&xs, r)),
        )
    }

    /// Adjusted expectation `E_D[f(x)]` only.
    pub fn predict_mean(&self, x: &[f64]) -> f64 {
        let m = self.spec.prior_mean(x);
        if self.chol.is_none() {
            return m;
        }
        m + self.cross_cov(x).dot(&self.alpha)
    }

    /// Adjusted expectation and variance at `x`.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let m = self.spec.prior_mean(x);
        let prior = self.spec.prior_variance();
        let Some(chol) = &self.chol else {
            return (m, prior);
        };
        let c = self.cross_cov(x);
        let mean = m + c.dot(&self.alpha);
        let mut w = c;
        chol.l_dirty().solve_lower_triangular_mut(&mut w);
        let var = (prior - w.norm_squared()).max(0.0);
        (mean, var)
    }

    /// Writes the versioned JSON representation.
    pub fn to_writer<W: Write>(&self, w: W) -> Result<()> {
        let file = EmulatorFile {
            format: EMULATOR_FORMAT.into(),
            version: EMULATOR_VERSION,
            training_digest: self.train.digest(),
            spec: self.spec.clone(),
            training: self.train.clone(),
        };
        serde_json::to_writer_pretty(w, &file)?;
        Ok(())
    }

    /// Reads and refits; fails if the stored digest does not match the data.
    pub fn from_reader<R: Read>(r: R) -> Result<Self> {
        let file: EmulatorFile = serde_json::from_reader(r)?;
        if file.format != EMULATOR_FORMAT || file.version != EMULATOR_VERSION {
            return Err(Error::Config(format!(
                "unsupported emulator file {} v{}",
                file.format, file.version
            )));
        }
        if file.training.digest() != file.training_digest {
            return Err(Error::Config(format!(
                "training data digest mismatch for emulator {}",
                file.spec.output
            )));
        }
        Self::fit(file.spec, file.training)
    }
}

/// Bayes linear adjusted expectation and variance of the emulated output at `x`.
pub fn bl_update(emulator: &Emulator, x: &[f64]) -> (f64, f64) {
    emulator.predict(x)
}

#[inline]
fn sq_exp(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
    (-s).exp()
}

#[derive(Debug, Serialize, Deserialize)]
struct EmulatorFile {
    format: String,
    version: u32,
    training_digest: String,
    spec: EmulatorSpec,
    training: TrainingSet,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_spec(sigma_w2: f64) -> EmulatorSpec {
        EmulatorSpec {
            output: "f".into(),
            active_set: vec![0],
            basis: vec![],
            coefficients: vec![],
            sigma_u2: 0.5,
            theta: vec![1.5],
            sigma_w2,
        }
    }

    fn toy_train() -> TrainingSet {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 * 1.6]).collect();
        let y = x.iter().map(|r| 0.1 * r[0] + r[0].cos()).collect();
        TrainingSet::new(x, y).unwrap()
    }

    #[test]
    fn interpolates_training_points_without_nugget() {
        let emu = Emulator::fit(toy_spec(0.0), toy_train()).unwrap();
        for (x, y) in emu.training().x.iter().zip(&emu.training().y) {
            let (m, v) = emu.predict(x);
            assert!((m - y).abs() < 1e-10);
            assert!(v < 1e-10);
        }
    }

    #[test]
    fn far_points_revert_to_prior() {
        let emu = Emulator::fit(toy_spec(0.01), toy_train()).unwrap();
        let (m, v) = emu.predict(&[500.0]);
        assert!(m.abs() < 1e-6);
        assert!((v - 0.51).abs() < 1e-6);
    }

    #[test]
    fn variance_bounded_by_prior() {
        let emu = Emulator::fit(toy_spec(0.05), toy_train()).unwrap();
        for k in 0..200 {
            let (_, v) = emu.predict(&[k as f64 * 0.06]);
            assert!(v <= emu.prior_variance() + 1e-10);
        }
    }

    #[test]
    fn linear_emulator_has_constant_variance() {
        let spec = EmulatorSpec {
            output: "lin".into(),
            active_set: vec![0],
            basis: vec![Term::Constant, Term::Linear { i: 0 }],
            coefficients: vec![1.0, 2.0],
            sigma_u2: 0.0,
            theta: vec![2.0],
            sigma_w2: 0.3,
        };
        let emu = Emulator::fit(spec, toy_train()).unwrap();
        assert_eq!(emu.predict(&[0.5]), (2.0, 0.3));
    }

    #[test]
    fn duplicate_points_without_nugget_fail() {
        let t = TrainingSet::new(vec![vec![1.0], vec![1.0]], vec![0.0, 0.0]).unwrap();
        let err = Emulator::fit(toy_spec(0.0), t).unwrap_err().to_string();
        assert!(err.contains("nugget"), "{err}");
    }

    #[test]
    fn rejects_inactive_basis_term() {
        let mut s = toy_spec(0.0);
        s.basis = vec![Term::Linear { i: 1 }];
        s.coefficients = vec![1.0];
        assert!(s.validate(2).is_err());
    }

    #[test]
    fn json_roundtrip_preserves_predictions() {
        let emu = Emulator::fit(toy_spec(0.02), toy_train()).unwrap();
        let mut buf = Vec::new();
        emu.to_writer(&mut buf).unwrap();
        let back = Emulator::from_reader(buf.as_slice()).unwrap();
        assert_eq!(back.spec(), emu.spec());
        assert_eq!(back.predict(&[3.3]), emu.predict(&[3.3]));
        let text = String::from_utf8(buf).unwrap().replace("\"y\": [\n      1.0", "\"y\": [\n      1.5");
        assert!(Emulator::from_reader(text.as_bytes()).is_err());
    }
}
