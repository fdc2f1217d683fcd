//! Linear, polynomial, RBF and sigmoid kernels.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Linear,
    Polynomial,
    Rbf,
    Sigmoid,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Linear => "linear",
            KernelFamily::Polynomial => "poly",
            KernelFamily::Rbf => "rbf",
            KernelFamily::Sigmoid => "sigmoid",
        }
    }
}

/// Kernel configuration. A missing `gamma` is resolved from training data by
/// [`KernelSpec::resolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub gamma: Option<f64>,
    pub degree: u32,
    pub coef: f64,
}

impl KernelSpec {
    pub fn linear() -> Self {
        Self::of(KernelFamily::Linear)
    }

    pub fn rbf() -> Self {
        Self::of(KernelFamily::Rbf)
    }

    pub fn of(family: KernelFamily) -> Self {
        KernelSpec {
            family,
            gamma: None,
            degree: 3,
            coef: 0.0,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    /// Fixes gamma, defaulting to `1 / (q * var(X))` where `var` is the
    /// population variance over every entry of the training matrix. A zero
    /// variance falls back to `1 / q`.
    pub fn resolve(&self, train: ArrayView2<'_, f64>) -> Result<Kernel> {
        let gamma = match self.gamma {
            Some(g) => g,
            None => auto_gamma(train),
        };
        Kernel::new(self.family, gamma, self.degree, self.coef)
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::rbf()
    }
}

pub fn auto_gamma(train: ArrayView2<'_, f64>) -> f64 {
    let q = train.ncols().max(1) as f64;
    let len = train.len();
    if len == 0 {
        return 1.0 / q;
    }
    let mean = train.sum() / len as f64;
    let var = train.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / len as f64;
    if var > 0.0 && var.is_finite() {
        1.0 / (q * var)
    } else {
        1.0 / q
    }
}

/// `family[:gamma=..][:degree=..][:coef=..]`
impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.family.name())?;
        if let Some(g) = self.gamma {
            write!(f, ":gamma={}", crate::data::fmt_f64(g))?;
        }
        if self.family == KernelFamily::Polynomial {
            write!(f, ":degree={}", self.degree)?;
        }
        if matches!(self.family, KernelFamily::Polynomial | KernelFamily::Sigmoid) {
            write!(f, ":coef={}", crate::data::fmt_f64(self.coef))?;
        }
        Ok(())
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let family = match parts.next().unwrap_or("").trim() {
            "linear" => KernelFamily::Linear,
            "poly" | "polynomial" => KernelFamily::Polynomial,
            "rbf" | "gaussian" => KernelFamily::Rbf,
            "sigmoid" => KernelFamily::Sigmoid,
            other => return Err(Error::validation(format!("unknown kernel family {other:?}"))),
        };
        let mut spec = KernelSpec::of(family);
        for part in parts {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::validation(format!("kernel parameter {part:?} lacks '='")))?;
            let bad = || Error::validation(format!("bad value for {key}: {value:?}"));
            match key.trim() {
                "gamma" => spec.gamma = Some(value.trim().parse().map_err(|_| bad())?),
                "degree" => spec.degree = value.trim().parse().map_err(|_| bad())?,
                "coef" | "coef0" => spec.coef = value.trim().parse().map_err(|_| bad())?,
                other => {
                    return Err(Error::validation(format!("unknown kernel parameter {other:?}")))
                }
            }
        }
        if family == KernelFamily::Linear && spec.gamma.is_some() {
            return Err(Error::validation("the linear kernel takes no gamma"));
        }
        // Validate what is known now; gamma may still be resolved later.
        Kernel::new(family, spec.gamma.unwrap_or(1.0), spec.degree, spec.coef)?;
        Ok(spec)
    }
}

/// A kernel with every hyperparameter fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    Polynomial { gamma: f64, degree: u32, coef: f64 },
    Rbf { gamma: f64 },
    Sigmoid { gamma: f64, coef: f64 },
}

impl Kernel {
    /// Rejects `gamma <= 0` (gamma = 0 would make RBF constant) and
    /// `degree = 0`.
    pub fn new(family: KernelFamily, gamma: f64, degree: u32, coef: f64) -> Result<Kernel> {
        if family != KernelFamily::Linear && !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::validation(format!("gamma must be positive, got {gamma}")));
        }
        if !coef.is_finite() {
            return Err(Error::validation("coef must be finite"));
        }
        Ok(match family {
            KernelFamily::Linear => Kernel::Linear,
            KernelFamily::Polynomial => {
                if degree < 1 {
                    return Err(Error::validation("polynomial degree must be at least 1"));
                }
                Kernel::Polynomial { gamma, degree, coef }
            }
            KernelFamily::Rbf => Kernel::Rbf { gamma },
            KernelFamily::Sigmoid => Kernel::Sigmoid { gamma, coef },
        })
    }

    pub fn family(&self) -> KernelFamily {
        match self {
            Kernel::Linear => KernelFamily::Linear,
            Kernel::Polynomial { .. } => KernelFamily::Polynomial,
            Kernel::Rbf { .. } => KernelFamily::Rbf,
            Kernel::Sigmoid { .. } => KernelFamily::Sigmoid,
        }
    }

    pub fn spec(&self) -> KernelSpec {
        match *self {
            Kernel::Linear => KernelSpec::linear(),
            Kernel::Polynomial { gamma, degree, coef } => KernelSpec {
                family: KernelFamily::Polynomial,
                gamma: Some(gamma),
                degree,
                coef,
            },
            Kernel::Rbf { gamma } => KernelSpec::rbf().with_gamma(gamma),
            Kernel::Sigmoid { gamma, coef } => KernelSpec {
                family: KernelFamily::Sigmoid,
                gamma: Some(gamma),
                degree: 3,
                coef,
            },
        }
    }

    /// Positive semi-definite for every input set.
    pub fn is_psd(&self) -> bool {
        match self {
            Kernel::Linear | Kernel::Rbf { .. } => true,
            Kernel::Polynomial { coef, .. } => *coef >= 0.0,
            Kernel::Sigmoid { .. } => false,
        }
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        if x.len() != z.len() || x.is_empty() {
            return Err(Error::validation(format!(
                "kernel arguments have lengths {} and {}",
                x.len(),
                z.len()
            )));
        }
        Ok(self.eval_unchecked(x, z))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(x, z),
            Kernel::Polynomial { gamma, degree, coef } => {
                (gamma * dot(x, z) + coef).powi(degree as i32)
            }
            Kernel::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
            Kernel::Sigmoid { gamma, coef } => (gamma * dot(x, z) + coef).tanh(),
        }
    }

    /// Entry `(i, j)` is `K(a_i, b_j)`.
    pub fn matrix(&self, a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if a.ncols() != b.ncols() {
            return Err(Error::validation(format!(
                "kernel matrix operands have {} and {} columns",
                a.ncols(),
                b.ncols()
            )));
        }
        let a = a.as_standard_layout();
        let b = b.as_standard_layout();
        let mut out = Array2::zeros((a.nrows(), b.nrows()));
        for (i, ra) in a.outer_iter().enumerate() {
            let ra = ra.as_slice().expect("standard layout");
            for (j, rb) in b.outer_iter().enumerate() {
                out[[i, j]] = self.eval_unchecked(ra, rb.as_slice().expect("standard layout"));
            }
        }
        Ok(out)
    }

    /// Symmetric `K(a_i, a_j)`, computing each pair once.
    pub fn gram(&self, a: ArrayView2<'_, f64>) -> Array2<f64> {
        let a = a.as_standard_layout();
        let m = a.nrows();
        let rows: Vec<&[f64]> = a
            .outer_iter()
            .map(|r| r.to_slice().expect("standard layout"))
            .collect();
        let mut out = Array2::zeros((m, m));
        for i in 0..m {
            for j in i..m {
                let v = self.eval_unchecked(rows[i], rows[j]);
                out[[i, j]] = v;
                out[[j, i]] = v;
            }
        }
        out
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.spec().fmt(f)
    }
}

#[inline]
fn dot(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a * b).sum()
}

pub fn kernel_eval(kernel: &Kernel, x: &[f64], z: &[f64]) -> Result<f64> {
    kernel.eval(x, z)
}

pub fn kernel_matrix(
    kernel: &Kernel,
    a: ArrayView2<'_, f64>,
    b: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    kernel.matrix(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn reference_values() {
        let rbf = Kernel::new(KernelFamily::Rbf, 0.37, 3, 0.0).unwrap();
        assert_eq!(rbf.eval(&[1.5, -2.0], &[1.5, -2.0]).unwrap(), 1.0);
        assert_eq!(Kernel::Linear.eval(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        let poly = Kernel::new(KernelFamily::Polynomial, 1.0, 2, 1.0).unwrap();
        assert_eq!(poly.eval(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 4.0);
        let sig = Kernel::new(KernelFamily::Sigmoid, 0.5, 3, -1.0).unwrap();
        assert_abs_diff_eq!(sig.eval(&[2.0], &[3.0]).unwrap(), 2.0f64.tanh(), epsilon = 1e-15);
    }

    #[test]
    fn length_mismatch() {
        assert!(Kernel::Linear.eval(&[1.0], &[1.0, 2.0]).is_err());
        let a = Array2::<f64>::zeros((2, 3));
        let b = Array2::<f64>::zeros((2, 2));
        assert!(Kernel::Linear.matrix(a.view(), b.view()).is_err());
    }

    #[test]
    fn invalid_hyperparameters() {
        assert!(Kernel::new(KernelFamily::Rbf, 0.0, 3, 0.0).is_err());
        assert!(Kernel::new(KernelFamily::Sigmoid, -1.0, 3, 0.0).is_err());
        assert!(Kernel::new(KernelFamily::Polynomial, 1.0, 0, 0.0).is_err());
        assert!(Kernel::new(KernelFamily::Linear, 0.0, 0, 0.0).is_ok());
    }

    #[test]
    fn linear_matrix_is_product() {
        let a = array![[1.0, 2.0], [3.0, -1.0], [0.5, 0.5]];
        let b = array![[2.0, 0.0], [1.0, 1.0]];
        let k = Kernel::Linear.matrix(a.view(), b.view()).unwrap();
        let expected = a.dot(&b.t());
        for (x, y) in k.iter().zip(expected.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn rbf_gram_unit_diagonal_and_symmetric() {
        let a = array![[1.0, 2.0], [3.0, -1.0], [0.5, 0.5]];
        let k = Kernel::Rbf { gamma: 0.8 }.gram(a.view());
        for i in 0..3 {
            assert_eq!(k[[i, i]], 1.0);
            for j in 0..3 {
                assert_eq!(k[[i, j]], k[[j, i]]);
            }
        }
        assert_eq!(k, Kernel::Rbf { gamma: 0.8 }.matrix(a.view(), a.view()).unwrap());
    }

    #[test]
    fn spec_text_round_trip() {
        for text in ["linear", "rbf", "rbf:gamma=0.25", "poly:degree=2:coef=1", "sigmoid:gamma=0.5:coef=-1"] {
            let spec: KernelSpec = text.parse().unwrap();
            let again: KernelSpec = spec.to_string().parse().unwrap();
            assert_eq!(spec, again, "{text}");
        }
        assert!("rbf:gamma=0".parse::<KernelSpec>().is_err());
        assert!("cosine".parse::<KernelSpec>().is_err());
        assert!("rbf:width=2".parse::<KernelSpec>().is_err());
    }

    #[test]
    fn auto_gamma_matches_definition() {
        let x = array![[1.0, 3.0], [2.0, 5.0]];
        // entries 1,3,2,5: mean 2.75, population variance 2.1875
        assert_abs_diff_eq!(auto_gamma(x.view()), 1.0 / (2.0 * 2.1875), epsilon = 1e-15);
        assert_eq!(auto_gamma(Array2::from_elem((3, 4), 2.0).view()), 0.25);
    }
}
