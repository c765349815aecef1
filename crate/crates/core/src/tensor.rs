//! Symmetric tensors stored as weighted sums of rank-one powers.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dense::{DenseSymmetricTensor, DEFAULT_DENSE_BUDGET};
use crate::error::{Error, Result};

/// Anything that can evaluate the homogeneous form `A x^m`.
pub trait HomogeneousForm {
    fn order(&self) -> usize;
    fn dim(&self) -> usize;
    fn form(&self, x: &[f64]) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneTerm {
    pub weight: f64,
    pub vector: Vec<f64>,
}

/// The symmetric tensor `sum_k w_k u_k^{(x) m}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneSum {
    order: usize,
    dim: usize,
    terms: Vec<RankOneTerm>,
}

impl RankOneSum {
    pub fn new(order: usize, dim: usize, terms: Vec<RankOneTerm>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput("order must be positive".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        for t in &terms {
            if t.vector.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: t.vector.len(),
                });
            }
            if !t.weight.is_finite() || t.vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("non-finite term".into()));
            }
        }
        Ok(Self { order, dim, terms })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[RankOneTerm] {
        &self.terms
    }

    /// Same terms with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| RankOneTerm {
                weight: t.weight * factor,
                vector: t.vector.clone(),
            })
            .collect();
        Self {
            order: self.order,
            dim: self.dim,
            terms,
        }
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `A x^m`, computed as `sum_k w_k (u_k . x)^m`.
    pub fn eval_poly(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        let m = self.order as i32;
        Ok(self
            .terms
            .iter()
            .map(|t| t.weight * dot(&t.vector, x).powi(m))
            .sum())
    }

    /// The vector `A x^{m-1}`; equals `1/m` times the gradient of `A x^m`.
    pub fn eval_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let m = self.order as i32;
        let mut out = vec![0.0; self.dim];
        for t in &self.terms {
            let c = t.weight * dot(&t.vector, x).powi(m - 1);
            if c != 0.0 {
                for (o, u) in out.iter_mut().zip(&t.vector) {
                    *o += c * u;
                }
            }
        }
        Ok(out)
    }

    /// The matrix `A x^{m-2}`; the Hessian of `A x^m` is `m(m-1)` times this.
    pub fn eval_hess(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_len(x)?;
        if self.order < 2 {
            return Err(Error::InvalidInput("Hessian needs order >= 2".into()));
        }
        let m = self.order as i32;
        let n = self.dim;
        let mut h = DMatrix::zeros(n, n);
        for t in &self.terms {
            let c = t.weight * dot(&t.vector, x).powi(m - 2);
            if c == 0.0 {
                continue;
            }
            for i in 0..n {
                let ci = c * t.vector[i];
                if ci == 0.0 {
                    continue;
                }
                for j in 0..n {
                    h[(i, j)] += ci * t.vector[j];
                }
            }
        }
        Ok(h)
    }

    /// Dense form under the default entry budget.
    pub fn materialize(&self) -> Result<DenseSymmetricTensor<f64>> {
        self.materialize_with_budget(DEFAULT_DENSE_BUDGET)
    }

    pub fn materialize_with_budget(&self, budget: u64) -> Result<DenseSymmetricTensor<f64>> {
        DenseSymmetricTensor::from_fn(self.order, self.dim, budget, |idx| {
            self.terms
                .iter()
                .map(|t| t.weight * idx.iter().map(|&i| t.vector[i]).product::<f64>())
                .sum()
        })
    }

    /// Dense form in integer arithmetic. Fails with [`Error::NotInteger`]
    /// unless every weight and component is an integer.
    pub fn materialize_exact(&self, budget: u64) -> Result<DenseSymmetricTensor<i64>> {
        let as_int = |v: f64| -> Result<i64> {
            if v.fract() == 0.0 && v.abs() < 9.0e15 {
                Ok(v as i64)
            } else {
                Err(Error::NotInteger)
            }
        };
        let terms = self
            .terms
            .iter()
            .map(|t| {
                Ok((
                    as_int(t.weight)?,
                    t.vector
                        .iter()
                        .map(|&v| as_int(v))
                        .collect::<Result<Vec<_>>>()?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        DenseSymmetricTensor::from_fn(self.order, self.dim, budget, |idx| {
            terms
                .iter()
                .map(|(w, u)| w * idx.iter().map(|&i| u[i]).product::<i64>())
                .sum()
        })
    }
}

impl HomogeneousForm for RankOneSum {
    fn order(&self) -> usize {
        self.order
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn form(&self, x: &[f64]) -> Result<f64> {
        self.eval_poly(x)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Shortest round-trip text for a real, in exponent form outside `[1e-4, 1e15)`.
pub fn format_real(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// `(sum |x_i|^m)^{1/m}`, scaled by the largest magnitude to avoid underflow.
pub fn m_norm(x: &[f64], m: usize) -> f64 {
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let s: f64 = x.iter().map(|v| (v.abs() / scale).powi(m as i32)).sum();
    scale * s.powf(1.0 / m as f64)
}

/// Componentwise power `x^{[k]}`.
pub(crate) fn pow_vec(x: &[f64], k: usize) -> Vec<f64> {
    x.iter().map(|v| v.powi(k as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn all_ones_square() {
        let t = RankOneSum::new(
            2,
            2,
            vec![RankOneTerm {
                weight: 1.0,
                vector: vec![1.0, 1.0],
            }],
        )
        .unwrap();
        assert_eq!(t.eval_poly(&[1.0, 1.0]).unwrap(), 4.0);
        assert_eq!(t.eval_grad(&[1.0, 1.0]).unwrap(), vec![2.0, 2.0]);
        assert_eq!(t.eval_poly(&[0.0, 0.0]).unwrap(), 0.0);
        let d = t.materialize().unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(*d.get(&[i, j]), 1.0);
            }
        }
    }

    #[test]
    fn diagonal_gradient_is_cubes() {
        let t = RankOneSum::new(
            4,
            2,
            vec![
                RankOneTerm {
                    weight: 1.0,
                    vector: unit(2, 0),
                },
                RankOneTerm {
                    weight: 1.0,
                    vector: unit(2, 1),
                },
            ],
        )
        .unwrap();
        let (a, b) = (0.7, -1.3);
        let g = t.eval_grad(&[a, b]).unwrap();
        assert_relative_eq!(g[0], a * a * a, epsilon = 1e-15);
        assert_relative_eq!(g[1], b * b * b, epsilon = 1e-15);
    }

    #[test]
    fn rejects_wrong_length() {
        let t = RankOneSum::new(2, 3, vec![]).unwrap();
        assert!(matches!(
            t.eval_poly(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 1
            })
        ));
        assert!(t.eval_grad(&[1.0, 2.0]).is_err());
        assert!(RankOneSum::new(
            2,
            3,
            vec![RankOneTerm {
                weight: 1.0,
                vector: vec![1.0]
            }]
        )
        .is_err());
    }

    #[test]
    fn real_formatting() {
        assert_eq!(format_real(0.25), "0.25");
        assert_eq!(format_real(5.4e-11), "5.4e-11");
        assert_eq!(format_real(-2e20), "-2e20");
        assert_eq!(format_real(0.0), "0");
        assert_eq!(format_real(1.0), "1");
    }

    #[test]
    fn m_norm_values() {
        assert_relative_eq!(m_norm(&[1.0, -1.0], 4), 2f64.powf(0.25), epsilon = 1e-15);
        assert_eq!(m_norm(&[0.0, 0.0, 0.0], 4), 0.0);
        assert_relative_eq!(
            m_norm(&[1.0, 0.5, 0.25], 2),
            21f64.sqrt() / 4.0,
            epsilon = 1e-15
        );
        assert!(m_norm(&[1e-200, 0.0], 8) > 0.0);
    }

    #[test]
    fn exact_path_rejects_fractions() {
        let t = RankOneSum::new(
            2,
            1,
            vec![RankOneTerm {
                weight: 0.5,
                vector: vec![1.0],
            }],
        )
        .unwrap();
        assert!(matches!(
            t.materialize_exact(DEFAULT_DENSE_BUDGET),
            Err(Error::NotInteger)
        ));
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let t = RankOneSum::new(
            4,
            3,
            vec![
                RankOneTerm {
                    weight: 1.5,
                    vector: vec![1.0, -0.5, 0.3],
                },
                RankOneTerm {
                    weight: -0.7,
                    vector: vec![0.2, 0.9, -1.1],
                },
            ],
        )
        .unwrap();
        let x = [0.4, -0.8, 1.2];
        let h = t.eval_hess(&x).unwrap();
        let step = 1e-6;
        for j in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += step;
            xm[j] -= step;
            let gp = t.eval_grad(&xp).unwrap();
            let gm = t.eval_grad(&xm).unwrap();
            for i in 0..3 {
                // d/dx_j of A x^{m-1} = (m-1) A x^{m-2}
                let fd = (gp[i] - gm[i]) / (2.0 * step);
                assert_relative_eq!(fd, 3.0 * h[(i, j)], epsilon = 1e-7, max_relative = 1e-6);
            }
        }
    }
}
