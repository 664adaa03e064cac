//! Small dense least-squares solvers: a linear solve through SVD and a
//! Levenberg–Marquardt loop for problems with a handful of parameters.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values below `RANK_TOLERANCE · σ_max` count as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Solves `min ‖A x − b‖₂`, rejecting rank-deficient designs.
pub fn linear_least_squares(design: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= RANK_TOLERANCE * smax {
        return Err(Error::RankDeficient);
    }
    svd.solve(rhs, 0.0)
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// Exponent `k` of the power law `y ∝ x^k` fitted on log–log axes.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument(
            "power-law fit needs at least two (x, y) pairs of equal length".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument(
            "power-law fit needs positive finite values".into(),
        ));
    }
    let design = DMatrix::from_fn(x.len(), 2, |i, j| if j == 0 { 1.0 } else { x[i].ln() });
    let rhs = DVector::from_iterator(y.len(), y.iter().map(|v| v.ln()));
    Ok(linear_least_squares(&design, &rhs)?[1])
}

/// A model evaluated at fixed sample points.
pub trait Residuals {
    fn n_params(&self) -> usize;
    fn n_points(&self) -> usize;
    /// Residuals `model(p) − data` into `out`.
    fn residuals(&self, params: &[f64], out: &mut [f64]);
    /// Row-major Jacobian `∂r_i/∂p_j` into `jac` (n_points × n_params).
    fn jacobian(&self, params: &[f64], jac: &mut DMatrix<f64>);
}

#[derive(Debug, Clone)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the relative parameter step falls below this.
    pub step_tolerance: f64,
    /// Stop when the relative cost decrease falls below this.
    pub cost_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tolerance: 1e-15,
            cost_tolerance: 1e-30,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmSolution {
    pub params: Vec<f64>,
    /// Half the sum of squared residuals.
    pub cost: f64,
    pub residuals: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub iterations: usize,
}

impl LmSolution {
    /// Heteroscedasticity-consistent ("sandwich") covariance of the
    /// parameters, `(JᵀJ)⁻¹ Jᵀ diag(r²) J (JᵀJ)⁻¹ · n/(n−p)`.
    pub fn sandwich_covariance(&self) -> Option<DMatrix<f64>> {
        let j = &self.jacobian;
        let (n, p) = j.shape();
        if n <= p {
            return None;
        }
        let bread = (j.transpose() * j).try_inverse()?;
        let mut meat = DMatrix::zeros(p, p);
        for (i, r) in self.residuals.iter().enumerate() {
            let row = j.row(i);
            meat += row.transpose() * row * (r * r);
        }
        Some(&bread * meat * &bread * (n as f64 / (n - p) as f64))
    }

    /// Classical covariance `s² (JᵀJ)⁻¹` with `s² = Σr²/(n−p)`.
    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        let j = &self.jacobian;
        let (n, p) = j.shape();
        if n <= p {
            return None;
        }
        let s2 = 2.0 * self.cost / (n - p) as f64;
        (j.transpose() * j).try_inverse().map(|m| m * s2)
    }
}

fn half_sum_sq(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|x| x * x).sum::<f64>()
}

/// Levenberg–Marquardt with Marquardt's diagonal scaling.
pub fn levenberg_marquardt<M: Residuals>(
    model: &M,
    initial: &[f64],
    opts: &LmOptions,
) -> Result<LmSolution> {
    let n = model.n_points();
    let p = model.n_params();
    assert_eq!(initial.len(), p);
    if n < p {
        return Err(Error::InvalidArgument(format!(
            "{n} points cannot determine {p} parameters"
        )));
    }

    let mut params = initial.to_vec();
    let mut r = vec![0.0; n];
    let mut jac = DMatrix::zeros(n, p);
    model.residuals(&params, &mut r);
    let mut cost = half_sum_sq(&r);
    if !cost.is_finite() {
        return Err(Error::NonConvergence {
            iterations: 0,
            cost,
            last_step: f64::NAN,
        });
    }
    let mut lambda = 1e-3;
    let mut trial = vec![0.0; p];
    let mut r_trial = vec![0.0; n];
    let mut last_step = f64::INFINITY;

    for iter in 1..=opts.max_iterations {
        model.jacobian(&params, &mut jac);
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);

        // Inner loop: raise λ until the step lowers the cost.
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for k in 0..p {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let step = match a.clone().cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => match a.lu().solve(&(-&g)) {
                    Some(s) => s,
                    None => {
                        lambda *= 10.0;
                        continue;
                    }
                },
            };
            for k in 0..p {
                trial[k] = params[k] + step[k];
            }
            model.residuals(&trial, &mut r_trial);
            let c_trial = half_sum_sq(&r_trial);
            if c_trial.is_finite() && c_trial <= cost {
                let rel_step = step
                    .iter()
                    .zip(params.iter())
                    .map(|(s, x)| s.abs() / x.abs().max(1e-300))
                    .fold(0.0, f64::max);
                let decrease = cost - c_trial;
                params.copy_from_slice(&trial);
                std::mem::swap(&mut r, &mut r_trial);
                let old_cost = cost;
                cost = c_trial;
                last_step = rel_step;
                lambda = (lambda * 0.3).max(1e-12);
                accepted = true;
                if rel_step < opts.step_tolerance
                    || decrease <= opts.cost_tolerance * old_cost
                    || cost == 0.0
                {
                    model.jacobian(&params, &mut jac);
                    return Ok(LmSolution {
                        params,
                        cost,
                        residuals: r,
                        jacobian: jac,
                        iterations: iter,
                    });
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No descent direction left: we sit at a minimum to working
            // precision.
            model.jacobian(&params, &mut jac);
            return Ok(LmSolution {
                params,
                cost,
                residuals: r,
                jacobian: jac,
                iterations: iter,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        cost,
        last_step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_exponent() {
        let x = [1e2, 1e4, 1e6];
        let y: Vec<f64> = x.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        assert!((loglog_slope(&x, &y).unwrap() + 0.5).abs() < 1e-12);
        assert!(loglog_slope(&x, &[1.0, 0.0, 2.0]).is_err());
        assert!(loglog_slope(&[1.0], &[1.0]).is_err());
    }

    struct Exponential {
        t: Vec<f64>,
        y: Vec<f64>,
    }

    impl Residuals for Exponential {
        fn n_params(&self) -> usize {
            2
        }
        fn n_points(&self) -> usize {
            self.t.len()
        }
        fn residuals(&self, p: &[f64], out: &mut [f64]) {
            for i in 0..self.t.len() {
                out[i] = p[0] * (-p[1] * self.t[i]).exp() - self.y[i];
            }
        }
        fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>) {
            for i in 0..self.t.len() {
                let e = (-p[1] * self.t[i]).exp();
                jac[(i, 0)] = e;
                jac[(i, 1)] = -p[0] * self.t[i] * e;
            }
        }
    }

    #[test]
    fn recovers_exponential() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y = t.iter().map(|x| 2.5 * (-0.7 * x).exp()).collect();
        let m = Exponential { t, y };
        let sol = levenberg_marquardt(&m, &[1.0, 0.2], &LmOptions::default()).unwrap();
        assert!((sol.params[0] - 2.5).abs() < 1e-12);
        assert!((sol.params[1] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn linear_rank_check() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let b = DVector::from_column_slice(&[1.0, 2.0, 3.0]);
        assert_eq!(linear_least_squares(&a, &b), Err(Error::RankDeficient));
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let b = DVector::from_column_slice(&[1.0, 3.0, 5.0]);
        let x = linear_least_squares(&a, &b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
    }
}
