//! Levenberg-Marquardt with a central-difference Jacobian.

use crate::error::Result;

#[derive(Debug, Clone, Copy)]
pub struct StopRule {
    pub rel_decrease: f64,
    pub step_norm: f64,
    pub max_iterations: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            rel_decrease: 1e-10,
            step_norm: 1e-12,
            max_iterations: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    /// Sum of squared residuals at `x`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every iteration, starting with the initial point.
    pub history: Vec<f64>,
}

pub(crate) fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Central differences with step `1e-6 · max(|x_j|, 1)`.
pub fn jacobian<F>(f: &F, x: &[f64]) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut cols = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        let h = 1e-6 * x[j].abs().max(1.0);
        probe[j] = x[j] + h;
        let plus = f(&probe)?;
        probe[j] = x[j] - h;
        let minus = f(&probe)?;
        probe[j] = x[j];
        cols.push(
            plus.iter()
                .zip(&minus)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect(),
        );
    }
    Ok(cols)
}

/// Solves the dense symmetric system `a · x = b` by Gaussian elimination
/// with partial pivoting. `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < f64::MIN_POSITIVE {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Minimizes `Σ r_i(x)²`.
pub fn minimize<F>(f: F, x0: &[f64], rule: StopRule) -> Result<Minimum>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = f(&x)?;
    let mut cost = sum_sq(&r);
    let mut history = vec![cost];
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = cost == 0.0;

    let mut need_jacobian = true;
    let mut jtj = vec![vec![0.0; n]; n];
    let mut jtr = vec![0.0; n];

    while !converged && iterations < rule.max_iterations {
        iterations += 1;
        if need_jacobian {
            let cols = jacobian(&f, &x)?;
            for i in 0..n {
                jtr[i] = cols[i].iter().zip(&r).map(|(a, b)| a * b).sum();
                for k in 0..n {
                    jtj[i][k] = cols[i].iter().zip(&cols[k]).map(|(a, b)| a * b).sum();
                }
            }
            need_jacobian = false;
        }

        let mut damped = jtj.clone();
        for (i, row) in damped.iter_mut().enumerate() {
            row[i] += lambda * jtj[i][i].max(1e-12);
        }
        let rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();
        let Some(step) = solve(damped, rhs) else {
            lambda *= 10.0;
            history.push(cost);
            continue;
        };
        let step_norm = step.iter().map(|v| v * v).sum::<f64>().sqrt();
        let trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
        let trial_r = f(&trial)?;
        let trial_cost = sum_sq(&trial_r);

        if trial_cost.is_finite() && trial_cost < cost {
            let decrease = (cost - trial_cost) / cost;
            x = trial;
            r = trial_r;
            cost = trial_cost;
            lambda = (lambda / 10.0).max(1e-12);
            need_jacobian = true;
            if decrease < rule.rel_decrease || step_norm < rule.step_norm || cost == 0.0 {
                converged = true;
            }
        } else {
            lambda *= 10.0;
            if step_norm < rule.step_norm || lambda > 1e16 {
                converged = step_norm < rule.step_norm;
                history.push(cost);
                break;
            }
        }
        history.push(cost);
    }

    Ok(Minimum {
        x,
        objective: cost,
        iterations,
        converged,
        history,
    })
}
