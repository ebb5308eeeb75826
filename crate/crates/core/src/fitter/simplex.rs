//! Nelder-Mead simplex, the derivative-free fallback.

use super::lm::{sum_sq, Minimum, StopRule};
use crate::error::Result;

pub fn minimize<F>(f: F, x0: &[f64], rule: StopRule) -> Result<Minimum>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x0.len();
    let cost = |x: &[f64]| -> Result<f64> {
        let c = sum_sq(&f(x)?);
        Ok(if c.is_finite() { c } else { f64::INFINITY })
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), cost(x0)?));
    for j in 0..n {
        let mut v = x0.to_vec();
        v[j] += if v[j].abs() > 1e-3 {
            0.1 * v[j].abs()
        } else {
            0.1
        };
        let c = cost(&v)?;
        simplex.push((v, c));
    }

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        history.push(simplex[0].1);
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = (worst - best).abs() / best.abs().max(f64::MIN_POSITIVE);
        let size = simplex[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        if best == 0.0 || spread < rule.rel_decrease || size < rule.step_norm {
            converged = true;
            break;
        }
        if iterations >= rule.max_iterations {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|(v, _)| v[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = along(1.0);
        let fr = cost(&reflected)?;
        if fr < simplex[0].1 {
            let expanded = along(2.0);
            let fe = cost(&expanded)?;
            simplex[n] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (t, reference) = if fr < simplex[n].1 {
                (0.5, fr)
            } else {
                (-0.5, simplex[n].1)
            };
            let contracted = along(t);
            let fc = cost(&contracted)?;
            if fc < reference {
                simplex[n] = (contracted, fc);
            } else {
                let anchor = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let v: Vec<f64> = entry
                        .0
                        .iter()
                        .zip(&anchor)
                        .map(|(x, a)| a + 0.5 * (x - a))
                        .collect();
                    let c = cost(&v)?;
                    *entry = (v, c);
                }
            }
        }
    }

    let (x, objective) = simplex.swap_remove(0);
    Ok(Minimum {
        x,
        objective,
        iterations,
        converged,
        history,
    })
}
