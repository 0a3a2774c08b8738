//! Small numerical kernels shared by the solvers and fitters: angle
//! wrapping, circular statistics, a dense Levenberg–Marquardt, Nelder–Mead
//! and golden-section search.

use nalgebra::{DMatrix, DVector};
use std::f64::consts::{PI, TAU};

/// Reduce an angle to `[0, 2π)`.
pub fn wrap_tau(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r + 0.0
    }
}

/// Reduce an angle to `(-π, π]`.
pub fn wrap_pi(angle: f64) -> f64 {
    let r = wrap_tau(angle);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Circular mean of a set of angles. `None` when the resultant vector
/// vanishes (no preferred direction) or the input is empty.
pub fn circular_mean(angles: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (mut s, mut c, mut n) = (0.0, 0.0, 0usize);
    for a in angles {
        s += a.sin();
        c += a.cos();
        n += 1;
    }
    if n == 0 || s.hypot(c) < 1e-12 * n as f64 {
        return None;
    }
    Some(wrap_tau(s.atan2(c)))
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the relative cost decrease falls below this.
    pub cost_tolerance: f64,
    /// Stop when the relative step size falls below this.
    pub step_tolerance: f64,
    /// Relative forward-difference step for the Jacobian.
    pub fd_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 200,
            cost_tolerance: 1e-15,
            step_tolerance: 1e-12,
            fd_step: 1e-7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmReport {
    pub x: DVector<f64>,
    /// Sum of squared residuals at `x`.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Levenberg–Marquardt with a forward-difference Jacobian and Nielsen's
/// damping update. `residual` must return a vector of fixed length.
pub fn levenberg_marquardt<F>(mut residual: F, x0: DVector<f64>, opts: LmOptions) -> LmReport
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    let n = x0.len();
    let mut x = x0;
    let mut r = residual(&x);
    let mut cost = r.norm_squared();
    let mut lambda = -1.0;
    let mut nu = 2.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let m = r.len();
        let mut jac = DMatrix::<f64>::zeros(m, n);
        for k in 0..n {
            let h = opts.fd_step * (1.0 + x[k].abs());
            let mut xp = x.clone();
            xp[k] += h;
            let rp = residual(&xp);
            jac.set_column(k, &((rp - &r) / h));
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let grad = &jt * &r;
        if lambda < 0.0 {
            let max_diag = (0..n).map(|k| jtj[(k, k)]).fold(0.0, f64::max);
            lambda = 1e-3 * max_diag.max(1e-300);
        }

        let mut accepted = false;
        for _ in 0..40 {
            let mut damped = jtj.clone();
            for k in 0..n {
                damped[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&(-&grad)) else {
                lambda *= nu;
                nu *= 2.0;
                continue;
            };
            let trial = &x + &step;
            let r_trial = residual(&trial);
            let cost_trial = r_trial.norm_squared();
            if cost_trial.is_finite() && cost_trial < cost {
                let predicted = -(step.dot(&grad) * 2.0 + (&jac * &step).norm_squared());
                let rho = if predicted > 0.0 {
                    (cost - cost_trial) / predicted
                } else {
                    1.0
                };
                lambda *= (1.0 / 3.0f64).max(1.0 - (2.0 * rho - 1.0).powi(3));
                nu = 2.0;
                let rel_decrease = (cost - cost_trial) / cost.max(1e-300);
                let rel_step = step.norm() / (x.norm() + 1e-12);
                x = trial;
                r = r_trial;
                cost = cost_trial;
                accepted = true;
                if rel_decrease < opts.cost_tolerance || rel_step < opts.step_tolerance {
                    converged = true;
                }
                break;
            }
            lambda *= nu;
            nu *= 2.0;
        }
        if !accepted {
            // No descent direction left at working precision.
            converged = true;
        }
        if converged || cost == 0.0 {
            converged = true;
            break;
        }
    }

    LmReport {
        x,
        cost,
        iterations,
        converged,
    }
}

/// Derivative-free Nelder–Mead minimization. Returns the best vertex and its
/// value after `max_evals` function evaluations or when the simplex spread
/// in function value drops below `ftol`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: &[f64], max_evals: usize, ftol: f64) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for k in 0..n {
        let mut v = x0.to_vec();
        v[k] += step[k];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evals = n + 1;

    while evals < max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        if (values[n] - values[0]).abs() <= ftol {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|v| v[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64, worst: &[f64]| -> Vec<f64> {
            (0..n).map(|k| centroid[k] + t * (worst[k] - centroid[k])).collect()
        };

        let reflected = along(-1.0, &simplex[n]);
        let fr = f(&reflected);
        evals += 1;
        if fr < values[0] {
            let expanded = along(-2.0, &simplex[n]);
            let fe = f(&expanded);
            evals += 1;
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            let contracted = if fr < values[n] {
                along(-0.5, &simplex[n])
            } else {
                along(0.5, &simplex[n])
            };
            let fc = f(&contracted);
            evals += 1;
            if fc < values[n].min(fr) {
                simplex[n] = contracted;
                values[n] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=n {
                    simplex[i] = (0..n).map(|k| best[k] + 0.5 * (simplex[i][k] - best[k])).collect();
                    values[i] = f(&simplex[i]);
                    evals += 1;
                }
            }
        }
    }

    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    (simplex[best].clone(), values[best])
}

/// Golden-section search for the maximum of a unimodal function on
/// `[lo, hi]`. Returns the best evaluated abscissa and value.
pub fn golden_section_max<F, E>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64), E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let (mut best_x, mut best_f) = if fd > fc { (d, fd) } else { (c, fc) };

    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
            if fc > best_f || (fc == best_f && c < best_x) {
                best_x = c;
                best_f = fc;
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
            if fd > best_f || (fd == best_f && d < best_x) {
                best_x = d;
                best_f = fd;
            }
        }
    }
    Ok((best_x, best_f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapping() {
        assert_eq!(wrap_tau(-1e-18), 0.0);
        assert!((wrap_tau(-PI / 2.0) - 1.5 * PI).abs() < 1e-15);
        assert!((wrap_pi(1.5 * PI) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_pi(PI), PI);
    }

    #[test]
    fn circular_mean_across_wrap() {
        let m = circular_mean([TAU - 0.1, 0.1]).unwrap();
        assert!(m.min(TAU - m) < 1e-12);
        assert!(circular_mean([0.0, PI]).is_none());
        assert!(circular_mean(std::iter::empty()).is_none());
    }

    #[test]
    fn lm_fits_exponential() {
        let ts: Vec<f64> = (0..20).map(|k| k as f64 * 0.1).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 2.5 * (-1.3 * t).exp()).collect();
        let report = levenberg_marquardt(
            |p| DVector::from_iterator(ts.len(), ts.iter().zip(&ys).map(|(t, y)| p[0] * (p[1] * t).exp() - y)),
            DVector::from_vec(vec![1.0, -0.5]),
            LmOptions::default(),
        );
        assert!(report.converged);
        assert!((report.x[0] - 2.5).abs() < 1e-6);
        assert!((report.x[1] + 1.3).abs() < 1e-6);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let (x, fx) = nelder_mead(
            |v| (1.0 - v[0]).powi(2) + 100.0 * (v[1] - v[0] * v[0]).powi(2),
            &[-1.2, 1.0],
            &[0.5, 0.5],
            5000,
            1e-20,
        );
        assert!(fx < 1e-10, "{fx}");
        assert!((x[0] - 1.0).abs() < 1e-4 && (x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn golden_section_finds_peak() {
        let (x, fx) = golden_section_max(|x| Ok::<_, ()>(-(x - 0.7).powi(2)), 0.0, 2.0, 1e-6).unwrap();
        assert!((x - 0.7).abs() < 1e-6);
        assert!(fx.abs() < 1e-12);
    }
}
