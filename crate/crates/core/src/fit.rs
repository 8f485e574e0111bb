//! Least-squares fit of `A·exp(-τ/T) + c` to correlator-decay points.
//!
//! A log-spaced scan over `T` with the linear parameters `(A, c)` solved in
//! closed form gives the starting point; Levenberg-Marquardt on
//! `(A, ln T, c)` then polishes all three.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub amplitude: f64,
    /// Decay time. NaN when the amplitude vanishes and `T` is undetermined.
    pub t1: f64,
    pub offset: f64,
    /// Covariance of `(amplitude, t1, offset)`.
    pub covariance: [[f64; 3]; 3],
    /// Weighted residual sum of squares.
    pub residual: f64,
}

impl DecayFit {
    pub fn amplitude_std(&self) -> f64 {
        libm::sqrt(self.covariance[0][0])
    }

    pub fn t1_std(&self) -> f64 {
        libm::sqrt(self.covariance[1][1])
    }

    pub fn offset_std(&self) -> f64 {
        libm::sqrt(self.covariance[2][2])
    }

    pub fn value_at(&self, tau: f64) -> f64 {
        if self.amplitude == 0.0 {
            self.offset
        } else {
            self.amplitude * libm::exp(-tau / self.t1) + self.offset
        }
    }
}

struct Points<'a> {
    tau: &'a [f64],
    y: &'a [f64],
    w: Vec<f64>,
}

impl Points<'_> {
    /// Best `(A, c)` and weighted RSS for a fixed decay time.
    fn linear_solve(&self, t: f64) -> Option<(f64, f64, f64)> {
        let (mut see, mut se, mut sw, mut sey, mut sy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((&tau, &y), &w) in self.tau.iter().zip(self.y).zip(&self.w) {
            let e = libm::exp(-tau / t);
            see += w * e * e;
            se += w * e;
            sw += w;
            sey += w * e * y;
            sy += w * y;
        }
        let det = see * sw - se * se;
        if !(det > 1e-14 * see * sw) {
            return None;
        }
        let a = (sey * sw - se * sy) / det;
        let c = (see * sy - se * sey) / det;
        Some((a, c, self.rss(a, t, c)))
    }

    fn rss(&self, a: f64, t: f64, c: f64) -> f64 {
        self.tau
            .iter()
            .zip(self.y)
            .zip(&self.w)
            .map(|((&tau, &y), &w)| {
                let r = y - (a * libm::exp(-tau / t) + c);
                w * r * r
            })
            .sum()
    }

    /// JᵀWJ and JᵀWr at `(A, ln T, c)`.
    fn normal_equations(&self, a: f64, t: f64, c: f64) -> ([[f64; 3]; 3], [f64; 3]) {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for ((&tau, &y), &w) in self.tau.iter().zip(self.y).zip(&self.w) {
            let e = libm::exp(-tau / t);
            let j = [e, a * e * tau / t, 1.0];
            let r = y - (a * e + c);
            for i in 0..3 {
                jtr[i] += w * j[i] * r;
                for k in 0..3 {
                    jtj[i][k] += w * j[i] * j[k];
                }
            }
        }
        (jtj, jtr)
    }
}

/// Solves a 3×3 system by Gaussian elimination with partial pivoting.
fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if !(m[pivot][col].abs() > 1e-15 * scale) {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (x, p) in m[row].iter_mut().zip(pivot_row).skip(col) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / m[row][row];
    }
    Some(x)
}

fn invert3(m: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let mut inv = [[0.0; 3]; 3];
    for col in 0..3 {
        let mut e = [0.0; 3];
        e[col] = 1.0;
        let x = solve3(m, e)?;
        for row in 0..3 {
            inv[row][col] = x[row];
        }
    }
    Some(inv)
}

/// Fits `A·exp(-τ/T) + c`.
///
/// `sigmas`, when given, are per-point standard errors: the fit is weighted
/// by `1/σ²` and the covariance is absolute. Otherwise points are weighted
/// equally and the covariance is scaled by the residual variance.
pub fn fit_correlator_decay(
    tau: &[f64],
    values: &[f64],
    sigmas: Option<&[f64]>,
) -> Result<DecayFit> {
    if tau.len() != values.len() || sigmas.is_some_and(|s| s.len() != tau.len()) {
        return Err(Error::usage("decay fit inputs differ in length"));
    }
    if tau.iter().chain(values).any(|v| !v.is_finite()) || tau.iter().any(|t| *t < 0.0) {
        return Err(Error::usage(
            "decay fit inputs must be finite with tau >= 0",
        ));
    }
    let mut distinct: Vec<f64> = tau.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(Error::usage("decay fit needs at least 4 distinct delays"));
    }
    let w: Vec<f64> = match sigmas {
        Some(s) => {
            if s.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::usage("decay fit sigmas must be positive"));
            }
            s.iter().map(|v| 1.0 / (v * v)).collect()
        }
        None => alloc::vec![1.0; tau.len()],
    };
    let pts = Points { tau, y: values, w };
    let n = tau.len() as f64;

    let sw: f64 = pts.w.iter().sum();
    let y_mean = pts.y.iter().zip(&pts.w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let y_scale = pts.y.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let spread = pts.y.iter().fold(0.0f64, |m, y| m.max((y - y_mean).abs()));
    if spread <= 1e-14 * y_scale.max(f64::MIN_POSITIVE) {
        let var_c = if sigmas.is_some() { 1.0 / sw } else { 0.0 };
        return Ok(DecayFit {
            amplitude: 0.0,
            t1: f64::NAN,
            offset: y_mean,
            covariance: [[0.0, 0.0, 0.0], [0.0, f64::NAN, 0.0], [0.0, 0.0, var_c]],
            residual: 0.0,
        });
    }

    let min_gap = distinct
        .windows(2)
        .map(|p| p[1] - p[0])
        .fold(f64::INFINITY, f64::min);
    let span = distinct[distinct.len() - 1] - distinct[0];
    let (t_lo, t_hi) = (min_gap / 20.0, span * 200.0);
    const GRID: usize = 400;
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for k in 0..GRID {
        let t = t_lo * libm::pow(t_hi / t_lo, k as f64 / (GRID - 1) as f64);
        if let Some((a, c, rss)) = pts.linear_solve(t) {
            if best.is_none_or(|b| rss < b.3) {
                best = Some((a, t, c, rss));
            }
        }
    }
    let (mut a, mut t, mut c, mut rss) = best.ok_or_else(|| Error::Fit {
        reason: "no decay time gives a solvable linear problem".into(),
        residual: f64::NAN,
    })?;

    let mut lambda = 1e-3;
    for _ in 0..500 {
        let (jtj, jtr) = pts.normal_equations(a, t, c);
        let mut damped = jtj;
        for i in 0..3 {
            damped[i][i] += lambda * jtj[i][i].max(1e-300);
        }
        let Some(step) = solve3(damped, jtr) else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
            continue;
        };
        let (na, nt, nc) = (a + step[0], t * libm::exp(step[1]), c + step[2]);
        let new_rss = pts.rss(na, nt, nc);
        if new_rss.is_finite() && new_rss <= rss {
            let converged = rss - new_rss <= 1e-15 * rss
                && step[1].abs() < 1e-12
                && step[0].abs() <= 1e-12 * a.abs().max(y_scale);
            a = na;
            t = nt;
            c = nc;
            rss = new_rss;
            lambda = (lambda / 10.0).max(1e-15);
            if converged || rss == 0.0 {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }

    if !(a.is_finite() && t.is_finite() && c.is_finite()) {
        return Err(Error::Fit {
            reason: "fit diverged".into(),
            residual: rss,
        });
    }
    if t >= t_hi || t <= t_lo {
        return Err(Error::Fit {
            reason: format!("decay time {t:e} s ran to the edge of the searchable range"),
            residual: rss,
        });
    }

    let (jtj, _) = pts.normal_equations(a, t, c);
    let inv = invert3(jtj).ok_or_else(|| Error::Fit {
        reason: "singular normal matrix at the optimum".into(),
        residual: rss,
    })?;
    let scale = if sigmas.is_some() {
        1.0
    } else if n > 3.0 {
        rss / (n - 3.0)
    } else {
        0.0
    };
    // The solver works in ln T; convert that row and column to T.
    let jac = [1.0, t, 1.0];
    let mut covariance = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            covariance[i][k] = scale * inv[i][k] * jac[i] * jac[k];
        }
    }
    Ok(DecayFit {
        amplitude: a,
        t1: t,
        offset: c,
        covariance,
        residual: rss,
    })
}
