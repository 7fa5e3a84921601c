//! Projected-gradient descent over box constraints with a safeguarded
//! Barzilai-Borwein step and a nonmonotone (GLL) Armijo line search,
//! optionally followed by an active-set damped-Newton polish.
//!
//! Stationarity is measured on the projected gradient, relative to the
//! gradient scale: `||P(x - g) - x||_inf <= gtol * (1 + ||g||_inf)`. The
//! returned point is the best one seen; its value never exceeds `f(x0)`.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOptions {
    /// Relative projected-gradient tolerance.
    pub gtol: f64,
    /// Relative function-decrease floor below which a stalled line search
    /// counts as converged.
    pub ftol: f64,
    pub max_iters: usize,
    pub max_line_search_steps: usize,
    /// Run an active-set damped-Newton phase (finite-difference Hessian of
    /// the gradient) after the first-order descent. Worth it for final
    /// polishing: the moisture penalty makes the objective stiff in one
    /// direction and first-order steps crawl along it.
    pub newton_polish: bool,
    /// Length of the nonmonotone (GLL) line-search reference window. 1 is
    /// a plain monotone Armijo search; warm-started tracking solves want
    /// that, while cold polishing benefits from letting Barzilai-Borwein
    /// steps hop along curved valleys.
    pub nonmonotone_window: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            gtol: 1e-6,
            ftol: 1e-12,
            max_iters: 300,
            max_line_search_steps: 60,
            newton_polish: false,
            nonmonotone_window: 1,
        }
    }
}

impl MinimizeOptions {
    /// Tightened settings for final polishing passes.
    pub fn polish() -> Self {
        MinimizeOptions {
            gtol: 1e-9,
            max_iters: 1200,
            newton_polish: true,
            nonmonotone_window: NONMONOTONE_WINDOW,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinimizeStatus {
    /// Projected gradient within tolerance.
    Stationary,
    /// Line search could no longer reduce the objective, but the projected
    /// gradient was already near tolerance (within the stall factor).
    Stalled,
    /// Iteration cap reached.
    IterationCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub status: MinimizeStatus,
}

impl MinimizeOutcome {
    pub fn converged(&self) -> bool {
        matches!(
            self.status,
            MinimizeStatus::Stationary | MinimizeStatus::Stalled
        )
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MinimizeError {
    /// The line search cannot reduce the objective and the point is far
    /// from stationary: the objective or its gradient is inconsistent.
    #[error(
        "line search failed at iteration {iteration}: projected gradient {pg_norm:.3e} \
         exceeds stall tolerance {stall_tol:.3e}"
    )]
    LineSearchFailed {
        iteration: usize,
        pg_norm: f64,
        stall_tol: f64,
    },
    #[error("objective evaluated to a non-finite value {value} at the start point")]
    NonFiniteObjective { value: f64 },
}

const LAMBDA_MIN: f64 = 1e-10;
const LAMBDA_MAX: f64 = 1e10;
const ARMIJO_C1: f64 = 1e-4;
/// A stalled line search is accepted as converged while the projected
/// gradient is within this factor of the stationarity tolerance.
const STALL_FACTOR: f64 = 1e6;

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()))
}

/// Minimizes `f` over the box `[lo, hi]` starting from `x0` (projected into
/// the box first). `grad` must return the gradient of `f`.
pub fn minimize_box<F, G>(
    f: F,
    grad: G,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &MinimizeOptions,
) -> Result<MinimizeOutcome, MinimizeError>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let mut outcome = descent_phase(&f, &grad, x0, lo, hi, opts)?;
    if opts.newton_polish && x0.len() <= NEWTON_MAX_DIMS {
        // Alternate Newton polishing with descent restarts: the Newton
        // model is one-sided at the penalty hinge, so a single pass can
        // stop short while descent from the fresher point still helps.
        for _ in 0..3 {
            let before = outcome.value;
            outcome = newton_phase(&f, &grad, outcome, lo, hi, opts);
            if outcome.status == MinimizeStatus::Stationary {
                break;
            }
            let restart = descent_phase(&f, &grad, &outcome.x.clone(), lo, hi, opts)?;
            if restart.value < outcome.value {
                outcome = restart;
            }
            if outcome.value >= before - 1e-12 * (1.0 + before.abs()) {
                break;
            }
        }
    }
    Ok(outcome)
}

/// Reference window of the nonmonotone line search.
const NONMONOTONE_WINDOW: usize = 10;

fn descent_phase<F, G>(
    f: &F,
    grad: &G,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &MinimizeOptions,
) -> Result<MinimizeOutcome, MinimizeError>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    assert_eq!(x0.len(), lo.len());
    assert_eq!(x0.len(), hi.len());
    let n = x0.len();

    let mut x = x0.to_vec();
    project(&mut x, lo, hi);
    let mut fx = f(&x);
    if !fx.is_finite() {
        return Err(MinimizeError::NonFiniteObjective { value: fx });
    }
    let mut g = grad(&x);
    let mut lambda: Option<f64> = None;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    // Best point seen; the nonmonotone search may step above it temporarily
    // but we never return anything worse.
    let mut best_x = x.clone();
    let mut best_f = fx;
    let mut window: Vec<f64> = vec![fx];

    let done = |x: Vec<f64>, value: f64, iterations: usize, status: MinimizeStatus| {
        MinimizeOutcome {
            x,
            value,
            iterations,
            status,
        }
    };

    for iteration in 0..opts.max_iters {
        // Projected-gradient stationarity measure, relative to the gradient
        // scale (the objective value may carry a huge constant offset).
        let mut pg = vec![0.0; n];
        for i in 0..n {
            pg[i] = (x[i] - g[i]).clamp(lo[i], hi[i]) - x[i];
        }
        let pg_norm = inf_norm(&pg);
        let scale = 1.0 + inf_norm(&g);
        if pg_norm <= opts.gtol * scale {
            if fx > best_f {
                return Ok(done(best_x, best_f, iteration, MinimizeStatus::Stalled));
            }
            return Ok(done(x, fx, iteration, MinimizeStatus::Stationary));
        }

        // Safeguarded Barzilai-Borwein step length.
        let step = match (&prev, lambda) {
            (Some((px, pgrad)), _) => {
                let mut ss = 0.0;
                let mut sy = 0.0;
                for i in 0..n {
                    let s = x[i] - px[i];
                    let y = g[i] - pgrad[i];
                    ss += s * s;
                    sy += s * y;
                }
                if sy > 0.0 {
                    (ss / sy).clamp(LAMBDA_MIN, LAMBDA_MAX)
                } else {
                    LAMBDA_MAX.min(1.0 / pg_norm.max(1e-300))
                }
            }
            (None, Some(l)) => l,
            (None, None) => (1.0 / pg_norm).clamp(LAMBDA_MIN, LAMBDA_MAX),
        };
        lambda = Some(step);

        // Descent direction along the projected arc.
        let mut direction = vec![0.0; n];
        let mut dir_dot_g = 0.0;
        for i in 0..n {
            direction[i] = (x[i] - step * g[i]).clamp(lo[i], hi[i]) - x[i];
            dir_dot_g += direction[i] * g[i];
        }
        if dir_dot_g >= 0.0 {
            // Numerical corner: fall back to the raw projected gradient.
            direction.copy_from_slice(&pg);
            dir_dot_g = pg.iter().zip(&g).map(|(d, gi)| d * gi).sum();
        }

        // Nonmonotone Armijo: compare against the worst recent accepted
        // value, which lets Barzilai-Borwein steps hop along curved valleys.
        let f_ref = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut theta = 1.0;
        let mut accepted = false;
        let mut candidate = vec![0.0; n];
        let mut f_candidate = fx;
        for _ in 0..opts.max_line_search_steps {
            for i in 0..n {
                candidate[i] = x[i] + theta * direction[i];
            }
            project(&mut candidate, lo, hi);
            f_candidate = f(&candidate);
            if f_candidate.is_finite() && f_candidate <= f_ref + ARMIJO_C1 * theta * dir_dot_g {
                accepted = true;
                break;
            }
            theta *= 0.5;
        }

        if !accepted {
            // No acceptable step at any scale: return the best point, as a
            // stall when it is near-stationary or the residual improvement
            // is below the function floor, as an error otherwise.
            let near_stationary = pg_norm <= opts.gtol * scale * STALL_FACTOR;
            let tiny_change = (fx - f_candidate).abs() <= opts.ftol * (1.0 + fx.abs());
            if near_stationary || tiny_change {
                return Ok(done(best_x, best_f, iteration, MinimizeStatus::Stalled));
            }
            return Err(MinimizeError::LineSearchFailed {
                iteration,
                pg_norm,
                stall_tol: opts.gtol * scale * STALL_FACTOR,
            });
        }

        prev = Some((x.clone(), g.clone()));
        x = candidate;
        fx = f_candidate;
        g = grad(&x);
        if fx < best_f {
            best_f = fx;
            best_x = x.clone();
        }
        window.push(fx);
        if window.len() > opts.nonmonotone_window.max(1) {
            window.remove(0);
        }
    }

    Ok(done(
        best_x,
        best_f,
        opts.max_iters,
        MinimizeStatus::IterationCap,
    ))
}

const NEWTON_MAX_DIMS: usize = 16;
const NEWTON_MAX_ITERS: usize = 60;

/// Active-set damped-Newton refinement. Coordinates pinned at a bound with
/// the gradient pointing outward are frozen; the reduced Newton system uses
/// a central-difference Hessian of `grad` with Levenberg damping, falling
/// back to larger damping whenever the factorization or the step fails to
/// decrease `f`. Never returns a worse point than it was given.
fn newton_phase<F, G>(
    f: &F,
    grad: &G,
    start: MinimizeOutcome,
    lo: &[f64],
    hi: &[f64],
    opts: &MinimizeOptions,
) -> MinimizeOutcome
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let n = start.x.len();
    let mut x = start.x.clone();
    let mut fx = start.value;
    let mut status = start.status;
    let mut mu = 1e-3;

    for _ in 0..NEWTON_MAX_ITERS {
        let g = grad(&x);
        let free: Vec<usize> = (0..n)
            .filter(|&i| {
                let at_lo = x[i] <= lo[i] && g[i] > 0.0;
                let at_hi = x[i] >= hi[i] && g[i] < 0.0;
                !(at_lo || at_hi)
            })
            .collect();
        let mut pg_norm = 0.0f64;
        let mut g_norm = 0.0f64;
        for i in 0..n {
            pg_norm = pg_norm.max(((x[i] - g[i]).clamp(lo[i], hi[i]) - x[i]).abs());
            g_norm = g_norm.max(g[i].abs());
        }
        if free.is_empty() || pg_norm <= opts.gtol * (1.0 + g_norm) {
            status = MinimizeStatus::Stationary;
            break;
        }

        // Central-difference Hessian columns on the free coordinates.
        let m = free.len();
        let mut hess = vec![0.0; m * m];
        let mut probe = x.clone();
        for (col, &j) in free.iter().enumerate() {
            let h = 1e-6 * (1.0 + x[j].abs());
            probe[j] = x[j] + h;
            let gp = grad(&probe);
            probe[j] = x[j] - h;
            let gm = grad(&probe);
            probe[j] = x[j];
            for (row, &i) in free.iter().enumerate() {
                hess[row * m + col] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        // Symmetrize.
        for r in 0..m {
            for c in (r + 1)..m {
                let avg = 0.5 * (hess[r * m + c] + hess[c * m + r]);
                hess[r * m + c] = avg;
                hess[c * m + r] = avg;
            }
        }
        let diag_scale = hess
            .iter()
            .fold(0.0f64, |acc, &v| acc.max(v.abs()))
            .max(1e-12);

        let restore_opts = MinimizeOptions {
            max_iters: 20,
            newton_polish: false,
            ..opts.clone()
        };
        let mut improved = false;
        for attempt in 0..12 {
            let mut damped = hess.clone();
            for i in 0..m {
                damped[i * m + i] += mu * diag_scale;
            }
            let rhs: Vec<f64> = free.iter().map(|&i| -g[i]).collect();
            let Some(step) = cholesky_solve(&damped, &rhs, m) else {
                mu *= 10.0;
                continue;
            };
            let mut candidate = x.clone();
            for (idx, &i) in free.iter().enumerate() {
                candidate[i] = (candidate[i] + step[idx]).clamp(lo[i], hi[i]);
            }
            let fc = f(&candidate);
            if std::env::var_os("DRYPATH_MIN_TRACE").is_some() {
                eprintln!(
                    "newton attempt={attempt} mu={mu:.2e} fx={fx:.6e} fc={fc:.6e} step={step:?}"
                );
            }
            if fc.is_finite() && fc < fx {
                x = candidate;
                fx = fc;
                mu = (mu / 10.0).max(1e-12);
                improved = true;
                break;
            }
            // The tangent step left the stiff penalty valley and was
            // rejected; restore feasibility by a short descent from the
            // candidate before shrinking the step.
            if attempt == 0 {
                if let Ok(restored) = descent_phase(f, grad, &candidate, lo, hi, &restore_opts) {
                    if std::env::var_os("DRYPATH_MIN_TRACE").is_some() {
                        eprintln!("  restore -> {:.6e}", restored.value);
                    }
                    if restored.value < fx {
                        x = restored.x;
                        fx = restored.value;
                        improved = true;
                        break;
                    }
                }
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }

    debug_assert!(fx <= start.value + 1e-12 * (1.0 + start.value.abs()));
    MinimizeOutcome {
        x,
        value: fx,
        iterations: start.iterations,
        status,
    }
}

/// Dense Cholesky solve of `A x = b` for a small symmetric matrix stored
/// row-major; `None` when `A` is not positive definite.
fn cholesky_solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    // Forward then backward substitution.
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quadratic(center: Vec<f64>, scales: Vec<f64>) -> (impl Fn(&[f64]) -> f64, impl Fn(&[f64]) -> Vec<f64>) {
        let c2 = center.clone();
        let s2 = scales.clone();
        (
            move |x: &[f64]| {
                x.iter()
                    .zip(&center)
                    .zip(&scales)
                    .map(|((xi, ci), si)| si * (xi - ci) * (xi - ci))
                    .sum()
            },
            move |x: &[f64]| {
                x.iter()
                    .zip(&c2)
                    .zip(&s2)
                    .map(|((xi, ci), si)| 2.0 * si * (xi - ci))
                    .collect()
            },
        )
    }

    #[test]
    fn finds_interior_minimum() {
        let (f, g) = quadratic(vec![3.0, -1.0], vec![1.0, 10.0]);
        let out = minimize_box(f, g, &[0.0, 0.0], &[-5.0, -5.0], &[5.0, 5.0], &Default::default())
            .unwrap();
        assert_abs_diff_eq!(out.x[0], 3.0, epsilon = 1e-5);
        assert_abs_diff_eq!(out.x[1], -1.0, epsilon = 1e-5);
        assert!(out.converged());
    }

    #[test]
    fn respects_active_bounds() {
        let (f, g) = quadratic(vec![10.0, -10.0], vec![1.0, 1.0]);
        let out = minimize_box(f, g, &[0.0, 0.0], &[-2.0, -2.0], &[2.0, 2.0], &Default::default())
            .unwrap();
        assert_abs_diff_eq!(out.x[0], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(out.x[1], -2.0, epsilon = 1e-9);
    }

    #[test]
    fn stationary_start_returns_unchanged() {
        let (f, g) = quadratic(vec![1.0, 1.0], vec![4.0, 4.0]);
        let out = minimize_box(f, g, &[1.0, 1.0], &[0.0, 0.0], &[2.0, 2.0], &Default::default())
            .unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.x, vec![1.0, 1.0]);
        assert_eq!(out.status, MinimizeStatus::Stationary);
    }

    #[test]
    fn handles_unbounded_above_coordinates() {
        let (f, g) = quadratic(vec![250.0], vec![1.0]);
        let out = minimize_box(
            f,
            g,
            &[1.0],
            &[0.0],
            &[f64::INFINITY],
            &MinimizeOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(out.x[0], 250.0, epsilon = 1e-4);
    }

    #[test]
    fn newton_polish_handles_stiff_valleys() {
        // Condition number ~1e7, like the moisture penalty against the
        // energy terms.
        let f = |x: &[f64]| 1e7 * (x[0] + x[1] - 3.0).powi(2) + (x[0] - 1.0).powi(2);
        let g = |x: &[f64]| {
            let c = 2e7 * (x[0] + x[1] - 3.0);
            vec![c + 2.0 * (x[0] - 1.0), c]
        };
        let out = minimize_box(
            f,
            g,
            &[0.0, 0.0],
            &[-10.0, -10.0],
            &[10.0, 10.0],
            &MinimizeOptions::polish(),
        )
        .unwrap();
        assert_abs_diff_eq!(out.x[0], 1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(out.x[1], 2.0, epsilon = 1e-5);
        assert!(out.value < 1e-9);
    }

    #[test]
    fn cholesky_solves_small_systems() {
        // A = [[4, 2], [2, 3]], b = [2, 5] -> x = [-0.5, 2]
        let a = [4.0, 2.0, 2.0, 3.0];
        let x = cholesky_solve(&a, &[2.0, 5.0], 2).unwrap();
        assert_abs_diff_eq!(x[0], -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 2.0, epsilon = 1e-12);
        // Indefinite matrix is rejected.
        let bad = [1.0, 2.0, 2.0, 1.0];
        assert!(cholesky_solve(&bad, &[1.0, 1.0], 2).is_none());
    }

    #[test]
    fn descent_is_monotone() {
        // Rosenbrock-like valley inside a box; track that accepted values
        // never increase.
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let g = |x: &[f64]| {
            vec![
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                200.0 * (x[1] - x[0] * x[0]),
            ]
        };
        let opts = MinimizeOptions {
            max_iters: 2000,
            ..Default::default()
        };
        let out = minimize_box(f, g, &[-1.2, 1.0], &[-2.0, -2.0], &[2.0, 2.0], &opts).unwrap();
        assert!(out.value < 1e-8, "value {}", out.value);
    }
}
