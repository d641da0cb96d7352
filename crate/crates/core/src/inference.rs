//! Maximum pseudolikelihood fitting and its asymptotic error analysis:
//! block covariance of the score, sandwich covariance, normal confidence
//! intervals, GNZ residuals and an identifiability diagnostic.
//!
//! The optimizer minimizes `U(theta) = -lpl(theta) / |W|` by projected
//! Newton steps with Armijo backtracking.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::geometry::{CellIndex, Window};
use crate::linalg::{cholesky, cholesky_solve, condition_number, from_rows, matmul, spd_inverse, symmetric_eigenvalues, symmetrize, to_rows, trace, zeros, Matrix};
use crate::models::{Constraint, ModelSpec};
use crate::patterns::PointPattern;
use crate::pseudolikelihood::Contrast;
use crate::quadrature::QuadratureScheme;
use crate::scalar::Scalar;

/// Largest accepted condition number of `u2` for the sandwich covariance.
pub const MAX_CONDITION: f64 = 1e12;
/// Relative eigenvalue threshold of the identifiability flag.
pub const SINGULAR_RATIO: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions<T> {
    pub max_iter: usize,
    /// Tolerance on the sup-norm of the projected gradient of `U`.
    pub grad_tol: T,
    /// Relative size below which a Newton step counts as zero.
    pub step_tol: T,
    pub armijo: T,
    pub max_halvings: usize,
    /// Confidence level of the reported intervals.
    pub level: T,
    /// Starting point; zero (projected onto the bounds) when absent.
    pub theta0: Option<Vec<T>>,
}

impl<T: Scalar> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 100,
            grad_tol: T::lit(1e-8),
            step_tol: T::lit(1e-6),
            armijo: T::lit(1e-4),
            max_halvings: 60,
            level: T::lit(0.95),
            theta0: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace<T> {
    pub iterations: usize,
    /// Sup-norm of the projected gradient of `U` at the returned estimate.
    pub gradient_norm: T,
    pub converged: bool,
    /// Components held at their lower bound at the end.
    pub active_bounds: Vec<usize>,
    /// `U` after each accepted step, starting at `theta0`.
    pub objective: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitGeometry<T> {
    pub fit_window: Window<T>,
    pub cell_size: T,
    pub dvee: T,
    pub area: T,
    pub cells: usize,
    pub points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub lower: T,
    pub upper: T,
    /// The estimate sits on a parameter bound, where normal theory fails.
    pub at_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentifiabilityReport<T> {
    pub u2_eigenvalues: Vec<T>,
    /// `None` when singular.
    pub u2_condition: Option<T>,
    pub sigma_eigenvalues: Vec<T>,
    pub sigma_condition: Option<T>,
    pub flagged: bool,
    pub message: String,
}

/// Matrices are stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult<T> {
    pub family: String,
    pub names: Vec<String>,
    pub theta_hat: Vec<T>,
    pub lpl: T,
    pub u2: Vec<Vec<T>>,
    pub sigma_hat: Vec<Vec<T>>,
    pub vcov: Option<Vec<Vec<T>>>,
    pub vcov_error: Option<String>,
    pub level: T,
    pub ci: Option<Vec<Interval<T>>>,
    pub solver: SolverTrace<T>,
    pub geometry: FitGeometry<T>,
    pub diagnostics: IdentifiabilityReport<T>,
}

impl<T: Scalar> FitResult<T> {
    pub fn u2_matrix(&self) -> Matrix<T> {
        from_rows(&self.u2)
    }

    pub fn sigma_matrix(&self) -> Matrix<T> {
        from_rows(&self.sigma_hat)
    }

    pub fn vcov_matrix(&self) -> Option<Matrix<T>> {
        self.vcov.as_deref().map(from_rows)
    }

    /// Standard errors `sqrt(vcov_jj)`.
    pub fn std_errors(&self) -> Option<Vec<T>> {
        self.vcov.as_ref().map(|v| (0..v.len()).map(|j| v[j][j].max(T::zero()).sqrt()).collect())
    }
}

fn lower_bounds<T: Scalar>(model: &ModelSpec<T>) -> Vec<Option<T>> {
    model
        .constraints()
        .into_iter()
        .map(|c| match c {
            Constraint::Free => None,
            Constraint::NonNegative | Constraint::Positive => Some(T::zero()),
        })
        .collect()
}

fn project<T: Scalar>(theta: &mut [T], lb: &[Option<T>]) {
    for (t, b) in theta.iter_mut().zip(lb) {
        if let Some(b) = b {
            *t = t.max(*b);
        }
    }
}

fn sup_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Components at their bound whose gradient pushes them outward.
fn active_set<T: Scalar>(theta: &[T], grad: &[T], lb: &[Option<T>]) -> Vec<bool> {
    theta
        .iter()
        .zip(grad)
        .zip(lb)
        .map(|((t, g), b)| matches!(b, Some(b) if *t <= *b && *g > T::zero()))
        .collect()
}

/// Newton direction on the free components, with ridge regularization when
/// the reduced Hessian is not numerically positive definite.
fn newton_direction<T: Scalar>(hess: &Matrix<T>, grad: &[T], active: &[bool]) -> Result<Vec<T>> {
    let free: Vec<usize> = (0..grad.len()).filter(|&i| !active[i]).collect();
    let mut d = vec![T::zero(); grad.len()];
    if free.is_empty() {
        return Ok(d);
    }
    let k = free.len();
    let sub = Matrix::from_fn(k, k, |a, b| hess[(free[a], free[b])]);
    let rhs: Vec<T> = free.iter().map(|&i| -grad[i]).collect();
    let tr = trace(&sub);
    if !(tr > T::zero()) || !tr.is_finite() {
        return Err(Error::IllConditioned {
            condition: f64::INFINITY,
            message: "pseudolikelihood Hessian vanishes".into(),
        });
    }
    let mut lambda = T::zero();
    let mut ridge = T::lit(1e-10) * tr;
    for _ in 0..12 {
        let reg = Matrix::from_fn(k, k, |a, b| if a == b { sub[(a, b)] + lambda } else { sub[(a, b)] });
        if let Some(l) = cholesky(&reg) {
            let x = cholesky_solve(&l, &rhs);
            for (a, &i) in free.iter().enumerate() {
                d[i] = x[a];
            }
            return Ok(d);
        }
        lambda = ridge;
        ridge *= T::lit(10.0);
    }
    Err(Error::IllConditioned {
        condition: condition_number(&sub).to_f64_lossy(),
        message: "Hessian not positive definite after regularization".into(),
    })
}

/// Maximum pseudolikelihood estimate on `fit_window`, with the covariance
/// analysis at the estimate. `cell_size` is the block side used for the
/// score covariance and `dvee` its dependence range.
pub fn fit_mple<T: Scalar>(
    model: &ModelSpec<T>,
    pattern: &PointPattern<T>,
    fit_window: &Window<T>,
    quad: &QuadratureScheme<T>,
    cell_size: T,
    dvee: T,
    options: &FitOptions<T>,
) -> Result<FitResult<T>> {
    let contrast = Contrast::new(model, pattern, fit_window, quad)?;
    fit_contrast(model, &contrast, cell_size, dvee, options)
}

/// As [`fit_mple`] for a precomputed contrast.
pub fn fit_contrast<T: Scalar>(
    model: &ModelSpec<T>,
    contrast: &Contrast<T>,
    cell_size: T,
    dvee: T,
    options: &FitOptions<T>,
) -> Result<FitResult<T>> {
    check_dvee(model, dvee)?;
    if !(options.level > T::zero() && options.level < T::one()) {
        return Err(Error::InvalidInput(format!("confidence level {} must lie in (0, 1)", options.level)));
    }
    let p = model.dim();
    let area = contrast.fit_window().area();
    let lb = lower_bounds(model);
    let mut theta = match &options.theta0 {
        Some(t) if t.len() != p => return Err(Error::Dimension { expected: p, got: t.len() }),
        Some(t) => t.clone(),
        None => vec![T::zero(); p],
    };
    project(&mut theta, &lb);

    // U, its gradient and Hessian from the lpl quantities.
    let scaled = |theta: &[T]| -> Result<(T, Vec<T>, Matrix<T>)> {
        let e = contrast.evaluate(theta)?;
        let g = e.gradient.iter().map(|&x| -x / area).collect();
        Ok((-e.lpl / area, g, e.hessian / area))
    };
    // Change of U along a step; `None` when it overflows.
    let change = |theta: &[T], step: &[T]| -> Result<Option<T>> {
        match contrast.lpl_change(theta, step) {
            Ok(v) if v.is_finite() => Ok(Some(-v / area)),
            Ok(_) | Err(Error::Numeric { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };

    let (mut f, mut g, mut h) = scaled(&theta)?;
    let mut history = vec![f];
    let mut converged = false;
    let mut iterations = 0;
    let mut pg_norm;
    loop {
        let active = active_set(&theta, &g, &lb);
        let pg: Vec<T> = g.iter().zip(&active).map(|(&x, &a)| if a { T::zero() } else { x }).collect();
        pg_norm = sup_norm(&pg);
        if iterations >= options.max_iter {
            break;
        }
        let d = newton_direction(&h, &g, &active)?;
        let theta_scale = sup_norm(&theta).max(T::one());
        let small_step = sup_norm(&d) <= options.step_tol * theta_scale;
        if pg_norm < options.grad_tol && small_step {
            converged = true;
            break;
        }
        // Armijo backtracking along the projected path.
        let mut t = T::one();
        let mut accepted = None;
        for _ in 0..=options.max_halvings {
            let mut cand: Vec<T> = theta.iter().zip(&d).map(|(&a, &b)| a + t * b).collect();
            project(&mut cand, &lb);
            let step: Vec<T> = cand.iter().zip(&theta).map(|(&c, &a)| c - a).collect();
            let decrease: T = g.iter().zip(&step).map(|(&gi, &s)| gi * s).sum();
            if let Some(df) = change(&theta, &step)? {
                if df <= options.armijo * decrease {
                    accepted = Some(cand);
                    break;
                }
            }
            t *= T::lit(0.5);
        }
        iterations += 1;
        let Some(next) = accepted else {
            // No decrease is possible along the Newton path.
            converged = pg_norm < options.grad_tol;
            break;
        };
        theta = next;
        (f, g, h) = scaled(&theta)?;
        history.push(f);
    }

    let active = active_set(&theta, &g, &lb);
    let active_bounds: Vec<usize> = (0..p).filter(|&i| active[i] || matches!(lb[i], Some(b) if theta[i] <= b)).collect();
    let a = assess(model, contrast, &theta, cell_size, dvee, options.level, &active_bounds)?;
    Ok(FitResult {
        family: model.family().to_string(),
        names: model.component_names(),
        theta_hat: a.theta,
        lpl: a.lpl,
        u2: a.u2,
        sigma_hat: a.sigma_hat,
        vcov: a.vcov,
        vcov_error: a.vcov_error,
        level: options.level,
        ci: a.ci,
        solver: SolverTrace { iterations, gradient_norm: pg_norm, converged, active_bounds, objective: history },
        geometry: a.geometry,
        diagnostics: a.diagnostics,
    })
}

/// Covariance analysis at a given parameter, without optimization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assessment<T> {
    pub theta: Vec<T>,
    pub lpl: T,
    pub u2: Vec<Vec<T>>,
    pub sigma_hat: Vec<Vec<T>>,
    pub vcov: Option<Vec<Vec<T>>>,
    pub vcov_error: Option<String>,
    pub ci: Option<Vec<Interval<T>>>,
    pub geometry: FitGeometry<T>,
    pub diagnostics: IdentifiabilityReport<T>,
}

fn check_dvee<T: Scalar>(model: &ModelSpec<T>, dvee: T) -> Result<()> {
    let tol = T::lit(1e-9) * model.range().max(T::one());
    if !(dvee + tol >= model.range()) {
        return Err(Error::Configuration(format!(
            "dependence range {dvee} is below the interaction range {}",
            model.range()
        )));
    }
    Ok(())
}

/// `u2`, `sigma_hat`, sandwich covariance, intervals and diagnostics at
/// `theta`. Components listed in `at_bound` get flagged intervals.
pub fn assess<T: Scalar>(
    model: &ModelSpec<T>,
    contrast: &Contrast<T>,
    theta: &[T],
    cell_size: T,
    dvee: T,
    level: T,
    at_bound: &[usize],
) -> Result<Assessment<T>> {
    check_dvee(model, dvee)?;
    // Bounds are closed here: a fit may end exactly on a strict bound.
    if !(level > T::zero() && level < T::one()) {
        return Err(Error::InvalidInput(format!("confidence level {level} must lie in (0, 1)")));
    }
    let area = contrast.fit_window().area();
    let eval = contrast.evaluate(theta)?;
    let u2 = symmetrize(&(eval.hessian / area));
    let cells = contrast.cell_gradients(theta, cell_size)?;
    let sigma = sigma_hat(&cells, cell_size, dvee, area);
    let (vcov, vcov_error) = match sandwich_covariance(&u2, &sigma, area) {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let ci = vcov.as_ref().map(|v| {
        confidence_intervals(theta, v, level)
            .into_iter()
            .enumerate()
            .map(|(j, (lower, upper))| Interval { lower, upper, at_bound: at_bound.contains(&j) })
            .collect()
    });
    let diagnostics = identifiability_diagnostic(&u2, &sigma);
    Ok(Assessment {
        theta: theta.to_vec(),
        lpl: eval.lpl,
        u2: to_rows(&u2),
        sigma_hat: to_rows(&sigma),
        vcov: vcov.as_ref().map(to_rows),
        vcov_error,
        ci,
        geometry: FitGeometry {
            fit_window: *contrast.fit_window(),
            cell_size,
            dvee,
            area,
            cells: cells.len(),
            points: contrast.data_len(),
        },
        diagnostics,
    })
}

/// Number of cell layers within the dependence range: `ceil(dvee / cell)`.
pub fn neighbour_layers<T: Scalar>(cell_size: T, dvee: T) -> i64 {
    let r = dvee / cell_size;
    (r - T::lit(1e-9)).ceil().max(T::zero()).to_i64().unwrap_or(0)
}

/// Block covariance of the score:
/// `|W|^{-1} sum_i sum_{j : |j - i|_inf <= ceil(dvee / cell)} g_i g_j^T`.
///
/// Each unordered pair is visited once and contributes `g_i g_j^T + g_j g_i^T`,
/// so the result is exactly symmetric.
pub fn sigma_hat<T: Scalar>(per_cell: &[(CellIndex, Vec<T>)], cell_size: T, dvee: T, area: T) -> Matrix<T> {
    let p = per_cell.first().map_or(0, |c| c.1.len());
    let k = neighbour_layers(cell_size, dvee);
    let pos: HashMap<CellIndex, usize> = per_cell.iter().enumerate().map(|(i, (c, _))| (*c, i)).collect();
    let mut s = zeros(p);
    for (i, (ci, gi)) in per_cell.iter().enumerate() {
        for a in 0..p {
            for b in 0..p {
                s[(a, b)] += gi[a] * gi[b];
            }
        }
        for di in -k..=k {
            for dj in -k..=k {
                let Some(&j) = pos.get(&CellIndex::new(ci.i1 + di, ci.i2 + dj)) else { continue };
                if j <= i {
                    continue;
                }
                let gj = &per_cell[j].1;
                for a in 0..p {
                    for b in 0..p {
                        s[(a, b)] += gi[a] * gj[b] + gj[a] * gi[b];
                    }
                }
            }
        }
    }
    s / area
}

/// `|W|^{-1} u2^{-1} sigma u2^{-1}`.
pub fn sandwich_covariance<T: Scalar>(u2: &Matrix<T>, sigma: &Matrix<T>, area: T) -> Result<Matrix<T>> {
    let cond = condition_number(u2);
    let ev = symmetric_eigenvalues(u2);
    if !(cond < T::lit(MAX_CONDITION)) || ev.first().is_some_and(|&l| l <= T::zero()) {
        return Err(Error::Identifiability {
            condition: cond.to_f64_lossy(),
            message: "u2 is singular or too ill-conditioned for a covariance estimate".into(),
        });
    }
    let inv = spd_inverse(u2).ok_or_else(|| Error::Identifiability {
        condition: cond.to_f64_lossy(),
        message: "u2 is not positive definite".into(),
    })?;
    let v = matmul(&matmul(&inv, sigma), &inv) / area;
    Ok(symmetrize(&v))
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// `theta_j -/+ z_{(1 + level) / 2} sqrt(vcov_jj)`.
pub fn confidence_intervals<T: Scalar>(theta: &[T], vcov: &Matrix<T>, level: T) -> Vec<(T, T)> {
    let z = T::lit(normal_quantile((1.0 + level.to_f64_lossy()) / 2.0));
    theta
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let half = z * vcov[(j, j)].max(T::zero()).sqrt();
            (t - half, t + half)
        })
        .collect()
}

/// Test function of a GNZ residual.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestFunction {
    /// `h = 1`.
    Raw,
    /// `h = v_j(x | phi)`.
    Statistic(usize),
}

/// `sum_{x in phi_fit} h(x, phi - x) - int h(x, phi) e^{-V(x | phi)}`.
pub fn gnz_residual<T: Scalar>(
    model: &ModelSpec<T>,
    theta: &[T],
    pattern: &PointPattern<T>,
    fit_window: &Window<T>,
    quad: &QuadratureScheme<T>,
    h: TestFunction,
) -> Result<T> {
    model.validate_theta(theta)?;
    let contrast = Contrast::new(model, pattern, fit_window, quad)?;
    gnz_residual_with(&contrast, theta, h)
}

/// [`gnz_residual`] for a precomputed contrast.
pub fn gnz_residual_with<T: Scalar>(contrast: &Contrast<T>, theta: &[T], h: TestFunction) -> Result<T> {
    match h {
        TestFunction::Raw => Ok(T::from_usize_lossy(contrast.data_len()) - contrast.integral(theta)?),
        TestFunction::Statistic(j) => {
            if j >= contrast.dim() {
                return Err(Error::Dimension { expected: contrast.dim(), got: j + 1 });
            }
            Ok(-contrast.gradient(theta)?[j])
        }
    }
}

/// Eigenvalues and conditioning of `u2` and `sigma`; flags any eigenvalue
/// below `SINGULAR_RATIO * trace`.
pub fn identifiability_diagnostic<T: Scalar>(u2: &Matrix<T>, sigma: &Matrix<T>) -> IdentifiabilityReport<T> {
    let check = |m: &Matrix<T>, name: &str| {
        let ev = symmetric_eigenvalues(m);
        let tr = trace(m);
        let low = ev.first().is_some_and(|&l| l < T::lit(SINGULAR_RATIO) * tr) || !(tr > T::zero());
        let note = low.then(|| format!("{name} is numerically singular (smallest eigenvalue {:?}, trace {tr})", ev.first()));
        let cond = condition_number(m);
        (ev, cond.is_finite().then_some(cond), note)
    };
    let (ue, uc, un) = check(u2, "u2");
    let (se, sc, sn) = check(sigma, "sigma_hat");
    let notes: Vec<String> = [un, sn].into_iter().flatten().collect();
    IdentifiabilityReport {
        u2_eigenvalues: ue,
        u2_condition: uc,
        sigma_eigenvalues: se,
        sigma_condition: sc,
        flagged: !notes.is_empty(),
        message: if notes.is_empty() { "ok".into() } else { notes.join("; ") },
    }
}
