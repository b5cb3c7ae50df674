//! Multi-start minimization of the polaron energy functional.
//!
//! Each start runs a Nelder-Mead simplex descent followed by a BFGS polish
//! on the analytic gradient. Starts are independent and run in parallel; the
//! winner is the lowest energy, with ties (within [`TIE_TOL`]) going to the
//! lowest start index.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::PolaronAnsatz;
use crate::error::{Error, Result};
use crate::gaussian::GaussianPacket;
use crate::model::ModelParams;

/// Energies closer than this are treated as equal when picking a winner.
pub const TIE_TOL: f64 = 1e-12;
/// Gradient-norm tolerance per unit energy: a start counts as converged when
/// `|∇E| ≤ GRAD_TOL · max(1, |E|)`.
pub const GRAD_TOL: f64 = 1e-6;
/// Packets closer than this in both ε and center are merged.
pub const MERGE_TOL: f64 = 1e-9;
/// Newton steps allowed after BFGS when the gradient is still above [`GRAD_TOL`].
pub const NEWTON_STEPS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub n_pairs: usize,
    /// Iteration budget per start, shared by the simplex and BFGS stages.
    pub max_iters: usize,
    /// Relative energy change that stops BFGS.
    pub energy_tol: f64,
    pub n_starts: usize,
    pub seed: u64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            n_pairs: 2,
            max_iters: 6000,
            energy_tol: 1e-12,
            n_starts: 8,
            seed: 0,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_pairs == 0 {
            return Err(Error::InvalidParams("n_pairs must be >= 1".into()));
        }
        if self.n_starts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidParams("n_starts and max_iters must be >= 1".into()));
        }
        if !(self.energy_tol.is_finite() && self.energy_tol > 0.0) {
            return Err(Error::InvalidParams(format!("energy_tol must be > 0, got {}", self.energy_tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimResult {
    pub params: ModelParams,
    pub ansatz: PolaronAnsatz,
    pub energy: f64,
    pub converged: bool,
    pub iterations: usize,
    pub start_index: usize,
    pub grad_norm: f64,
}

/// JSON form: the ansatz document plus optimizer metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimDocument {
    pub n_pairs: usize,
    pub params: ModelParams,
    pub packets_1: Vec<GaussianPacket>,
    pub packets_3: Vec<GaussianPacket>,
    pub energy: f64,
    pub converged: bool,
    pub iterations: usize,
    pub start_index: usize,
    pub grad_norm: f64,
}

impl OptimResult {
    pub fn to_document(&self) -> OptimDocument {
        OptimDocument {
            n_pairs: self.ansatz.n_pairs(),
            params: self.params,
            packets_1: self.ansatz.packets_1().to_vec(),
            packets_3: self.ansatz.packets_3().to_vec(),
            energy: self.energy,
            converged: self.converged,
            iterations: self.iterations,
            start_index: self.start_index,
            grad_norm: self.grad_norm,
        }
    }

    pub fn from_document(doc: OptimDocument) -> Result<Self> {
        doc.params.validate()?;
        Ok(Self {
            params: doc.params,
            ansatz: PolaronAnsatz::new(doc.n_pairs, doc.packets_1, doc.packets_3)?,
            energy: doc.energy,
            converged: doc.converged,
            iterations: doc.iterations,
            start_index: doc.start_index,
            grad_norm: doc.grad_norm,
        })
    }
}

fn pair(left: (f64, f64, f64), right: (f64, f64, f64)) -> [GaussianPacket; 2] {
    [
        GaussianPacket { coeff: left.0, eps: left.1, center: left.2 },
        GaussianPacket { coeff: right.0, eps: right.1, center: right.2 },
    ]
}

/// Deterministic starting states.
///
/// 0: un-displaced packets in both components (weak coupling).
/// 1: ψ₁ packets at the wells ∓2g' with ψ₃ suppressed (strong coupling;
///    exact for Ω = 0, where ψ₃ and the anti-polaron amplitudes are zero).
/// 2..: mixtures drawn from a generator seeded by `(seed, index)`, so the
///    first k starts do not depend on `n_starts`.
pub fn default_starts(params: &ModelParams, config: &OptimConfig) -> Vec<PolaronAnsatz> {
    let n = config.n_pairs;
    let d = params.well_offset();
    let tunnels = params.tunneling > 0.0;
    let small = if tunnels { 0.05 } else { 0.0 };
    (0..config.n_starts)
        .map(|idx| {
            let (p1, p3): (Vec<GaussianPacket>, Vec<GaussianPacket>) = match idx {
                0 => {
                    let mut p1 = Vec::new();
                    let mut p3 = Vec::new();
                    for i in 0..n {
                        let off = 0.2 * (i + 1) as f64;
                        let c = if i == 0 { 1.0 } else { 0.1 };
                        p1.extend(pair((c, 1.0, -off - 0.5 * d), (c, 1.0, off - 0.5 * d)));
                        p3.extend(pair((c, 1.0, -off), (c, 1.0, off)));
                    }
                    (p1, p3)
                }
                1 => {
                    let mut p1 = Vec::new();
                    let mut p3 = Vec::new();
                    for i in 0..n {
                        let shift = 0.3 * i as f64;
                        let lead = if i == 0 { 1.0 } else { small };
                        p1.extend(pair((lead, 1.0, -d + shift), (small, 1.0, d - shift)));
                        let off = 0.3 * (i + 1) as f64;
                        p3.extend(pair((small, 1.0, -off), (small, 1.0, off)));
                    }
                    (p1, p3)
                }
                _ => {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                    let t: f64 = rng.random_range(0.0..1.0);
                    let mut p1 = Vec::new();
                    let mut p3 = Vec::new();
                    for i in 0..n {
                        let mut jitter = || rng.random_range(-0.5f64..0.5);
                        let e1 = jitter().exp();
                        let e2 = jitter().exp();
                        let e3 = jitter().exp();
                        let left = -t * d + 0.6 * jitter();
                        let right = t * d + 0.6 * jitter();
                        let width = 0.3 + (1.0 - t) * 0.5 * d.min(2.0) + 0.4 * jitter().abs();
                        let lead = if i == 0 { 1.0 } else { 0.2 + 0.2 * jitter() };
                        let anti = if tunnels { 0.1 + 0.2 * jitter().abs() } else { 0.0 };
                        let mixed = if tunnels { (1.0 - t) + 0.05 } else { 0.0 };
                        p1.extend(pair((lead, e1, left), (anti, e2, right)));
                        p3.extend(pair((mixed, e3, -width), (mixed, e3, width)));
                    }
                    (p1, p3)
                }
            };
            PolaronAnsatz::new(n, p1, p3).expect("start packets are valid")
        })
        .collect()
}

struct StartOutcome {
    ansatz: PolaronAnsatz,
    energy: f64,
    grad_norm: f64,
    iterations: usize,
}

/// Best local minimum over all starts.
pub fn minimize(params: &ModelParams, config: &OptimConfig) -> Result<OptimResult> {
    params.validate()?;
    config.validate()?;
    let starts = default_starts(params, config);
    let outcomes: Vec<Result<StartOutcome>> = starts
        .par_iter()
        .map(|start| run_start(params, config, start))
        .collect();

    let mut best: Option<(usize, StartOutcome)> = None;
    let mut first_err = None;
    for (idx, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(o) => {
                let better = match &best {
                    None => true,
                    Some((_, b)) => o.energy < b.energy - TIE_TOL,
                };
                if better {
                    best = Some((idx, o));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some((start_index, o)) = best else {
        return Err(first_err.unwrap_or_else(|| Error::Numeric("no optimizer start produced a result".into())));
    };
    let result = OptimResult {
        params: *params,
        converged: o.grad_norm <= grad_tol(o.energy),
        ansatz: o.ansatz,
        energy: o.energy,
        iterations: o.iterations,
        start_index,
        grad_norm: o.grad_norm,
    };
    if result.converged {
        Ok(result)
    } else {
        Err(Error::NotConverged { energy: result.energy, best: Box::new(result) })
    }
}

fn run_start(params: &ModelParams, config: &OptimConfig, start: &PolaronAnsatz) -> Result<StartOutcome> {
    let mut shape = start.normalize()?;
    let objective = |s: &PolaronAnsatz, x: &[f64]| -> f64 {
        s.with_params(x).and_then(|a| a.energy(params)).unwrap_or(f64::INFINITY)
    };

    let simplex_budget = (config.max_iters / 4).max(1);
    let x0 = shape.to_params();
    let nm = nelder_mead(|x| objective(&shape, x), &x0, 0.1, simplex_budget, config.energy_tol);
    let mut iterations = nm.iterations;
    shape = shape.with_params(&nm.x)?.normalize()?;

    let mut grad_norm = f64::INFINITY;
    for _round in 0..12 {
        let budget = config.max_iters.saturating_sub(iterations).max(1);
        let x0 = shape.to_params();
        let tol = 0.1 * grad_tol(shape.energy(params)?);
        let fg = |x: &[f64]| -> (f64, Vec<f64>) {
            match shape.with_params(x).and_then(|a| a.energy_and_gradient(params)) {
                Ok(v) => v,
                Err(_) => (f64::INFINITY, vec![0.0; x.len()]),
            }
        };
        let run = bfgs(fg, &x0, budget, config.energy_tol, tol);
        iterations += run.iterations;
        shape = shape.with_params(&run.x)?.normalize()?;
        grad_norm = norm(&shape.energy_gradient(params)?);
        let merged = merge_duplicates(&mut shape);
        if (!merged && grad_norm <= grad_tol(run.f)) || iterations >= config.max_iters {
            break;
        }
        shape = shape.normalize()?;
        grad_norm = norm(&shape.energy_gradient(params)?);
    }
    if grad_norm > grad_tol(shape.energy(params)?) {
        let tol = 0.1 * grad_tol(shape.energy(params)?);
        let fg = |x: &[f64]| -> (f64, Vec<f64>) {
            match shape.with_params(x).and_then(|a| a.energy_and_gradient(params)) {
                Ok(v) => v,
                Err(_) => (f64::INFINITY, vec![0.0; x.len()]),
            }
        };
        let run = newton(fg, &shape.to_params(), NEWTON_STEPS, tol);
        iterations += run.iterations;
        let polished = shape.with_params(&run.x)?.normalize()?;
        let polished_grad = norm(&polished.energy_gradient(params)?);
        if polished_grad < grad_norm {
            shape = polished;
            grad_norm = polished_grad;
        }
    }
    let energy = shape.energy(params)?;
    Ok(StartOutcome { ansatz: shape, energy, grad_norm, iterations })
}

/// Collapses packets that share (ε, center) within [`MERGE_TOL`]; the
/// duplicate keeps its shape but loses its amplitude.
fn merge_duplicates(ansatz: &mut PolaronAnsatz) -> bool {
    let mut merged = false;
    for which in 0..2 {
        let list = if which == 0 { ansatz.packets_1_mut() } else { ansatz.packets_3_mut() };
        for i in 0..list.len() {
            for j in (i + 1)..list.len() {
                let (a, b) = (list[i], list[j]);
                if b.coeff != 0.0 && (a.eps - b.eps).abs() <= MERGE_TOL && (a.center - b.center).abs() <= MERGE_TOL {
                    list[i].coeff += b.coeff;
                    list[j].coeff = 0.0;
                    list[j].center += 0.5;
                    merged = true;
                }
            }
        }
    }
    merged
}

/// Absolute gradient tolerance at energy `e`.
pub fn grad_tol(e: f64) -> f64 {
    GRAD_TOL * e.abs().max(1.0)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Clone, Debug)]
pub struct LocalMin {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
}

/// Damped Newton iteration on a central-difference Hessian of the analytic
/// gradient. Curvatures enter as `max(|λ|, floor)`, so flat and negative
/// directions still give descent.
pub fn newton<F: Fn(&[f64]) -> (f64, Vec<f64>)>(fg: F, x0: &[f64], max_iters: usize, gtol: f64) -> LocalMin {
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = fg(&x);
    let mut iterations = 0;
    while iterations < max_iters && norm(&g) > gtol {
        iterations += 1;
        let mut hess = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let h = 1e-5 * x[j].abs().max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let (gp, gm) = (fg(&xp).1, fg(&xm).1);
            for i in 0..n {
                hess[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        if !hess.iter().all(|v| v.is_finite()) {
            break;
        }
        let eig = SymmetricEigen::new(hess);
        let scale = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let floor = (1e-8 * scale).max(1e-12);
        let grad = DVector::from_column_slice(&g);
        let mut dir = DVector::<f64>::zeros(n);
        for (k, lambda) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(k);
            dir -= v * (v.dot(&grad) / lambda.abs().max(floor));
        }
        let slope = dir.dot(&grad);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xn: Vec<f64> = x.iter().zip(dir.iter()).map(|(a, d)| a + step * d).collect();
            let (fnew, gnew) = fg(&xn);
            if fnew.is_finite() && fnew <= fx + 1e-4 * step * slope.min(0.0) {
                accepted = Some((xn, fnew, gnew));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            break;
        };
        x = xn;
        fx = fnew;
        g = gnew;
    }
    LocalMin { x, f: fx, iterations }
}

/// Nelder-Mead with dimension-adapted coefficients.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], step: f64, max_iters: usize, ftol: f64) -> LocalMin {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for k in 0..n {
        let mut p = x0.to_vec();
        p[k] += if p[k].abs() > 1e-3 { step * p[k].abs().max(0.25) } else { step };
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut iterations = 0;

    while iterations < max_iters {
        iterations += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = (vals[n] - vals[0]).abs();
        if spread <= ftol * vals[0].abs().max(1.0) {
            break;
        }

        let mut centroid = vec![0.0; n];
        for p in &pts[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&pts[n]).map(|(c, w)| c + t * (c - w)).collect() };

        let xr = along(alpha);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(beta);
            let fe = f(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let xc = along(gamma);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = along(-gamma);
            let fc = f(&xc);
            (xc, fc)
        };
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        for k in 1..=n {
            let shrunk: Vec<f64> = pts[0].iter().zip(&pts[k]).map(|(b, p)| b + delta * (p - b)).collect();
            vals[k] = f(&shrunk);
            pts[k] = shrunk;
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b))).unwrap();
    LocalMin { x: pts[best].clone(), f: vals[best], iterations }
}

/// BFGS with backtracking Armijo steps on an inverse-Hessian approximation.
/// Stops on a vanishing gradient or after several iterations whose relative
/// energy change stays below `ftol`.
pub fn bfgs<F: Fn(&[f64]) -> (f64, Vec<f64>)>(fg: F, x0: &[f64], max_iters: usize, ftol: f64, gtol: f64) -> LocalMin {
    let n = x0.len();
    let identity = |scale: f64| -> Vec<f64> {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = scale;
        }
        h
    };
    let mut x = x0.to_vec();
    let (mut fx, mut g) = fg(&x);
    let mut h = identity(1.0);
    let mut first = true;
    let mut stalls = 0;
    let mut iterations = 0;

    while iterations < max_iters {
        if norm(&g) <= gtol {
            break;
        }
        iterations += 1;
        let mut dir: Vec<f64> = (0..n).map(|i| -(0..n).map(|j| h[i * n + j] * g[j]).sum::<f64>()).collect();
        let mut slope: f64 = dir.iter().zip(&g).map(|(d, gi)| d * gi).sum();
        if !(slope < 0.0) {
            h = identity(1.0);
            dir = g.iter().map(|v| -v).collect();
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (fnew, gnew) = fg(&xn);
            if fnew.is_finite() && fnew <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fnew, gnew));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            if first {
                break;
            }
            // Lost descent: restart from steepest descent once.
            h = identity(1.0);
            first = true;
            continue;
        };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-14 * norm(&s) * norm(&y) && sy > 0.0 {
            if first {
                let yy: f64 = y.iter().map(|v| v * v).sum();
                h = identity(sy / yy);
                first = false;
            }
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i * n + j] * y[j]).sum()).collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }

        let change = (fx - fnew).abs();
        x = xn;
        g = gnew;
        let prev = fx;
        fx = fnew;
        if change <= ftol * prev.abs().max(1.0) {
            stalls += 1;
            if stalls >= 5 && norm(&g) <= 10.0 * gtol {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    LocalMin { x, f: fx, iterations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ed::converged_ground;

    fn params(omega: f64, big: f64, g: f64) -> ModelParams {
        ModelParams::new(omega, big, g).unwrap()
    }

    #[test]
    fn nelder_mead_quadratic() {
        let r = nelder_mead(|x| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2), &[0.0, 0.0], 0.5, 2000, 1e-16);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] + 2.0).abs() < 1e-6);
    }

    #[test]
    fn bfgs_rosenbrock() {
        let fg = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            (f, g)
        };
        let r = bfgs(fg, &[-1.2, 1.0], 2000, 1e-16, 1e-12);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn newton_ill_conditioned_quadratic() {
        let fg = |x: &[f64]| {
            let (a, b) = (x[0] - 1.0, x[1] + 2.0);
            (0.5 * (a * a + 1e-6 * b * b), vec![a, 1e-6 * b])
        };
        let r = newton(fg, &[5.0, 7.0], 20, 1e-14);
        assert!((r.x[0] - 1.0).abs() < 1e-10 && (r.x[1] + 2.0).abs() < 1e-6, "{:?}", r.x);
        assert!(r.iterations <= 3);
    }

    #[test]
    fn start_count_and_prefix_stability() {
        let p = params(1.0, 2.0, 0.5);
        let a = default_starts(&p, &OptimConfig { n_starts: 5, ..Default::default() });
        let b = default_starts(&p, &OptimConfig { n_starts: 8, ..Default::default() });
        assert_eq!(a.len(), 5);
        assert_eq!(b.len(), 8);
        assert_eq!(a[..], b[..5]);
    }

    #[test]
    fn bipolaron_start_is_exact_without_tunneling() {
        let p = params(1.0, 0.0, 0.5);
        let cfg = OptimConfig { n_pairs: 1, ..Default::default() };
        let start = &default_starts(&p, &cfg)[1];
        assert!((start.energy(&p).unwrap() + 1.0).abs() < 1e-14);
        assert!(crate::ansatz::PolaronAnsatz::norm_sq(start) > 0.0);
    }

    #[test]
    fn decoupled_limit() {
        let p = params(1.0, 1.0, 0.0);
        let r = minimize(&p, &OptimConfig { n_pairs: 1, ..Default::default() }).unwrap();
        assert!((r.energy + 1.0).abs() < 1e-8, "{}", r.energy);
        assert!(r.converged);
    }

    #[test]
    fn no_tunneling_limit() {
        let p = params(1.0, 0.0, 0.5);
        let r = minimize(&p, &OptimConfig { n_pairs: 1, ..Default::default() }).unwrap();
        assert!((r.energy + 1.0).abs() < 1e-8, "{}", r.energy);
        let o = crate::observables::from_ansatz(&r.ansatz, &p).unwrap();
        assert!(o.probs[2] < 1e-10);
    }

    #[test]
    fn near_gc_matches_ed() {
        let base = params(1.0, 10.0, 0.0);
        let p = base.with_g(base.g_c());
        let r = minimize(&p, &OptimConfig::default()).unwrap();
        let ed = converged_ground(&p, 1e-10).unwrap();
        let rel = (r.energy - ed.energy).abs() / ed.energy.abs();
        assert!(rel < 1e-3, "rel error {rel}");
        assert!(r.energy >= ed.energy - 1e-8);
        assert!(norm(&r.ansatz.energy_gradient(&p).unwrap()) <= grad_tol(r.energy));
    }

    #[test]
    fn deterministic_given_seed() {
        let p = params(1.0, 2.0, 0.8);
        let cfg = OptimConfig { n_pairs: 1, n_starts: 4, seed: 17, ..Default::default() };
        let a = minimize(&p, &cfg).unwrap();
        let b = minimize(&p, &cfg).unwrap();
        assert_eq!(a.energy.to_bits(), b.energy.to_bits());
        assert_eq!(a.ansatz, b.ansatz);
        assert_eq!(a.start_index, b.start_index);
    }

    #[test]
    fn more_starts_never_worse() {
        let p = params(1.0, 1.0, 0.9);
        let mut prev = f64::INFINITY;
        for n_starts in [1, 2, 4, 6] {
            let cfg = OptimConfig { n_pairs: 1, n_starts, seed: 3, ..Default::default() };
            let e = match minimize(&p, &cfg) {
                Ok(r) => r.energy,
                Err(Error::NotConverged { best, .. }) => best.energy,
                Err(e) => panic!("{e}"),
            };
            assert!(e <= prev + TIE_TOL, "{n_starts}: {e} > {prev}");
            prev = e;
        }
    }

    #[test]
    fn merge_collapses_duplicates() {
        let mut a = PolaronAnsatz::new(
            1,
            vec![GaussianPacket { coeff: 0.4, eps: 1.0, center: 0.3 }, GaussianPacket { coeff: 0.6, eps: 1.0, center: 0.3 }],
            vec![],
        )
        .unwrap();
        let before = a.norm_sq();
        assert!(merge_duplicates(&mut a));
        assert_eq!(a.packets_1()[0].coeff, 1.0);
        assert_eq!(a.packets_1()[1].coeff, 0.0);
        assert!((a.norm_sq() - before).abs() < 1e-15);
    }

    #[test]
    fn invalid_config() {
        let p = params(1.0, 1.0, 0.1);
        assert!(minimize(&p, &OptimConfig { n_pairs: 0, ..Default::default() }).is_err());
        assert!(minimize(&p, &OptimConfig { n_starts: 0, ..Default::default() }).is_err());
        assert!(minimize(&p, &OptimConfig { energy_tol: 0.0, ..Default::default() }).is_err());
    }

    #[test]
    fn result_json_round_trip() {
        let p = params(1.0, 1.0, 0.0);
        let r = minimize(&p, &OptimConfig { n_pairs: 1, n_starts: 2, ..Default::default() }).unwrap();
        let text = serde_json::to_string(&r.to_document()).unwrap();
        let back = OptimResult::from_document(serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
