//! Ground-state observables from either representation.
//!
//! Tunneling components follow the overlap definitions
//! `σ¹ₓ₁ = ¼⟨ψ₁|ψ₄⟩, σ¹ₓ₂ = ¼⟨ψ₂|ψ₃⟩, σ¹ₓ₃ = ¼⟨ψ₃|ψ₂⟩, σ¹ₓ₄ = ¼⟨ψ₄|ψ₁⟩` and
//! `σ²ₓ₁ = ¼⟨ψ₁|ψ₃⟩, σ²ₓ₂ = ¼⟨ψ₂|ψ₄⟩, σ²ₓ₃ = ¼⟨ψ₄|ψ₂⟩, σ²ₓ₄ = ¼⟨ψ₃|ψ₁⟩`.
//! They are positive in the ground state; the physical
//! `⟨σ¹ₓ + σ²ₓ⟩` equals minus their sum because of the signs in Ψ.

use serde::{Deserialize, Serialize};

use crate::ansatz::{gram, reflect_all, PolaronAnsatz};
use crate::ed::{converged_ground, GroundState};
use crate::error::{Error, Result};
use crate::model::ModelParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableSet {
    pub energy: f64,
    pub mean_photon: f64,
    pub tunneling_total: f64,
    pub zz_corr: f64,
    pub probs: [f64; 4],
    pub sigma1_components: [f64; 4],
    pub sigma2_components: [f64; 4],
}

impl ObservableSet {
    /// Column names matching [`Self::values`].
    pub const FIELDS: [&'static str; 16] = [
        "energy",
        "mean_photon",
        "tunneling_total",
        "zz_corr",
        "p1",
        "p2",
        "p3",
        "p4",
        "sx1_1",
        "sx1_2",
        "sx1_3",
        "sx1_4",
        "sx2_1",
        "sx2_2",
        "sx2_3",
        "sx2_4",
    ];

    pub fn values(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        out[0] = self.energy;
        out[1] = self.mean_photon;
        out[2] = self.tunneling_total;
        out[3] = self.zz_corr;
        out[4..8].copy_from_slice(&self.probs);
        out[8..12].copy_from_slice(&self.sigma1_components);
        out[12..16].copy_from_slice(&self.sigma2_components);
        out
    }
}

/// Observables of a polaron ansatz (normalized internally).
pub fn from_ansatz(ansatz: &PolaronAnsatz, params: &ModelParams) -> Result<ObservableSet> {
    let a = ansatz.normalize()?;
    let energy = a.energy(params)?;
    let p1 = a.packets_1();
    let p3 = a.packets_3();
    let p4 = reflect_all(p3);

    let n11 = gram(p1, p1, |m| m.overlap);
    let n33 = gram(p3, p3, |m| m.overlap);
    let ov13 = gram(p1, p3, |m| m.overlap);
    let ov14 = gram(p1, &p4, |m| m.overlap);

    // ψ₂, ψ₄ are mirror images, and ½(x²+p²) is reflection invariant.
    let mean_photon = 0.5 * (gram(p1, p1, |m| m.number()) + gram(p3, p3, |m| m.number()));
    let zz_corr = std::f64::consts::SQRT_2 * gram(p1, p1, |m| m.x);

    let s1 = 0.25 * ov14;
    let s2 = 0.25 * ov13;
    let out = ObservableSet {
        energy,
        mean_photon,
        tunneling_total: -(ov13 + ov14),
        zz_corr,
        probs: [0.25 * n11, 0.25 * n11, 0.25 * n33, 0.25 * n33],
        sigma1_components: [s1; 4],
        sigma2_components: [s2; 4],
    };
    check(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Observables of a Fock-basis state evaluated with ladder-operator
/// matrix elements in the truncated basis.
pub fn from_fock(ground: &GroundState, params: &ModelParams) -> Result<ObservableSet> {
    params.validate()?;
    let uu = ground.block(0);
    let ud = ground.block(1);
    let du = ground.block(2);
    let dd = ground.block(3);
    let n_max = ground.n_max;

    let mut mean_photon = 0.0;
    let mut zz_corr = 0.0;
    for n in 0..=n_max {
        let w = n as f64;
        mean_photon += w * (uu[n] * uu[n] + ud[n] * ud[n] + du[n] * du[n] + dd[n] * dd[n]);
        if n < n_max {
            let l = ((n + 1) as f64).sqrt();
            zz_corr += 4.0 * l * (uu[n] * uu[n + 1] - dd[n] * dd[n + 1]);
        }
    }
    let probs = [dot(&uu, &uu), dot(&dd, &dd), dot(&ud, &ud), dot(&du, &du)];

    // ψ₁ = 2uu, ψ₂ = 2dd, ψ₃ = −2ud, ψ₄ = −2du
    let s1 = [-dot(&uu, &du), -dot(&dd, &ud), -dot(&ud, &dd), -dot(&du, &uu)];
    let s2 = [-dot(&uu, &ud), -dot(&dd, &du), -dot(&du, &dd), -dot(&ud, &uu)];
    let tunneling_total = -(s1.iter().sum::<f64>() + s2.iter().sum::<f64>());

    let out = ObservableSet {
        energy: ground.energy,
        mean_photon,
        tunneling_total,
        zz_corr,
        probs,
        sigma1_components: s1,
        sigma2_components: s2,
    };
    check(out)
}

fn check(o: ObservableSet) -> Result<ObservableSet> {
    if o.values().iter().all(|v| v.is_finite()) {
        Ok(o)
    } else {
        Err(Error::Numeric(format!("non-finite observable in {o:?}")))
    }
}

/// Potentials seen by the field in each qubit basis state,
/// `[V_↑↑, V_↑↓, V_↓↑, V_↓↓]`, with `V_↑↑ = (ω/2)x² + 2ωg'x = (ω/2)(x+2g')² − 2ωg'²`.
pub fn potential_curves(params: &ModelParams, x_grid: &[f64]) -> Result<[Vec<f64>; 4]> {
    params.validate()?;
    if x_grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParams("potential grid contains non-finite points".into()));
    }
    let w = params.omega;
    let k = 2.0 * w * params.g_prime();
    let base: Vec<f64> = x_grid.iter().map(|x| 0.5 * w * x * x).collect();
    let up: Vec<f64> = x_grid.iter().zip(&base).map(|(x, b)| b + k * x).collect();
    let down: Vec<f64> = x_grid.iter().zip(&base).map(|(x, b)| b - k * x).collect();
    Ok([up, base.clone(), base, down])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossoverSample {
    pub g: f64,
    pub p3: f64,
}

/// Smallest g at which sampled `P₃(g)` drops below `threshold`, linearly
/// interpolated between the bracketing samples. `Ok(None)` when it never does.
pub fn crossover_point(samples: &[CrossoverSample], threshold: f64) -> Result<Option<f64>> {
    if !(threshold > 0.0 && threshold < 0.25) {
        return Err(Error::InvalidParams(format!("threshold must lie in (0, 1/4), got {threshold}")));
    }
    let Some(idx) = samples.iter().position(|s| s.p3 < threshold) else {
        return Ok(None);
    };
    if idx == 0 {
        return Ok(Some(samples[0].g));
    }
    let (a, b) = (samples[idx - 1], samples[idx]);
    let t = (a.p3 - threshold) / (a.p3 - b.p3);
    Ok(Some(a.g + t * (b.g - a.g)))
}

/// `P₃(g)` from converged exact diagonalization at fixed (ω, Ω).
pub fn p3_curve_ed(base: &ModelParams, g_grid: &[f64], tol: f64) -> Result<Vec<CrossoverSample>> {
    use rayon::prelude::*;
    g_grid
        .par_iter()
        .map(|&g| {
            let p = base.with_g(g);
            let gs = converged_ground(&p, tol)?;
            let o = from_fock(&gs, &p)?;
            Ok(CrossoverSample { g, p3: o.probs[2] })
        })
        .collect()
}
