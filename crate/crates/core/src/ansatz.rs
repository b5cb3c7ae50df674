//! Parity-constrained polaron trial state
//!
//! `Ψ = ½ [ψ₁|↑↑⟩ + ψ₂|↓↓⟩ − ψ₃|↑↓⟩ − ψ₄|↓↑⟩]` with `ψ₂(x) = ψ₁(−x)` and
//! `ψ₄(x) = ψ₃(−x)`. Only ψ₁ and ψ₃ are stored, each as a sum of Gaussian
//! packets (N pairs, i.e. up to 2N packets per component).
//!
//! Contracting H with Ψ under the parity constraint gives, with `k = 2g'`,
//!
//! ```text
//! ⟨Ψ|Ψ⟩   = ½ (⟨ψ₁|ψ₁⟩ + ⟨ψ₃|ψ₃⟩)
//! ⟨Ψ|H|Ψ⟩ = ½ ⟨ψ₁| (ω/2)(p² + x² + 2k x) − ω/2 |ψ₁⟩
//!         + ½ ⟨ψ₃| (ω/2)(p² + x²) − ω/2 |ψ₃⟩
//!         − (Ω/2) (⟨ψ₁|ψ₃⟩ + ⟨ψ₁|ψ₄⟩)
//! ```
//!
//! and the energy is the ratio of the two.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{pair_moments, pair_moments_with_gradient, project_to_fock, GaussianPacket, PairMoments};
use crate::model::ModelParams;

/// Parameters per packet in the flattened vector: coeff, ln ε, center.
pub const PARAMS_PER_PACKET: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct PolaronAnsatz {
    n_pairs: usize,
    packets_1: Vec<GaussianPacket>,
    packets_3: Vec<GaussianPacket>,
}

/// On-disk form of an ansatz together with the model it was built for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzDocument {
    pub n_pairs: usize,
    pub params: ModelParams,
    pub packets_1: Vec<GaussianPacket>,
    pub packets_3: Vec<GaussianPacket>,
}

impl PolaronAnsatz {
    pub fn new(n_pairs: usize, packets_1: Vec<GaussianPacket>, packets_3: Vec<GaussianPacket>) -> Result<Self> {
        if n_pairs == 0 {
            return Err(Error::InvalidParams("ansatz needs at least one pair".into()));
        }
        for (name, list) in [("psi_1", &packets_1), ("psi_3", &packets_3)] {
            if list.len() > 2 * n_pairs {
                return Err(Error::InvalidParams(format!(
                    "{name} has {} packets, more than 2N = {}",
                    list.len(),
                    2 * n_pairs
                )));
            }
            for p in list {
                p.validate()?;
            }
        }
        Ok(Self { n_pairs, packets_1, packets_3 })
    }

    /// Infers N from the longer component.
    pub fn from_components(packets_1: Vec<GaussianPacket>, packets_3: Vec<GaussianPacket>) -> Result<Self> {
        let n = packets_1.len().max(packets_3.len()).div_ceil(2).max(1);
        Self::new(n, packets_1, packets_3)
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn packets_1(&self) -> &[GaussianPacket] {
        &self.packets_1
    }

    pub fn packets_3(&self) -> &[GaussianPacket] {
        &self.packets_3
    }

    pub(crate) fn packets_1_mut(&mut self) -> &mut Vec<GaussianPacket> {
        &mut self.packets_1
    }

    pub(crate) fn packets_3_mut(&mut self) -> &mut Vec<GaussianPacket> {
        &mut self.packets_3
    }

    /// `ψ_index(x)` for index 1..=4; 2 and 4 are mirror images of 1 and 3.
    pub fn component(&self, index: usize, x: f64) -> Result<f64> {
        let sum = |list: &[GaussianPacket], x: f64| list.iter().map(|p| p.value(x)).sum::<f64>();
        match index {
            1 => Ok(sum(&self.packets_1, x)),
            2 => Ok(sum(&self.packets_1, -x)),
            3 => Ok(sum(&self.packets_3, x)),
            4 => Ok(sum(&self.packets_3, -x)),
            other => Err(Error::ComponentIndex(other)),
        }
    }

    /// `½(⟨ψ₁|ψ₁⟩ + ⟨ψ₃|ψ₃⟩)`
    pub fn norm_sq(&self) -> f64 {
        0.5 * (gram(&self.packets_1, &self.packets_1, |m| m.overlap)
            + gram(&self.packets_3, &self.packets_3, |m| m.overlap))
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm_sq();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::DegenerateAnsatz(n));
        }
        let k = 1.0 / n.sqrt();
        let mut out = self.clone();
        for p in out.packets_1.iter_mut().chain(out.packets_3.iter_mut()) {
            p.coeff *= k;
        }
        Ok(out)
    }

    /// Variational energy `⟨Ψ|H|Ψ⟩ / ⟨Ψ|Ψ⟩`.
    pub fn energy(&self, params: &ModelParams) -> Result<f64> {
        Ok(self.evaluate(params, false)?.0)
    }

    /// Gradient of [`Self::energy`] with respect to [`Self::to_params`].
    ///
    /// The energy is a Rayleigh quotient, so the gradient is orthogonal to
    /// the overall coefficient scaling.
    pub fn energy_gradient(&self, params: &ModelParams) -> Result<Vec<f64>> {
        Ok(self.evaluate(params, true)?.1.expect("gradient requested"))
    }

    pub fn energy_and_gradient(&self, params: &ModelParams) -> Result<(f64, Vec<f64>)> {
        let (e, g) = self.evaluate(params, true)?;
        Ok((e, g.expect("gradient requested")))
    }

    fn evaluate(&self, params: &ModelParams, want_grad: bool) -> Result<(f64, Option<Vec<f64>>)> {
        params.validate()?;
        let half_w = 0.5 * params.omega;
        let k = params.well_offset();
        let big = params.tunneling;
        let m1 = |m: &PairMoments| half_w * (m.p2 + m.x2 + 2.0 * k * m.x - m.overlap);
        let m3 = |m: &PairMoments| half_w * (m.p2 + m.x2 - m.overlap);

        let n1 = self.packets_1.len();
        let n3 = self.packets_3.len();
        let dim = PARAMS_PER_PACKET * (n1 + n3);
        let mut dq = vec![0.0; if want_grad { dim } else { 0 }];
        let mut dn = vec![0.0; if want_grad { dim } else { 0 }];
        let mut q = 0.0;
        let mut nrm = 0.0;

        for (block, list, kernel) in [
            (0usize, &self.packets_1, &m1 as &dyn Fn(&PairMoments) -> f64),
            (n1, &self.packets_3, &m3 as &dyn Fn(&PairMoments) -> f64),
        ] {
            for (i, a) in list.iter().enumerate() {
                for b in list.iter() {
                    let w = a.coeff * b.coeff;
                    if want_grad {
                        let (m, g) = pair_moments_with_gradient(a, b);
                        q += 0.5 * w * kernel(&m);
                        nrm += 0.5 * w * m.overlap;
                        let base = PARAMS_PER_PACKET * (block + i);
                        dq[base] += b.coeff * kernel(&m);
                        dn[base] += b.coeff * m.overlap;
                        dq[base + 1] += w * kernel(&g.d_log_eps);
                        dn[base + 1] += w * g.d_log_eps.overlap;
                        dq[base + 2] += w * kernel(&g.d_center);
                        dn[base + 2] += w * g.d_center.overlap;
                    } else {
                        let m = pair_moments(a, b);
                        q += 0.5 * w * kernel(&m);
                        nrm += 0.5 * w * m.overlap;
                    }
                }
            }
        }

        if big != 0.0 {
            let t = -0.5 * big;
            for (i, a) in self.packets_1.iter().enumerate() {
                for (r, b) in self.packets_3.iter().enumerate() {
                    let b_ref = b.reflected();
                    let w = a.coeff * b.coeff;
                    if want_grad {
                        let (direct, ga) = pair_moments_with_gradient(a, b);
                        let (mirror, ga_ref) = pair_moments_with_gradient(a, &b_ref);
                        let (_, gb) = pair_moments_with_gradient(b, a);
                        let (_, gb_ref) = pair_moments_with_gradient(&b_ref, a);
                        let s = direct.overlap + mirror.overlap;
                        q += t * w * s;
                        let ia = PARAMS_PER_PACKET * i;
                        let ib = PARAMS_PER_PACKET * (n1 + r);
                        dq[ia] += t * b.coeff * s;
                        dq[ib] += t * a.coeff * s;
                        dq[ia + 1] += t * w * (ga.d_log_eps.overlap + ga_ref.d_log_eps.overlap);
                        dq[ia + 2] += t * w * (ga.d_center.overlap + ga_ref.d_center.overlap);
                        dq[ib + 1] += t * w * (gb.d_log_eps.overlap + gb_ref.d_log_eps.overlap);
                        dq[ib + 2] += t * w * (gb.d_center.overlap - gb_ref.d_center.overlap);
                    } else {
                        q += t * w * (pair_moments(a, b).overlap + pair_moments(a, &b_ref).overlap);
                    }
                }
            }
        }

        if !(nrm.is_finite() && nrm > 0.0) {
            return Err(Error::DegenerateAnsatz(nrm));
        }
        let e = q / nrm;
        if !e.is_finite() {
            return Err(Error::Numeric(format!("energy evaluated to {e}")));
        }
        let grad = want_grad.then(|| dq.iter().zip(&dn).map(|(a, b)| (a - e * b) / nrm).collect());
        Ok((e, grad))
    }

    /// Flattened `[coeff, ln ε, center]` per packet, ψ₁ packets first.
    pub fn to_params(&self) -> Vec<f64> {
        self.packets_1
            .iter()
            .chain(&self.packets_3)
            .flat_map(|p| [p.coeff, p.eps.ln(), p.center])
            .collect()
    }

    /// Same shape as `self`, packet values taken from `params`.
    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        let n1 = self.packets_1.len();
        let expected = PARAMS_PER_PACKET * (n1 + self.packets_3.len());
        if params.len() != expected {
            return Err(Error::InvalidParams(format!(
                "parameter vector has length {}, expected {expected}",
                params.len()
            )));
        }
        let packets: Vec<GaussianPacket> = params
            .chunks_exact(PARAMS_PER_PACKET)
            .map(|c| GaussianPacket { coeff: c[0], eps: c[1].exp(), center: c[2] })
            .collect();
        for p in &packets {
            p.validate()?;
        }
        let packets_3 = packets[n1..].to_vec();
        let mut packets_1 = packets;
        packets_1.truncate(n1);
        Ok(Self { n_pairs: self.n_pairs, packets_1, packets_3 })
    }

    /// Component Fock amplitudes in the basis `index = 4n + s`,
    /// `s ∈ [↑↑, ↑↓, ↓↑, ↓↓]`, including the ½ and sign prefactors of Ψ.
    pub fn fock_amplitudes(&self, n_max: usize) -> Result<Vec<f64>> {
        let project = |list: &[GaussianPacket]| -> Result<Vec<f64>> {
            let mut acc = vec![0.0; n_max + 1];
            for p in list {
                for (a, v) in acc.iter_mut().zip(project_to_fock(p, n_max)?) {
                    *a += p.coeff * v;
                }
            }
            Ok(acc)
        };
        let f1 = project(&self.packets_1)?;
        let f3 = project(&self.packets_3)?;
        let mut out = vec![0.0; 4 * (n_max + 1)];
        for n in 0..=n_max {
            let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
            out[4 * n] = 0.5 * f1[n];
            out[4 * n + 1] = -0.5 * f3[n];
            out[4 * n + 2] = -0.5 * parity * f3[n];
            out[4 * n + 3] = 0.5 * parity * f1[n];
        }
        Ok(out)
    }

    pub fn to_document(&self, params: &ModelParams) -> AnsatzDocument {
        AnsatzDocument {
            n_pairs: self.n_pairs,
            params: *params,
            packets_1: self.packets_1.clone(),
            packets_3: self.packets_3.clone(),
        }
    }

    pub fn to_json(&self, params: &ModelParams) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document(params))?)
    }

    pub fn from_document(doc: AnsatzDocument) -> Result<(Self, ModelParams)> {
        doc.params.validate()?;
        Ok((Self::new(doc.n_pairs, doc.packets_1, doc.packets_3)?, doc.params))
    }

    pub fn from_json(text: &str) -> Result<(Self, ModelParams)> {
        Self::from_document(serde_json::from_str(text)?)
    }
}

/// `Σ_ij c_i c_j f(⟨φ_i|·|φ_j⟩)` over two packet lists.
pub(crate) fn gram<F: Fn(&PairMoments) -> f64>(a: &[GaussianPacket], b: &[GaussianPacket], f: F) -> f64 {
    let mut acc = 0.0;
    for p in a {
        for q in b {
            acc += p.coeff * q.coeff * f(&pair_moments(p, q));
        }
    }
    acc
}

pub(crate) fn reflect_all(list: &[GaussianPacket]) -> Vec<GaussianPacket> {
    list.iter().map(GaussianPacket::reflected).collect()
}
