//! Closed-form algebra of displaced, width-renormalized Gaussian packets.
//!
//! A packet carries an amplitude `coeff` and describes
//! `coeff · φ(x)` with the unit-norm profile
//! `φ(x) = (ε/π)^{1/4} exp(-ε (x - c)² / 2)`.
//! The pair integrals below never include the amplitudes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest Fock cutoff accepted by [`project_to_fock`].
pub const MAX_FOCK_PROJECTION: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacket {
    pub coeff: f64,
    pub eps: f64,
    pub center: f64,
}

impl GaussianPacket {
    pub fn new(coeff: f64, eps: f64, center: f64) -> Result<Self> {
        let p = Self { coeff, eps, center };
        p.validate()?;
        Ok(p)
    }

    /// Unit-amplitude packet.
    pub fn unit(eps: f64, center: f64) -> Self {
        Self { coeff: 1.0, eps, center }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::InvalidParams(format!("packet eps must be finite and > 0, got {}", self.eps)));
        }
        if !(self.coeff.is_finite() && self.center.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite packet {self:?}")));
        }
        Ok(())
    }

    /// Mirror image `x -> -x`.
    pub fn reflected(&self) -> Self {
        Self { center: -self.center, ..*self }
    }

    /// Unweighted profile `φ(x)`.
    pub fn profile(&self, x: f64) -> f64 {
        let u = x - self.center;
        (self.eps / std::f64::consts::PI).powf(0.25) * (-0.5 * self.eps * u * u).exp()
    }

    /// `coeff · φ(x)`.
    pub fn value(&self, x: f64) -> f64 {
        self.coeff * self.profile(x)
    }
}

/// Matrix elements `⟨φ_a| O |φ_b⟩` for `O ∈ {1, x, x², p²}`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairMoments {
    pub overlap: f64,
    pub x: f64,
    pub x2: f64,
    pub p2: f64,
}

impl PairMoments {
    /// `(ω/2) ⟨p² + (x + shift)²⟩`
    pub fn displaced_h(&self, shift: f64, omega: f64) -> f64 {
        0.5 * omega * (self.p2 + self.x2 + 2.0 * shift * self.x + shift * shift * self.overlap)
    }

    /// `⟨½(x² + p²) - ½⟩`, the number operator.
    pub fn number(&self) -> f64 {
        0.5 * (self.x2 + self.p2) - 0.5 * self.overlap
    }
}

/// Derivatives of [`PairMoments`] with respect to the first packet's
/// `ln ε` and center.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairGradient {
    pub d_log_eps: PairMoments,
    pub d_center: PairMoments,
}

/// Shared Gaussian-product quantities: `s = ε_a+ε_b`, `q = ε_aε_b`, `d = c_a-c_b`,
/// product center `m`.
struct Product {
    s: f64,
    q: f64,
    d: f64,
    m: f64,
    overlap: f64,
}

#[inline]
fn product(a: &GaussianPacket, b: &GaussianPacket) -> Product {
    let s = a.eps + b.eps;
    let q = a.eps * b.eps;
    let d = a.center - b.center;
    let m = (a.eps * a.center + b.eps * b.center) / s;
    let overlap = (2.0 * q.sqrt() / s).sqrt() * (-0.5 * q * d * d / s).exp();
    Product { s, q, d, m, overlap }
}

/// All four pair moments at once; no validation.
#[inline]
pub fn pair_moments(a: &GaussianPacket, b: &GaussianPacket) -> PairMoments {
    let Product { s, q, d, m, overlap } = product(a, b);
    let u = q / s;
    PairMoments {
        overlap,
        x: overlap * m,
        x2: overlap * (m * m + 1.0 / s),
        p2: overlap * (u - u * u * d * d),
    }
}

/// Pair moments together with their derivatives in the first packet's
/// `ln ε` and center.
pub fn pair_moments_with_gradient(a: &GaussianPacket, b: &GaussianPacket) -> (PairMoments, PairGradient) {
    let Product { s, q, d, m, overlap: ov } = product(a, b);
    let (ea, eb) = (a.eps, b.eps);
    let u = q / s;
    let poly_p = u - u * u * d * d;
    let mom = PairMoments {
        overlap: ov,
        x: ov * m,
        x2: ov * (m * m + 1.0 / s),
        p2: ov * poly_p,
    };

    // ∂/∂ε_a
    let dlnov_de = 0.25 / ea - 0.5 / s - 0.5 * eb * eb * d * d / (s * s);
    let dov_de = ov * dlnov_de;
    let dm_de = eb * d / (s * s);
    let du_de = eb * eb / (s * s);
    let de = PairMoments {
        overlap: dov_de,
        x: dov_de * m + ov * dm_de,
        x2: dov_de * (m * m + 1.0 / s) + ov * (2.0 * m * dm_de - 1.0 / (s * s)),
        p2: dov_de * poly_p + ov * (du_de - 2.0 * u * du_de * d * d),
    };

    // ∂/∂c_a
    let dov_dc = -ov * q * d / s;
    let dm_dc = ea / s;
    let dc = PairMoments {
        overlap: dov_dc,
        x: dov_dc * m + ov * dm_dc,
        x2: dov_dc * (m * m + 1.0 / s) + ov * 2.0 * m * dm_dc,
        p2: dov_dc * poly_p - ov * u * u * 2.0 * d,
    };

    let scale = |p: PairMoments, k: f64| PairMoments {
        overlap: p.overlap * k,
        x: p.x * k,
        x2: p.x2 * k,
        p2: p.p2 * k,
    };
    (mom, PairGradient { d_log_eps: scale(de, ea), d_center: dc })
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric(format!("{what} evaluated to {v}")))
    }
}

fn checked(a: &GaussianPacket, b: &GaussianPacket) -> Result<PairMoments> {
    a.validate()?;
    b.validate()?;
    Ok(pair_moments(a, b))
}

/// `∫ φ_a φ_b dx`
pub fn overlap(a: &GaussianPacket, b: &GaussianPacket) -> Result<f64> {
    finite(checked(a, b)?.overlap, "overlap")
}

/// `⟨φ_a| x |φ_b⟩`
pub fn mel_x(a: &GaussianPacket, b: &GaussianPacket) -> Result<f64> {
    finite(checked(a, b)?.x, "<x>")
}

/// `⟨φ_a| x² |φ_b⟩`
pub fn mel_x2(a: &GaussianPacket, b: &GaussianPacket) -> Result<f64> {
    finite(checked(a, b)?.x2, "<x^2>")
}

/// `⟨φ_a| p² |φ_b⟩`
pub fn mel_p2(a: &GaussianPacket, b: &GaussianPacket) -> Result<f64> {
    finite(checked(a, b)?.p2, "<p^2>")
}

/// `⟨φ_a| (ω/2)(p² + (x + shift)²) |φ_b⟩`
pub fn displaced_h(a: &GaussianPacket, b: &GaussianPacket, shift: f64, omega: f64) -> Result<f64> {
    if !(shift.is_finite() && omega.is_finite()) {
        return Err(Error::InvalidParams(format!("shift={shift}, omega={omega}")));
    }
    finite(checked(a, b)?.displaced_h(shift, omega), "displaced oscillator element")
}

/// Fock amplitudes `⟨n|φ⟩`, `n = 0..=n_max`, of the unweighted packet.
///
/// Uses the ladder relation `[(ε+1) a + (ε-1) a†] φ = √2 ε c φ`, which gives
/// `(ε+1)√(n+1) c_{n+1} = √2 ε c c_n − (ε−1)√n c_{n−1}`, seeded with the
/// vacuum overlap.
pub fn project_to_fock(packet: &GaussianPacket, n_max: usize) -> Result<Vec<f64>> {
    packet.validate()?;
    if n_max > MAX_FOCK_PROJECTION {
        return Err(Error::Truncation {
            n_max,
            reason: format!("cutoff above {MAX_FOCK_PROJECTION}"),
        });
    }
    let eps = packet.eps;
    let c = packet.center;
    let vacuum = GaussianPacket::unit(1.0, 0.0);
    let c0 = pair_moments(&vacuum, &GaussianPacket::unit(eps, c)).overlap;
    if c0 == 0.0 || !c0.is_finite() {
        return Err(Error::Truncation {
            n_max,
            reason: format!("vacuum overlap underflows for eps={eps}, center={c}"),
        });
    }
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(c0);
    let drive = std::f64::consts::SQRT_2 * eps * c;
    for n in 0..n_max {
        let nf = n as f64;
        let prev = if n > 0 { out[n - 1] } else { 0.0 };
        let next = (drive * out[n] - (eps - 1.0) * nf.sqrt() * prev) / ((eps + 1.0) * (nf + 1.0).sqrt());
        out.push(next);
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite Fock projection".into()));
    }
    Ok(out)
}

/// Oscillator eigenfunctions `h_0(x) ..= h_{n_max}(x)` in dimensionless units.
pub fn hermite_functions(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp());
    if n_max >= 1 {
        out.push(std::f64::consts::SQRT_2 * x * out[0]);
    }
    for n in 1..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}
