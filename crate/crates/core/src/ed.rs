//! Exact diagonalization in a truncated Fock basis.
//!
//! Full basis ordering: `index = 4n + s` with
//! `s ∈ [↑↑, ↑↓, ↓↑, ↓↓]` and Fock number `n` ascending.
//!
//! The ground state is computed in the sector that is even under
//! `Π = σ_x¹σ_x² e^{iπa†a}` and symmetric under qubit exchange, spanned by
//!
//! ```text
//! A_n = (|↑↑,n⟩ + (−1)ⁿ|↓↓,n⟩)/√2          n = 0..=n_max
//! B_n = (|↑↓,n⟩ + |↓↑,n⟩)/√2               n even
//! ```
//!
//! with `⟨A_n|H|A_n⟩ = ⟨B_n|H|B_n⟩ = ωn`, `⟨A_{n+1}|H|A_n⟩ = 2g√(n+1)` and
//! `⟨B_n|H|A_n⟩ = Ω`. That matrix is tree-structured, so Sturm counts and
//! shifted solves are exact LDLᵀ eliminations without fill. Restricting to
//! the sector also removes the ground-state degeneracies at Ω = 0 and the
//! near-degeneracy with the odd sector at strong coupling.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::hermite_functions;
use crate::model::ModelParams;

/// Qubit basis labels in storage order.
pub const QUBIT_STATES: [&str; 4] = ["uu", "ud", "du", "dd"];

/// Largest cutoff for which [`FockHamiltonian::build`] allocates a dense matrix.
pub const MAX_DENSE_N: usize = 1024;
/// Largest cutoff accepted by [`ground_state`].
pub const MAX_SECTOR_N: usize = 1 << 16;
/// Default hard cap for [`converged_ground`].
pub const DEFAULT_N_CAP: usize = 4096;
/// Starting cutoff of the doubling sequence in [`converged_ground`].
pub const START_N: usize = 16;

#[derive(Clone, Debug)]
pub struct FockHamiltonian {
    pub params: ModelParams,
    pub n_max: usize,
    pub matrix: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundState {
    pub energy: f64,
    pub n_max: usize,
    pub amplitudes: Vec<f64>,
}

impl FockHamiltonian {
    /// Dense full-basis Hamiltonian; the upper triangle is filled and mirrored.
    pub fn build(params: &ModelParams, n_max: usize) -> Result<Self> {
        params.validate()?;
        if n_max > MAX_DENSE_N {
            return Err(Error::Truncation {
                n_max,
                reason: format!("dense matrix limited to n_max <= {MAX_DENSE_N}"),
            });
        }
        let dim = 4 * (n_max + 1);
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        let half = 0.5 * params.tunneling;
        let ladder = 2.0 * params.g;
        for n in 0..=n_max {
            let i = |s: usize| 4 * n + s;
            for s in 0..4 {
                m[(i(s), i(s))] = params.omega * n as f64;
            }
            // σ_x² flips the second qubit: ↑↑↔↑↓, ↓↑↔↓↓
            m[(i(0), i(1))] += half;
            m[(i(2), i(3))] += half;
            // σ_x¹ flips the first qubit: ↑↑↔↓↑, ↑↓↔↓↓
            m[(i(0), i(2))] += half;
            m[(i(1), i(3))] += half;
            if n < n_max {
                let a = ladder * ((n + 1) as f64).sqrt();
                m[(i(0), 4 * (n + 1))] = a;
                m[(i(3), 4 * (n + 1) + 3)] = -a;
            }
        }
        m.fill_lower_triangle_with_upper_triangle();
        Ok(Self { params: *params, n_max, matrix: m })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `vᵀ H v` for a full-basis vector.
    pub fn expectation(&self, v: &[f64]) -> f64 {
        let v = nalgebra::DVector::from_column_slice(v);
        v.dot(&(&self.matrix * &v))
    }

    /// All eigenvalues in ascending order from a dense symmetric solve.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut vals: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        vals
    }
}

/// Even-parity, exchange-symmetric block of H.
struct Sector {
    omega: f64,
    tunneling: f64,
    /// `ladder[n] = 2g√n` couples A_{n-1} and A_n; `ladder[0]` is unused.
    ladder: Vec<f64>,
    n_max: usize,
    with_mixed: bool,
}

impl Sector {
    fn new(params: &ModelParams, n_max: usize) -> Self {
        let ladder = (0..=n_max).map(|n| 2.0 * params.g * (n as f64).sqrt()).collect();
        Self {
            omega: params.omega,
            tunneling: params.tunneling,
            ladder,
            n_max,
            with_mixed: params.tunneling != 0.0,
        }
    }

    fn diag(&self, n: usize) -> f64 {
        self.omega * n as f64
    }

    fn has_mixed(&self, n: usize) -> bool {
        self.with_mixed && n % 2 == 0
    }

    /// Gershgorin lower bound of the spectrum.
    fn lower_bound(&self) -> f64 {
        let mut lo = f64::INFINITY;
        for n in 0..=self.n_max {
            let mut r = 0.0;
            if n > 0 {
                r += self.ladder[n].abs();
            }
            if n < self.n_max {
                r += self.ladder[n + 1].abs();
            }
            if self.has_mixed(n) {
                r += self.tunneling.abs();
                lo = lo.min(self.diag(n) - self.tunneling.abs());
            }
            lo = lo.min(self.diag(n) - r);
        }
        lo
    }

    /// Number of eigenvalues strictly below `shift`.
    fn count_below(&self, shift: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let guard = |d: f64| if d.abs() < tiny { -tiny } else { d };
        let mut count = 0;
        let mut prev = 1.0;
        for n in 0..=self.n_max {
            let mut d = self.diag(n) - shift;
            if self.has_mixed(n) {
                let db = guard(self.diag(n) - shift);
                if db < 0.0 {
                    count += 1;
                }
                d -= self.tunneling * self.tunneling / db;
            }
            if n > 0 {
                d -= self.ladder[n] * self.ladder[n] / prev;
            }
            let d = guard(d);
            if d < 0.0 {
                count += 1;
            }
            prev = d;
        }
        count
    }

    /// Bisection for the lowest eigenvalue. Returns `(lo, hi)` bracketing it,
    /// with `count_below(lo) == 0`.
    fn lowest_bracket(&self) -> (f64, f64) {
        let mut lo = self.lower_bound() - 1.0;
        let mut hi = self.diag(0) + 1.0;
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) == 0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo, hi)
    }

    /// Solves `(H − shift) x = rhs` for shifts below the spectrum.
    /// `rhs`/output layout: `[a_0..=a_n, b_0..=b_n]` (odd b ignored).
    fn solve_shifted(&self, shift: f64, rhs_a: &[f64], rhs_b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let len = self.n_max + 1;
        let tiny = f64::MIN_POSITIVE.sqrt();
        let guard = |d: f64| if d.abs() < tiny { tiny } else { d };
        let mut piv = vec![0.0; len];
        let mut y = vec![0.0; len];
        let mut db = vec![0.0; len];
        for n in 0..len {
            let mut d = self.diag(n) - shift;
            let mut r = rhs_a[n];
            if self.has_mixed(n) {
                db[n] = guard(self.diag(n) - shift);
                d -= self.tunneling * self.tunneling / db[n];
                r -= self.tunneling * rhs_b[n] / db[n];
            }
            if n > 0 {
                let l = self.ladder[n] / piv[n - 1];
                d -= l * self.ladder[n];
                r -= l * y[n - 1];
            }
            piv[n] = guard(d);
            y[n] = r;
        }
        let mut a = vec![0.0; len];
        for n in (0..len).rev() {
            let mut r = y[n];
            if n + 1 < len {
                r -= self.ladder[n + 1] * a[n + 1];
            }
            a[n] = r / piv[n];
        }
        let mut b = vec![0.0; len];
        for n in 0..len {
            if self.has_mixed(n) {
                b[n] = (rhs_b[n] - self.tunneling * a[n]) / db[n];
            }
        }
        (a, b)
    }

    fn rayleigh(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for n in 0..=self.n_max {
            num += self.diag(n) * (a[n] * a[n] + b[n] * b[n]);
            den += a[n] * a[n] + b[n] * b[n];
            if n > 0 {
                num += 2.0 * self.ladder[n] * a[n - 1] * a[n];
            }
            if self.has_mixed(n) {
                num += 2.0 * self.tunneling * a[n] * b[n];
            }
        }
        num / den
    }

    fn ground(&self) -> (f64, Vec<f64>, Vec<f64>) {
        let (lo, _) = self.lowest_bracket();
        let len = self.n_max + 1;
        let mut a = vec![0.0; len];
        let mut b = vec![0.0; len];
        a[0] = 1.0;
        if self.has_mixed(0) {
            b[0] = 1.0;
        }
        for _ in 0..32 {
            let (na, nb) = self.solve_shifted(lo, &a, &b);
            let norm = na.iter().chain(&nb).map(|v| v * v).sum::<f64>().sqrt();
            let na: Vec<f64> = na.into_iter().map(|v| v / norm).collect();
            let nb: Vec<f64> = nb.into_iter().map(|v| v / norm).collect();
            let change = na.iter().zip(&a).chain(nb.iter().zip(&b)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            a = na;
            b = nb;
            if change < 1e-14 {
                break;
            }
        }
        let e = self.rayleigh(&a, &b);
        (e, a, b)
    }
}

/// Lowest eigenpair at cutoff `n_max`, expanded into the full basis.
///
/// The global sign is fixed so that the largest-magnitude amplitude is
/// positive; among entries tied within 1e-9 relative, the lowest index wins.
pub fn ground_state(params: &ModelParams, n_max: usize) -> Result<GroundState> {
    params.validate()?;
    if n_max > MAX_SECTOR_N {
        return Err(Error::Truncation {
            n_max,
            reason: format!("cutoff above {MAX_SECTOR_N}"),
        });
    }
    let sector = Sector::new(params, n_max);
    let (energy, a, b) = sector.ground();
    if !energy.is_finite() || a.iter().chain(&b).any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("sector eigensolve failed at n_max={n_max}")));
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![0.0; 4 * (n_max + 1)];
    for n in 0..=n_max {
        let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
        amps[4 * n] = r * a[n];
        amps[4 * n + 3] = parity * r * a[n];
        amps[4 * n + 1] = r * b[n];
        amps[4 * n + 2] = r * b[n];
    }
    let norm = amps.iter().map(|v| v * v).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|v| *v /= norm);
    let peak = amps.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lead = amps
        .iter()
        .position(|v| v.abs() >= peak * (1.0 - 1e-9))
        .expect("non-empty amplitudes");
    if amps[lead] < 0.0 {
        amps.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(GroundState { energy, n_max, amplitudes: amps })
}

/// Doubles `n_max` from [`START_N`] until consecutive energies differ by less
/// than `tol`, returning the finer solution.
pub fn converged_ground(params: &ModelParams, tol: f64) -> Result<GroundState> {
    converged_ground_capped(params, tol, DEFAULT_N_CAP)
}

pub fn converged_ground_capped(params: &ModelParams, tol: f64, cap: usize) -> Result<GroundState> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be > 0, got {tol}")));
    }
    let mut n = START_N;
    let mut coarse = ground_state(params, n)?;
    let mut delta = f64::INFINITY;
    while 2 * n <= cap {
        let fine = ground_state(params, 2 * n)?;
        delta = (coarse.energy - fine.energy).abs();
        if delta < tol {
            return Ok(fine);
        }
        coarse = fine;
        n *= 2;
    }
    Err(Error::EdNotConverged { tol, cap, delta })
}

impl GroundState {
    /// Amplitudes of one qubit block, indexed by Fock number.
    pub fn block(&self, s: usize) -> Vec<f64> {
        self.amplitudes.iter().skip(s).step_by(4).copied().collect()
    }

    /// Position-space components `ψ₁..ψ₄(x)` in the ansatz convention
    /// (`ψ₁ = 2⟨↑↑|Ψ⟩`, `ψ₂ = 2⟨↓↓|Ψ⟩`, `ψ₃ = −2⟨↑↓|Ψ⟩`, `ψ₄ = −2⟨↓↑|Ψ⟩`).
    pub fn components_at(&self, x: f64) -> [f64; 4] {
        let h = hermite_functions(self.n_max, x);
        let mut blocks = [0.0; 4];
        for (n, hn) in h.iter().enumerate() {
            for (s, acc) in blocks.iter_mut().enumerate() {
                *acc += self.amplitudes[4 * n + s] * hn;
            }
        }
        [2.0 * blocks[0], 2.0 * blocks[3], -2.0 * blocks[1], -2.0 * blocks[2]]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}
