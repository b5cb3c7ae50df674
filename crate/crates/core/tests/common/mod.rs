#![allow(dead_code)]

use rabi2q::{GaussianPacket, ModelParams, PolaronAnsatz};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `⟨v|H|v⟩/⟨v|v⟩` for a full-basis vector (index `4n+s`, `s` = uu, ud, du, dd),
/// written out term by term from the ladder-operator form of H.
pub fn fock_energy(params: &ModelParams, v: &[f64]) -> f64 {
    let n_states = v.len() / 4;
    let at = |n: usize, s: usize| v[4 * n + s];
    let (mut num, mut den) = (0.0, 0.0);
    for n in 0..n_states {
        let (uu, ud, du, dd) = (at(n, 0), at(n, 1), at(n, 2), at(n, 3));
        let occ = uu * uu + ud * ud + du * du + dd * dd;
        den += occ;
        num += params.omega * n as f64 * occ;
        num += params.tunneling * (uu * du + ud * dd + uu * ud + du * dd);
        if n + 1 < n_states {
            let root = ((n + 1) as f64).sqrt();
            num += 4.0 * params.g * root * (uu * at(n + 1, 0) - dd * at(n + 1, 3));
        }
    }
    num / den
}

pub fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
    ModelParams::new(rng.random_range(0.5..2.0), rng.random_range(0.0..10.0), rng.random_range(0.0..1.5)).unwrap()
}

/// Normalized ansatz with `N ∈ 1..=3` and a full packet list in both components.
pub fn random_ansatz(rng: &mut ChaCha8Rng) -> PolaronAnsatz {
    let n_pairs = rng.random_range(1..=3usize);
    let mut packets = |count: usize| -> Vec<GaussianPacket> {
        (0..count)
            .map(|_| GaussianPacket {
                coeff: rng.random_range(-1.0..1.0),
                eps: rng.random_range(0.4..2.5),
                center: rng.random_range(-3.0..3.0),
            })
            .collect()
    };
    let p1 = packets(2 * n_pairs);
    let p3 = packets(2 * n_pairs);
    PolaronAnsatz::new(n_pairs, p1, p3).unwrap().normalize().unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
