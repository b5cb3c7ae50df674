//! Adaptive Gauss-Kronrod (7/15) quadrature used as an independent oracle in
//! tests. Not part of the solver path.

#![allow(dead_code)]

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (val, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return val;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let pieces = ((b - a) / 1.0).ceil().max(1.0) as usize;
    let h = (b - a) / pieces as f64;
    let sub_tol = tol / pieces as f64;
    (0..pieces)
        .map(|k| {
            let lo = a + k as f64 * h;
            adapt(&f, lo, lo + h, sub_tol, 40)
        })
        .sum()
}

/// Integrate over the real line; the integrand must be negligible outside ±`half_width`.
pub fn integrate_line<F: Fn(f64) -> f64>(f: F, half_width: f64) -> f64 {
    integrate(f, -half_width, half_width, 1e-12)
}

/// Unit-norm displaced Gaussian `(ε/π)^{1/4} exp(-ε (x-μ)²/2)`, written out
/// independently of the crate's packet type.
pub fn gaussian(eps: f64, center: f64, x: f64) -> f64 {
    (eps / std::f64::consts::PI).powf(0.25) * (-0.5 * eps * (x - center).powi(2)).exp()
}

/// Second derivative of [`gaussian`] with respect to x.
pub fn gaussian_dd(eps: f64, center: f64, x: f64) -> f64 {
    let u = x - center;
    gaussian(eps, center, x) * (eps * eps * u * u - eps)
}

/// Oscillator eigenfunctions `h_0..=h_n` at `x` by the three-term recurrence.
pub fn hermite_functions(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let h0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(h0);
    if n_max >= 1 {
        out.push(std::f64::consts::SQRT_2 * x * h0);
    }
    for n in 1..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}
