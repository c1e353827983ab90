//! Free lattice Green's function from the heat-kernel representation
//! `G_0(x) = ∫_0^∞ Π_j e^{-2t} I_{|x_j|}(2t) dt`.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};

/// Hankel coefficient `a_k(n) = (-1)^k Π_{i=1..k} (4n² - (2i-1)²) / (k! 8^k)`,
/// so that `e^{-z} I_n(z) ~ (2πz)^{-1/2} Σ_k a_k(n) z^{-k}`.
fn hankel_coefficients(n: u64, count: usize) -> Vec<f64> {
    let mu = 4.0 * (n as f64).powi(2);
    let mut out = Vec::with_capacity(count);
    let mut c = 1.0;
    out.push(c);
    for k in 1..count {
        let odd = (2 * k - 1) as f64;
        c *= -(mu - odd * odd) / (k as f64 * 8.0);
        out.push(c);
    }
    out
}

fn hankel_threshold(n: u64) -> f64 {
    40f64.max(6.0 * (n as f64).powi(2))
}

/// `e^{-z} I_n(z)` for integer order `n >= 0` and `z >= 0`.
pub fn scaled_bessel_i(n: u64, z: f64) -> f64 {
    assert!(z >= 0.0, "argument must be nonnegative");
    if z == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if z >= hankel_threshold(n) {
        if let Some(v) = hankel_series(n, z) {
            return v;
        }
    }
    power_series(n, z)
}

fn hankel_series(n: u64, z: f64) -> Option<f64> {
    let mu = 4.0 * (n as f64).powi(2);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..80 {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (k as f64 * 8.0 * z);
        if next.abs() > term.abs() && k > 1 {
            return None;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            return Some(sum / (2.0 * std::f64::consts::PI * z).sqrt());
        }
    }
    None
}

/// `Σ_k (z/2)^{2k+n} / (k! (k+n)!)` times `e^{-z}`, summed outward from the
/// largest term so that every term is formed without overflow.
fn power_series(n: u64, z: f64) -> f64 {
    let nf = n as f64;
    let h = 0.25 * z * z;
    // Ratio term_{k+1}/term_k = h / ((k+1)(k+n+1)) crosses 1 here.
    let peak = ((-(nf + 2.0) + (nf * nf + 4.0 * h).sqrt()) / 2.0).max(0.0).ceil() as u64;
    let ln_half = (0.5 * z).ln();
    let log_peak =
        (2 * peak + n) as f64 * ln_half - ln_gamma(peak as f64 + 1.0) - ln_gamma((peak + n) as f64 + 1.0) - z;
    let peak_term = log_peak.exp();
    if peak_term == 0.0 {
        return 0.0;
    }
    let mut sum = peak_term;
    let mut term = peak_term;
    let mut k = peak;
    loop {
        let kf = k as f64;
        term *= h / ((kf + 1.0) * (kf + nf + 1.0));
        sum += term;
        k += 1;
        if !(term > 1e-18 * sum) {
            break;
        }
    }
    let mut term = peak_term;
    let mut k = peak;
    while k > 0 {
        let kf = k as f64;
        term *= kf * (kf + nf) / h;
        sum += term;
        k -= 1;
        if !(term > 1e-18 * sum) {
            break;
        }
    }
    sum
}

/// Integrand `Π_j e^{-2t} I_{|x_j|}(2t)`.
pub fn heat_kernel(x: &[i64], t: f64) -> f64 {
    x.iter().map(|&c| scaled_bessel_i(c.unsigned_abs(), 2.0 * t)).product()
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const GAUSS_WEIGHTS: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Kronrod-15 estimate and its distance from the embedded Gauss-7 rule.
fn gauss_kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let s = f(c - dx) + f(c + dx);
        kronrod += GK_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> (f64, f64) {
    let (v, err) = gauss_kronrod(f, a, b);
    if err <= tol || depth == 0 {
        return (v, err);
    }
    let m = 0.5 * (a + b);
    let (l, el) = adaptive(f, a, m, 0.5 * tol, depth - 1);
    let (r, er) = adaptive(f, m, b, 0.5 * tol, depth - 1);
    (l + r, el + er)
}

/// Value and certified error bound of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    /// Split point between the numerical body and the analytic tail.
    pub cutoff: f64,
}

/// Tail `∫_T^∞ Π_j e^{-2t} I_{n_j}(2t) dt` from the product of Hankel series:
/// the integrand is `(4πt)^{-d/2} Σ_k p_k (2t)^{-k}`, integrated term by term.
fn asymptotic_tail(x: &[i64], cutoff: f64) -> (f64, f64) {
    const TERMS: usize = 40;
    let d = x.len() as f64;
    let mut poly = vec![0.0; TERMS];
    poly[0] = 1.0;
    for &c in x {
        let a = hankel_coefficients(c.unsigned_abs(), TERMS);
        let mut next = vec![0.0; TERMS];
        for (i, &p) in poly.iter().enumerate() {
            for (k, &ak) in a.iter().enumerate().take(TERMS - i) {
                next[i + k] += p * ak;
            }
        }
        poly = next;
    }
    let pref = (4.0 * std::f64::consts::PI).powf(-0.5 * d);
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    for (k, &p) in poly.iter().enumerate() {
        // ∫_T^∞ t^{-d/2-k} dt = T^{1-d/2-k} / (d/2 + k - 1), with (2t)^{-k} = 2^{-k} t^{-k}.
        let e = 0.5 * d + k as f64 - 1.0;
        let term = pref * p * 0.5f64.powi(k as i32) * cutoff.powf(-e) / e;
        if term.abs() > last && k > 2 {
            break;
        }
        sum += term;
        last = term.abs();
        if last < 1e-20 {
            break;
        }
    }
    (sum, 2.0 * last)
}

/// `G_0(x)` with absolute error at most `eps` (reported error is the sum of
/// the Kronrod error estimates and the tail remainder).
pub fn free_green_quadrature(x: &[i64], eps: f64) -> Result<Quadrature> {
    let d = x.len();
    if d < 3 {
        return Err(Error::Dimension(d));
    }
    if !(eps > 0.0) {
        return Err(invalid("eps", "must be positive"));
    }
    let n_max = x.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
    let cutoff = 0.5 * hankel_threshold(n_max).max(200.0);
    let mut edges = vec![0.0, 1.0];
    while *edges.last().unwrap() < cutoff {
        let next = (edges.last().unwrap() * 2.0).min(cutoff);
        edges.push(next);
    }
    let f = |t: f64| heat_kernel(x, t);
    let panels = edges.len() - 1;
    let body_tol = 0.5 * eps / panels as f64;
    let mut value = 0.0;
    let mut error = 0.0;
    for w in edges.windows(2) {
        let (v, e) = adaptive(&f, w[0], w[1], body_tol, 30);
        value += v;
        error += e;
    }
    let (tail, tail_err) = asymptotic_tail(x, cutoff);
    value += tail;
    error += tail_err;
    Ok(Quadrature { value, error, cutoff })
}
