//! Discrete power-law fitting: approximate MLE exponent with `xmin` chosen
//! by minimal Kolmogorov-Smirnov distance.

use serde::{Deserialize, Serialize};

/// Fewest tail values a fit may rest on.
pub const MIN_TAIL: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub xmin: u64,
    pub n_tail: usize,
    pub ks: f64,
}

// B_{2j} / (2j)!
const EM_COEFFS: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
];

/// Hurwitz zeta `sum_{k>=0} (k + a)^-s` for `s > 1`, `a > 0`, by
/// Euler-Maclaurin summation after ten explicit terms.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s > 1.0 && a > 0.0, "hurwitz_zeta needs s > 1 and a > 0");
    const N: usize = 10;
    let mut sum: f64 = (0..N).map(|k| (a + k as f64).powf(-s)).sum();
    let x = a + N as f64;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // rising factorial s (s+1) ... (s+2j-2) times x^(-s-2j+1)
    let mut factor = s * x.powf(-s - 1.0);
    for (j, c) in EM_COEFFS.iter().enumerate() {
        sum += c * factor;
        let m = 2.0 * j as f64;
        factor *= (s + m + 1.0) * (s + m + 2.0) / (x * x);
    }
    sum
}

/// `1 + n / sum ln(x / (xmin - 1/2))` over the `n` values `>= xmin`.
pub fn mle_exponent(tail: &[u64], xmin: u64) -> f64 {
    let shift = xmin as f64 - 0.5;
    let s: f64 = tail.iter().map(|&x| (x as f64 / shift).ln()).sum();
    1.0 + tail.len() as f64 / s
}

/// KS distance between the sorted tail and the discrete power law on
/// `[xmin, inf)` with exponent `alpha`.
fn ks_distance(sorted_tail: &[u64], xmin: u64, alpha: f64) -> f64 {
    let n = sorted_tail.len() as f64;
    let norm = hurwitz_zeta(alpha, xmin as f64);
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted_tail.len() {
        let x = sorted_tail[i];
        let below = i as f64 / n;
        while i < sorted_tail.len() && sorted_tail[i] == x {
            i += 1;
        }
        let upto = i as f64 / n;
        // model P(X <= x) and P(X < x)
        let cdf_le = 1.0 - hurwitz_zeta(alpha, x as f64 + 1.0) / norm;
        let cdf_lt = 1.0 - hurwitz_zeta(alpha, x as f64) / norm;
        d = d.max((upto - cdf_le).abs()).max((below - cdf_lt).abs());
    }
    d
}

/// Fit over the positive values of `values`. `None` when no candidate
/// `xmin` leaves [`MIN_TAIL`] values.
pub fn fit_power_law(values: &[u64]) -> Option<PowerLawFit> {
    let mut sorted: Vec<u64> = values.iter().copied().filter(|&x| x > 0).collect();
    sorted.sort_unstable();
    let mut best: Option<PowerLawFit> = None;
    let mut start = 0;
    while start < sorted.len() && sorted.len() - start >= MIN_TAIL {
        let xmin = sorted[start];
        let tail = &sorted[start..];
        let exponent = mle_exponent(tail, xmin);
        if exponent.is_finite() && exponent > 1.0 {
            let ks = ks_distance(tail, xmin, exponent);
            if best.is_none_or(|b| ks < b.ks) {
                best = Some(PowerLawFit { exponent, xmin, n_tail: tail.len(), ks });
            }
        }
        while start < sorted.len() && sorted[start] == xmin {
            start += 1;
        }
    }
    best
}
