//! FFT-based operations on periodic samples `f(α_k)`, `α_k = 2πk/N`.
//!
//! All routines treat the samples as the trigonometric interpolant whose
//! Nyquist mode is the real `cos(Nα/2)` term, i.e. the periodic sinc
//! interpolant. Odd derivatives of the Nyquist mode vanish at the nodes and
//! are zeroed.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

thread_local! {
    static PLANS: RefCell<PlanCache> = RefCell::new(PlanCache::default());
}

struct PlanCache {
    planner: FftPlanner<f64>,
    forward: HashMap<usize, Arc<dyn Fft<f64>>>,
    inverse: HashMap<usize, Arc<dyn Fft<f64>>>,
}

impl Default for PlanCache {
    fn default() -> Self {
        Self { planner: FftPlanner::new(), forward: HashMap::new(), inverse: HashMap::new() }
    }
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let mut cache = cell.borrow_mut();
        let PlanCache { planner, forward, inverse: inv } = &mut *cache;
        let table = if inverse { inv } else { forward };
        table
            .entry(n)
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone()
    })
}

pub fn is_power_of_two(n: usize) -> bool {
    n >= 1 && n.is_power_of_two()
}

pub fn check_power_of_two(n: usize) -> Result<()> {
    if is_power_of_two(n) && n >= 2 {
        Ok(())
    } else {
        Err(Error::NotPowerOfTwo(n))
    }
}

/// Signed wavenumber of FFT bin `k` for length `n` (Nyquist reported as `+n/2`).
#[inline]
pub fn wavenumber(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Unnormalized forward DFT of real samples.
pub fn forward(samples: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(buf.len(), false).process(&mut buf);
    buf
}

/// Inverse of [`forward`], returning the real part scaled by `1/n`.
pub fn inverse_real(mut coeffs: Vec<Complex64>) -> Vec<f64> {
    let n = coeffs.len();
    plan(n, true).process(&mut coeffs);
    let scale = 1.0 / n as f64;
    coeffs.iter().map(|c| c.re * scale).collect()
}

/// Multiplies each coefficient by the Fourier symbol of `d^order/dα^order`.
fn apply_derivative_symbol(coeffs: &mut [Complex64], order: u32) {
    let n = coeffs.len();
    for (k, c) in coeffs.iter_mut().enumerate() {
        if n % 2 == 0 && k == n / 2 && order % 2 == 1 {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let ik = Complex64::new(0.0, wavenumber(k, n));
        *c *= ik.powu(order);
    }
}

/// `order`-th derivative with respect to α of the trigonometric interpolant.
pub fn fourier_derivative(samples: &[f64], order: u32) -> Result<Vec<f64>> {
    if order < 1 {
        return Err(Error::InvalidOrder);
    }
    check_power_of_two(samples.len())?;
    let mut coeffs = forward(samples);
    apply_derivative_symbol(&mut coeffs, order);
    Ok(inverse_real(coeffs))
}

/// Values of the interpolant at the shifted nodes `α_k + delta`.
pub fn shift(samples: &[f64], delta: f64) -> Vec<f64> {
    let n = samples.len();
    let mut coeffs = forward(samples);
    for (k, c) in coeffs.iter_mut().enumerate() {
        if n % 2 == 0 && k == n / 2 {
            *c *= (0.5 * n as f64 * delta).cos();
        } else {
            *c *= Complex64::from_polar(1.0, wavenumber(k, n) * delta);
        }
    }
    inverse_real(coeffs)
}

/// Trigonometric resampling from `samples.len()` to `n_new` nodes by
/// zero-padding or truncating the spectrum.
pub fn resample_values(samples: &[f64], n_new: usize) -> Result<Vec<f64>> {
    let n = samples.len();
    check_power_of_two(n)?;
    check_power_of_two(n_new)?;
    if n_new == n {
        return Ok(samples.to_vec());
    }
    let coeffs = forward(samples);
    let mut out = vec![Complex64::new(0.0, 0.0); n_new];
    if n_new > n {
        for k in 0..n / 2 {
            out[k] = coeffs[k];
        }
        for k in 1..n / 2 {
            out[n_new - k] = coeffs[n - k];
        }
        let nyq = coeffs[n / 2] * 0.5;
        out[n / 2] = nyq;
        out[n_new - n / 2] = nyq;
    } else {
        for k in 0..n_new / 2 {
            out[k] = coeffs[k];
        }
        for k in 1..n_new / 2 {
            out[n_new - k] = coeffs[n - k];
        }
        out[n_new / 2] = coeffs[n_new / 2] + coeffs[n - n_new / 2];
    }
    let scale = n_new as f64 / n as f64;
    for c in out.iter_mut() {
        *c *= scale;
    }
    Ok(inverse_real(out))
}

/// Periodic sinc `S_N(t)`: the cardinal function of the N-point interpolant.
pub fn periodic_sinc(n: usize, t: f64) -> f64 {
    let mut t = t.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    let half = 0.5 * t;
    if half.sin().abs() < 1e-14 {
        return 1.0;
    }
    (0.5 * n as f64 * t).sin() / (n as f64 * half.tan())
}

/// Weights `w_m` with `f(α_i + delta) = Σ_m w_m f_{i+m}` (indices cyclic).
pub fn shift_weights(n: usize, delta: f64) -> Vec<f64> {
    let h = 2.0 * PI / n as f64;
    let s = (0.5 * n as f64 * delta).sin();
    (0..n)
        .map(|m| {
            // signed offset keeps |t| ≤ π, where tan(t/2) has small relative error
            let j = if m > n / 2 { m as f64 - n as f64 } else { m as f64 };
            let t = delta - j * h;
            if (0.5 * t).sin().abs() < 1e-14 {
                return 1.0;
            }
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            sign * s / (n as f64 * (0.5 * t).tan())
        })
        .collect()
}

/// Dense matrix of `d^order/dα^order` acting on N samples, row-major.
pub fn derivative_matrix(n: usize, order: u32) -> Result<Vec<f64>> {
    check_power_of_two(n)?;
    let mut mat = vec![0.0; n * n];
    let mut unit = vec![0.0; n];
    for j in 0..n {
        unit[j] = 1.0;
        let col = fourier_derivative(&unit, order)?;
        unit[j] = 0.0;
        for i in 0..n {
            mat[i * n + j] = col[i];
        }
    }
    Ok(mat)
}

/// Continuous evaluation of a trigonometric interpolant and its first two
/// derivatives at arbitrary parameter values.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    n: usize,
    coeffs: Vec<Complex64>,
}

impl TrigInterpolant {
    pub fn new(samples: &[f64]) -> Self {
        let n = samples.len();
        let scale = 1.0 / n as f64;
        let coeffs = forward(samples).into_iter().map(|c| c * scale).collect();
        Self { n, coeffs }
    }

    /// Returns `(f, f', f'')` at `alpha`.
    pub fn eval(&self, alpha: f64) -> (f64, f64, f64) {
        let n = self.n;
        let (mut f, mut d1, mut d2) = (self.coeffs[0].re, 0.0, 0.0);
        let (s1, c1) = alpha.sin_cos();
        let rot = Complex64::new(c1, s1);
        let mut e = rot;
        for k in 1..n / 2 {
            let kf = k as f64;
            // c_k e^{ikα} + c_{-k} e^{-ikα} with c_{-k} = conj(c_k) for real data
            let ck = self.coeffs[k];
            let term = ck * e;
            f += 2.0 * term.re;
            d1 += -2.0 * kf * term.im;
            d2 += -2.0 * kf * kf * term.re;
            e *= rot;
        }
        if n % 2 == 0 && n >= 2 {
            let half = 0.5 * n as f64;
            let cn = self.coeffs[n / 2].re;
            let (s, c) = (half * alpha).sin_cos();
            f += cn * c;
            d1 += -cn * half * s;
            d2 += -cn * half * half * c;
        }
        (f, d1, d2)
    }
}
