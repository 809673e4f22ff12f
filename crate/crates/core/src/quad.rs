//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `abs_tol` plus relative
/// tolerance `rel_tol` of the running total.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite interval [{a}, {b}]")));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut stack = vec![(lo, hi, 0usize)];
    let mut total = 0.0;
    let mut err_total = 0.0;
    let mut pending: Vec<(f64, f64)> = Vec::new();
    let tol_density = |len: f64, total: f64| (abs_tol + rel_tol * total.abs()) * len / (hi - lo);
    while let Some((x0, x1, depth)) = stack.pop() {
        let (val, err) = gk15(&f, x0, x1);
        if !val.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{x0}, {x1}]")));
        }
        if err <= tol_density(x1 - x0, total + val).max(f64::EPSILON * val.abs()) || depth >= 48 {
            if depth >= 48 && err > 1e3 * tol_density(x1 - x0, total + val) {
                pending.push((x0, x1));
            }
            total += val;
            err_total += err;
        } else {
            let m = 0.5 * (x0 + x1);
            stack.push((m, x1, depth + 1));
            stack.push((x0, m, depth + 1));
        }
    }
    if !pending.is_empty() {
        return Err(Error::Quadrature(format!(
            "{} subintervals at maximum depth, error estimate {err_total:e}",
            pending.len()
        )));
    }
    Ok(sign * total)
}

/// Integrates over consecutive breakpoints, so that kinks in `f` fall on
/// subinterval ends.
pub fn integrate_pieces(
    f: impl Fn(f64) -> f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += integrate(&f, w[0], w[1], abs_tol, rel_tol)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_exponential() {
        let v = integrate(|x| x * x, 0.0, 3.0, 1e-14, 1e-14).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
        let v = integrate(|x: f64| x.exp(), 0.0, 1.0, 1e-14, 1e-14).unwrap();
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let v = integrate(|x| x, 2.0, 0.0, 1e-14, 1e-14).unwrap();
        assert!((v + 2.0).abs() < 1e-13);
    }

    #[test]
    fn sharp_peak() {
        let v = integrate(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12, 1e-12).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v - exact).abs() / exact < 1e-10);
    }
}
