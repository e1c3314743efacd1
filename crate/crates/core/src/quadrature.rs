//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite or
//! infinite intervals.

use crate::error::{Error, Result};

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

const MAX_SEGMENTS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

/// Integrate `f` over the finite interval `[a, b]`.
///
/// Converges when the summed error estimate is at most
/// `tol * max(1, |value|)`.
pub fn integrate_finite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (v0, e0) = gk15(&f, lo, hi);
    let mut segments = vec![(lo, hi, v0, e0)];
    loop {
        let value: f64 = segments.iter().map(|s| s.2).sum();
        let error: f64 = segments.iter().map(|s| s.3).sum();
        if !value.is_finite() {
            return Err(Error::Quadrature { lo, hi, estimate: f64::INFINITY, tolerance: tol });
        }
        if error <= tol * value.abs().max(1.0) {
            return Ok(QuadResult { value: sign * value, error });
        }
        if segments.len() >= MAX_SEGMENTS {
            return Err(Error::Quadrature { lo, hi, estimate: error, tolerance: tol });
        }
        let (idx, _) = segments.iter().enumerate().max_by(|x, y| x.1 .3.total_cmp(&y.1 .3)).expect("nonempty");
        let (a1, b1, _, _) = segments.swap_remove(idx);
        let mid = 0.5 * (a1 + b1);
        if mid <= a1 || mid >= b1 {
            return Err(Error::Quadrature { lo: a1, hi: b1, estimate: error, tolerance: tol });
        }
        let (vl, el) = gk15(&f, a1, mid);
        let (vr, er) = gk15(&f, mid, b1);
        segments.push((a1, mid, vl, el));
        segments.push((mid, b1, vr, er));
    }
}

/// Integrate over `[a, b]` where either end may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    // 0 * inf from the Jacobian at the far end counts as 0.
    let guard = |v: f64, jac: f64| if v == 0.0 { 0.0 } else { v * jac };
    match (a.is_finite(), b.is_finite()) {
        (true, true) => integrate_finite(f, a, b, tol),
        (true, false) => integrate_finite(
            |t| {
                let s = 1.0 - t;
                guard(f(a + t / s), 1.0 / (s * s))
            },
            0.0,
            1.0,
            tol,
        ),
        (false, true) => integrate_finite(
            |t| {
                let s = 1.0 - t;
                guard(f(b - t / s), 1.0 / (s * s))
            },
            0.0,
            1.0,
            tol,
        ),
        (false, false) => integrate_finite(
            |t| {
                let s = 1.0 - t * t;
                guard(f(t / s), (1.0 + t * t) / (s * s))
            },
            -1.0,
            1.0,
            tol,
        ),
    }
}

/// Integrate over `[a, b]` split at the given interior breakpoints.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> Result<QuadResult> {
    let mut edges = vec![a];
    edges.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    edges.push(b);
    let pieces = (edges.len() - 1) as f64;
    let mut total = QuadResult { value: 0.0, error: 0.0 };
    for w in edges.windows(2) {
        let r = integrate(&f, w[0], w[1], tol / pieces)?;
        total.value += r.value;
        total.error += r.error;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate_finite(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, 1e-12).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-13);
    }

    #[test]
    fn gaussian_over_real_line() {
        let r = integrate(|x| (-0.5 * x * x).exp(), f64::NEG_INFINITY, f64::INFINITY, 1e-12).unwrap();
        assert!((r.value - (2.0 * PI).sqrt()).abs() < 1e-11);
    }

    #[test]
    fn half_lines() {
        let r = integrate(|x| (-x).exp(), 0.0, f64::INFINITY, 1e-12).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let r = integrate(|x| x.exp(), f64::NEG_INFINITY, 0.0, 1e-12).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn step_function_with_breaks() {
        let f = |x: f64| if x < 0.3 { 1.0 } else { 4.0 };
        let r = integrate_with_breaks(f, 0.0, 1.0, &[0.3], 1e-12).unwrap();
        assert!((r.value - (0.3 + 4.0 * 0.7)).abs() < 1e-13);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let r = integrate_finite(|x| x, 1.0, 0.0, 1e-12).unwrap();
        assert!((r.value + 0.5).abs() < 1e-15);
    }

    #[test]
    fn nonintegrable_reports_failure() {
        let r = integrate_finite(|x| 1.0 / x.abs().sqrt().powi(3), -1.0, 1.0, 1e-12);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
