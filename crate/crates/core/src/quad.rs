//! Quadrature primitives shared by the time and space evaluators.

use crate::error::{Error, Result};

/// `∫_a^b z^{-p} dz` for `0 < a <= b`, stable when `b/a` is close to one.
pub fn power_integral(a: f64, b: f64, p: f64) -> f64 {
    debug_assert!(a > 0.0 && b >= a);
    if b == a {
        return 0.0;
    }
    let q = 1.0 - p;
    let l = (b / a).ln();
    if (q * l).abs() < 1e-12 {
        a.powf(q) * l * (1.0 + 0.5 * q * l)
    } else {
        a.powf(q) * (q * l).exp_m1() / q
    }
}

/// `∫_a^∞ z^{-p} dz` for `p > 1`.
pub fn power_tail(a: f64, p: f64) -> f64 {
    debug_assert!(p > 1.0 && a > 0.0);
    a.powf(1.0 - p) / (p - 1.0)
}

/// Moments of the two hat functions of the cell `[a, b]` against `z^{-p}`.
///
/// Returns `(m_a, m_b)` with `m_a = ∫ (b - z)/(b - a) z^{-p}` and
/// `m_b = ∫ (z - a)/(b - a) z^{-p}`. For cells far from the origin the
/// integrand is smooth and Gauss-Legendre avoids the cancellation in the
/// closed form.
pub fn hat_moments(a: f64, b: f64, p: f64) -> (f64, f64) {
    let w = b - a;
    if a >= 4.0 * w {
        let mut ma = 0.0;
        let mut mb = 0.0;
        let half = 0.5 * w;
        let mid = a + half;
        for (x, wt) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
            for sx in [-x, *x] {
                let z = mid + half * sx;
                let k = wt * half * z.powf(-p);
                ma += k * (b - z) / w;
                mb += k * (z - a) / w;
            }
        }
        (ma, mb)
    } else if a == 0.0 {
        // only meaningful for p < 1 on the first moment; p < 2 on the second
        let i1 = b.powf(2.0 - p) / (2.0 - p);
        let i0 = b.powf(1.0 - p) / (1.0 - p);
        ((b * i0 - i1) / w, i1 / w)
    } else {
        let i0 = power_integral(a, b, p);
        let i1 = power_integral(a, b, p - 1.0);
        ((b * i0 - i1) / w, (i1 - a * i0) / w)
    }
}

const GL8_NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL8_WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

/// Eight-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre8<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = a + half;
    let mut acc = 0.0;
    for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
        acc += w * (f(mid - half * x) + f(mid + half * x));
    }
    acc * half
}

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
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = a + half;
    let fc = f(mid);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(mid - dx) + f(mid + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Globally adaptive Gauss-Kronrod (7/15) quadrature on a finite interval.
///
/// Converges when the summed error estimate drops below
/// `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate(f, b, a, abs_tol, rel_tol).map(|v| -v);
    }
    const MAX_SEGMENTS: usize = 20_000;
    let (v, e) = gk15(f, a, b);
    let mut segs = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    while err > abs_tol.max(rel_tol * total.abs()) {
        if !total.is_finite() {
            return Err(Error::Quadrature { a, b });
        }
        if segs.len() >= MAX_SEGMENTS {
            return Err(Error::Quadrature { a, b });
        }
        let (k, _) = segs.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, s)| if s.3 > acc.1 { (i, s.3) } else { acc });
        let (sa, sb, sv, se) = segs.swap_remove(k);
        let m = 0.5 * (sa + sb);
        if m <= sa || m >= sb {
            // interval cannot be split further; accept what we have
            segs.push((sa, sb, sv, 0.0));
            err -= se;
            continue;
        }
        let (v1, e1) = gk15(f, sa, m);
        let (v2, e2) = gk15(f, m, sb);
        total += v1 + v2 - sv;
        err += e1 + e2 - se;
        segs.push((sa, m, v1, e1));
        segs.push((m, sb, v2, e2));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn power_integral_matches_closed_form() {
        assert_relative_eq!(power_integral(1.0, 2.0, 1.0), 2f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(power_integral(1.0, 4.0, 0.5), 2.0, max_relative = 1e-14);
        // near p = 1
        let p = 1.0 + 1e-14;
        assert_relative_eq!(power_integral(2.0, 3.0, p), (1.5f64).ln(), max_relative = 1e-12);
        // adjacent cells far out
        let a: f64 = 1e6;
        let exact = (a.powf(-0.5) - (a + 1.0).powf(-0.5)) / 0.5;
        assert_relative_eq!(power_integral(a, a + 1.0, 1.5), exact, max_relative = 1e-9);
    }

    #[test]
    fn hat_moments_sum_to_power_integral() {
        for &(a, b) in &[(0.5, 1.0), (3.0, 4.0), (100.0, 101.0)] {
            let (ma, mb) = hat_moments(a, b, 1.7);
            assert_relative_eq!(ma + mb, power_integral(a, b, 1.7), max_relative = 1e-12);
        }
        let (ma, mb) = hat_moments(0.0, 1.0, 0.4);
        assert_relative_eq!(ma + mb, 1.0 / 0.6, max_relative = 1e-14);
        assert_relative_eq!(mb, 1.0 / 1.6, max_relative = 1e-14);
    }

    #[test]
    fn hat_moment_branches_agree() {
        // just inside and outside the switch between closed form and GL8
        let p = 1.6;
        let closed = {
            let (a, b) = (4.0, 5.0);
            let i0 = power_integral(a, b, p);
            let i1 = power_integral(a, b, p - 1.0);
            ((b * i0 - i1) / (b - a), (i1 - a * i0) / (b - a))
        };
        let gl = hat_moments(4.0, 5.0, p);
        assert_relative_eq!(closed.0, gl.0, max_relative = 1e-12);
        assert_relative_eq!(closed.1, gl.1, max_relative = 1e-12);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let v = integrate(&|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-12, 1e-12).unwrap();
        assert_relative_eq!(v, 2.0, max_relative = 1e-9);
        let v = integrate(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-14, 1e-14).unwrap();
        assert_relative_eq!(v, 2.0, max_relative = 1e-13);
    }

    #[test]
    fn adaptive_reversed_bounds() {
        let v = integrate(&|x: f64| x * x, 1.0, 0.0, 1e-14, 1e-14).unwrap();
        assert_relative_eq!(v, -1.0 / 3.0, max_relative = 1e-13);
    }

    #[test]
    fn gl8_exact_on_degree_15() {
        let v = gauss_legendre8(&|x: f64| x.powi(15) + x.powi(14), 0.0, 1.0);
        assert_relative_eq!(v, 1.0 / 16.0 + 1.0 / 15.0, max_relative = 1e-13);
    }
}
