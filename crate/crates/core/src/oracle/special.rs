//! Spherical Bessel and Hankel functions of real argument and Legendre
//! polynomials, all orders 0..=lmax at once.

use crate::field::C64;

/// j_0..j_lmax by downward (Miller) recurrence, normalised against the
/// closed forms of j_0 or j_1.
pub fn spherical_jn(lmax: usize, z: f64) -> Vec<f64> {
    let top = lmax.max(1);
    let mut out = vec![0.0; top + 1];
    if z == 0.0 {
        out[0] = 1.0;
        out.truncate(lmax + 1);
        return out;
    }
    let start = top + (40.0 * (top as f64 + 1.0)).sqrt() as usize + z.abs() as usize + 20;
    let mut next = 0.0;
    let mut cur = 1e-300;
    for l in (0..=start).rev() {
        if l <= top {
            out[l] = cur;
        }
        if l == 0 {
            break;
        }
        let prev = (2 * l + 1) as f64 / z * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            let s = 1e-250;
            cur *= s;
            next *= s;
            out.iter_mut().for_each(|v| *v *= s);
        }
    }
    let j0 = z.sin() / z;
    let j1 = z.sin() / (z * z) - z.cos() / z;
    let scale = if j0.abs() >= j1.abs() { j0 / out[0] } else { j1 / out[1] };
    out.iter_mut().for_each(|v| *v *= scale);
    out.truncate(lmax + 1);
    out
}

/// y_0..y_lmax by upward recurrence.
pub fn spherical_yn(lmax: usize, z: f64) -> Vec<f64> {
    let mut out = vec![0.0; lmax + 1];
    out[0] = -z.cos() / z;
    if lmax >= 1 {
        out[1] = -z.cos() / (z * z) - z.sin() / z;
    }
    for l in 1..lmax {
        out[l + 1] = (2 * l + 1) as f64 / z * out[l] - out[l - 1];
    }
    out
}

/// h_l = j_l + i y_l.
pub fn spherical_hn(lmax: usize, z: f64) -> Vec<C64> {
    spherical_jn(lmax, z)
        .into_iter()
        .zip(spherical_yn(lmax, z))
        .map(|(j, y)| C64::new(j, y))
        .collect()
}

/// f_l' = f_{l-1} - (l+1)/z f_l, with f_0' = -f_1. Needs values up to
/// lmax + 1 to return derivatives up to lmax.
pub fn derivative<T>(values: &[T], z: f64) -> Vec<T>
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Neg<Output = T>,
{
    let n = values.len() - 1;
    (0..n)
        .map(|l| {
            if l == 0 {
                -values[1]
            } else {
                values[l - 1] - values[l] * ((l + 1) as f64 / z)
            }
        })
        .collect()
}

/// P_0..P_lmax and their derivatives at x in [-1, 1].
pub fn legendre(lmax: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; lmax + 1];
    let mut dp = vec![0.0; lmax + 1];
    p[0] = 1.0;
    if lmax >= 1 {
        p[1] = x;
        dp[1] = 1.0;
    }
    for l in 1..lmax {
        p[l + 1] = ((2 * l + 1) as f64 * x * p[l] - l as f64 * p[l - 1]) / (l + 1) as f64;
    }
    for l in 2..=lmax {
        // P'_l = P'_{l-2} + (2l - 1) P_{l-1} avoids dividing by 1 - x^2.
        dp[l] = dp[l - 2] + (2 * l - 1) as f64 * p[l - 1];
    }
    (p, dp)
}
