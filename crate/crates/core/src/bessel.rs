//! Integer-order Bessel functions of the first kind.

/// Returns `[J_0(x), J_1(x), ..., J_{n_max}(x)]`.
///
/// Uses Miller's backward recurrence normalized with
/// `J_0 + 2 * sum_k J_{2k} = 1`, which is stable for every order and
/// argument used by the grating models (|x| up to a few hundred).
pub fn bessel_j_orders(x: f64, n_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let start = n_max.max(ax.ceil() as usize) + 40 + (ax.sqrt() * 10.0) as usize;
    let start = start + (start % 2);

    let mut next = 0.0_f64; // J_{k+1}
    let mut cur = 1e-300_f64; // J_k
    let mut norm = 0.0_f64;
    for k in (1..=start).rev() {
        let prev = (2.0 * k as f64 / ax) * cur - next;
        next = cur;
        cur = prev;
        // cur now holds J_{k-1}
        let order = k - 1;
        if order <= n_max {
            out[order] = cur;
        }
        if order % 2 == 0 && order > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            let s = 1e-250;
            cur *= s;
            next *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    norm += cur;
    for v in out.iter_mut() {
        *v /= norm;
    }
    if x < 0.0 {
        for (n, v) in out.iter_mut().enumerate() {
            if n % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// `J_n(x)` for any signed integer order.
pub fn bessel_j(n: i64, x: f64) -> f64 {
    let k = n.unsigned_abs() as usize;
    let v = bessel_j_orders(x, k)[k];
    if n < 0 && k % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Smallest `q_max` with `sum_{|q| <= q_max} J_q(x)^2 >= 1 - tol`.
pub fn truncation_order(x: f64, tol: f64) -> usize {
    let n_max = (x.abs().ceil() as usize) * 2 + 60;
    let j = bessel_j_orders(x, n_max);
    let mut acc = j[0] * j[0];
    for (q, v) in j.iter().enumerate().skip(1) {
        if acc >= 1.0 - tol {
            return q - 1;
        }
        acc += 2.0 * v * v;
    }
    n_max
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    // J_n(x) = 1/pi * int_0^pi cos(n tau - x sin tau) d tau; the trapezoid rule
    // converges geometrically for this periodic integrand.
    fn bessel_integral(n: i64, x: f64) -> f64 {
        let m = 4096;
        let h = PI / m as f64;
        let f = |t: f64| (n as f64 * t - x * t.sin()).cos();
        let mut s = 0.5 * (f(0.0) + f(PI));
        for i in 1..m {
            s += f(i as f64 * h);
        }
        s * h / PI
    }

    #[test]
    fn matches_integral_representation() {
        for &x in &[0.1, 0.5, 1.0, 2.0, 4.0, 7.5, 20.0, 63.0] {
            for n in [-5_i64, -1, 0, 1, 2, 3, 10, 25] {
                let a = bessel_j(n, x);
                let b = bessel_integral(n, x);
                assert!((a - b).abs() < 1e-12, "n={n} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn known_values() {
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j(1, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-14);
        assert_eq!(bessel_j(0, 0.0), 1.0);
        assert_eq!(bessel_j(3, 0.0), 0.0);
    }

    #[test]
    fn negative_argument_parity() {
        for n in 0..6 {
            let s = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((bessel_j(n, -1.7) - s * bessel_j(n, 1.7)).abs() < 1e-14);
        }
    }

    #[test]
    fn truncation_covers_energy() {
        for &x in &[0.25, 1.0, 2.0, 5.0] {
            let q = truncation_order(x, 1e-12);
            let j = bessel_j_orders(x, q);
            let e: f64 = j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>();
            assert!(e >= 1.0 - 1e-12);
        }
    }
}
