//! Eigenvalues of small dense nonsymmetric matrices.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, Hessenberg};

use crate::error::{Error, Result};

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Eigenvalues as `(re, im)` pairs, in no particular order.
///
/// Hessenberg reduction followed by the double-shift QR iteration with
/// exceptional shifts every ten sweeps.
pub(crate) fn eigenvalues(m: DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    let n = m.nrows();
    match n {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![(m[(0, 0)], 0.0)]),
        _ => {}
    }
    let mut a = Hessenberg::new(m).unpack_h();
    for j in 0..n {
        for i in j + 2..n {
            a[(i, j)] = 0.0;
        }
    }
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    if anorm == 0.0 {
        return Ok(wr.into_iter().zip(wi).collect());
    }

    let mut nn = n as isize - 1;
    let mut t = 0.0;
    let mut total = 0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let u = nn as usize;
            let mut l = u;
            while l >= 1 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() + s == s {
                    a[(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[(u, u)];
            if l == u {
                wr[u] = x + t;
                wi[u] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[(u - 1, u - 1)];
            let mut w = a[(u, u - 1)] * a[(u - 1, u)];
            if l == u - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = libm::sqrt(q.abs());
                x += t;
                if q >= 0.0 {
                    let z = p + libm::copysign(z, p);
                    wr[u - 1] = x + z;
                    wr[u] = if z != 0.0 { x - w / z } else { x + z };
                    wi[u - 1] = 0.0;
                    wi[u] = 0.0;
                } else {
                    wr[u - 1] = x + p;
                    wr[u] = x + p;
                    wi[u - 1] = -z;
                    wi[u] = z;
                }
                nn -= 2;
                break;
            }

            total += 1;
            if total > MAX_SWEEPS_PER_EIGENVALUE * n {
                return Err(Error::Numeric("eigenvalue iteration did not converge".into()));
            }
            if its > 0 && its % 10 == 0 {
                t += x;
                for i in 0..=u {
                    a[(i, i)] -= x;
                }
                let s = a[(u, u - 1)].abs() + a[(u - 1, u - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            let (mut p, mut q, mut r);
            let mut m = u - 2;
            loop {
                let z = a[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
                q = a[(m + 1, m + 1)] - z - rr - ss;
                r = a[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let uu = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                let vv = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                if uu + vv == vv {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=u {
                a[(i, i - 2)] = 0.0;
                if i != m + 2 {
                    a[(i, i - 3)] = 0.0;
                }
            }
            for k in m..u {
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = if k != u - 1 { a[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = libm::copysign(libm::sqrt(p * p + q * q + r * r), p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if l != m {
                        a[(k, k - 1)] = -a[(k, k - 1)];
                    }
                } else {
                    a[(k, k - 1)] = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;
                for j in k..=u {
                    let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                    if k != u - 1 {
                        pp += r * a[(k + 2, j)];
                        a[(k + 2, j)] -= pp * z;
                    }
                    a[(k + 1, j)] -= pp * y;
                    a[(k, j)] -= pp * x;
                }
                for i in l..=u.min(k + 3) {
                    let mut pp = x * a[(i, k)] + y * a[(i, k + 1)];
                    if k != u - 1 {
                        pp += z * a[(i, k + 2)];
                        a[(i, k + 2)] -= pp * r;
                    }
                    a[(i, k + 1)] -= pp * q;
                    a[(i, k)] -= pp;
                }
            }
        }
    }
    Ok(wr.into_iter().zip(wi).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_re(m: DMatrix<f64>) -> Vec<f64> {
        let mut v: Vec<f64> = eigenvalues(m).unwrap().into_iter().map(|z| z.0).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn triangular() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 5.0, 7.0, 0.0, 3.0, 2.0, 0.0, 0.0, -2.0]);
        let v = sorted_re(m);
        for (a, b) in v.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_is_complex() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let mut v = eigenvalues(m).unwrap();
        v.sort_by(|a, b| a.1.total_cmp(&b.1));
        assert!((v[0].1 + 1.0).abs() < 1e-15 && (v[1].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn repeated_and_zero() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 0.0, 2.0, 2.0, 2.0, 5.0]));
        let s = DMatrix::from_fn(6, 6, |i, j| 1.0 / (1.0 + i as f64 + 2.0 * j as f64) + if i == j { 1.0 } else { 0.0 });
        let s_inv = s.clone().try_inverse().unwrap();
        let v = sorted_re(&s * d * s_inv);
        for (a, b) in v.iter().zip([0.0, 0.0, 2.0, 2.0, 2.0, 5.0]) {
            assert!((a - b).abs() < 1e-9, "{v:?}");
        }
    }

    #[test]
    fn companion_matrix() {
        // roots 1, 2, 3, 4
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[10.0, -35.0, 50.0, -24.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        );
        let v = sorted_re(m);
        for (a, b) in v.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
