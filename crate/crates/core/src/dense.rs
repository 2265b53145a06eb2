//! All eigenvalues of a real square matrix: balancing, elimination to upper
//! Hessenberg form, then the Francis double-shift QR iteration.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::DMat;

const RADIX: f64 = 2.0;
const MAX_ITS: usize = 60;

/// 1-based square work array.
struct Work {
    n: usize,
    data: Vec<f64>,
}

impl Work {
    fn new(m: &DMat) -> Self {
        let n = m.rows();
        let mut data = vec![0.0; (n + 1) * (n + 1)];
        for i in 0..n {
            for j in 0..n {
                data[(i + 1) * (n + 1) + j + 1] = m[(i, j)];
            }
        }
        Self { n, data }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.n + 1) + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * (self.n + 1) + j]
    }

    fn swap(&mut self, (i1, j1): (usize, usize), (i2, j2): (usize, usize)) {
        let s = self.n + 1;
        self.data.swap(i1 * s + j1, i2 * s + j2);
    }
}

fn balance(a: &mut Work) {
    let n = a.n;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 1..=n {
                if j != i {
                    c += a.at(j, i).abs();
                    r += a.at(i, j).abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 1..=n {
                        *a.at_mut(i, j) *= g;
                    }
                    for j in 1..=n {
                        *a.at_mut(j, i) *= f;
                    }
                }
            }
        }
    }
}

fn hessenberg(a: &mut Work) {
    let n = a.n;
    for m in 2..n {
        let mut x: f64 = 0.0;
        let mut i = m;
        for j in m..=n {
            if a.at(j, m - 1).abs() > x.abs() {
                x = a.at(j, m - 1);
                i = j;
            }
        }
        if i != m {
            for j in m - 1..=n {
                a.swap((i, j), (m, j));
            }
            for j in 1..=n {
                a.swap((j, i), (j, m));
            }
        }
        if x != 0.0 {
            for i in m + 1..=n {
                let mut y = a.at(i, m - 1);
                if y != 0.0 {
                    y /= x;
                    *a.at_mut(i, m - 1) = y;
                    for j in m..=n {
                        let v = a.at(m, j);
                        *a.at_mut(i, j) -= y * v;
                    }
                    for j in 1..=n {
                        let v = a.at(j, i);
                        *a.at_mut(j, m) += y * v;
                    }
                }
            }
        }
    }
    for i in 1..=n {
        for j in 1..i.saturating_sub(1) {
            *a.at_mut(i, j) = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

#[allow(unused_assignments)]
fn hqr(a: &mut Work) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = a.n;
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a.at(i, j).abs();
        }
    }
    let mut nn = n;
    let mut t = 0.0;
    let (mut p, mut q, mut r) = (0.0, 0.0, 0.0);
    let (mut x, mut y, mut z, mut w);
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = a.at(l - 1, l - 1).abs() + a.at(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a.at(l, l - 1).abs() <= f64::EPSILON * s {
                    *a.at_mut(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            x = a.at(nn, nn);
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
            } else {
                y = a.at(nn - 1, nn - 1);
                w = a.at(nn, nn - 1) * a.at(nn - 1, nn);
                if l == nn - 1 {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + sign(z, p);
                        wr[nn - 1] = x + z;
                        wr[nn] = x + z;
                        if z != 0.0 {
                            wr[nn] = x - w / z;
                        }
                        wi[nn - 1] = 0.0;
                        wi[nn] = 0.0;
                    } else {
                        wr[nn - 1] = x + p;
                        wr[nn] = x + p;
                        wi[nn - 1] = -z;
                        wi[nn] = z;
                    }
                    nn -= 2;
                } else {
                    if its == MAX_ITS {
                        return Err(Error::NotConverged {
                            what: "dense QR iteration",
                            iterations: its,
                            estimate: x + t,
                            residual: a.at(nn, nn - 1).abs(),
                        });
                    }
                    if its == 10 || its == 20 || its == 40 {
                        t += x;
                        for i in 1..=nn {
                            *a.at_mut(i, i) -= x;
                        }
                        let s = a.at(nn, nn - 1).abs() + a.at(nn - 1, nn - 2).abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let mut m = nn - 2;
                    loop {
                        z = a.at(m, m);
                        r = x - z;
                        let s = y - z;
                        p = (r * s - w) / a.at(m + 1, m) + a.at(m, m + 1);
                        q = a.at(m + 1, m + 1) - z - r - s;
                        r = a.at(m + 2, m + 1);
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a.at(m, m - 1).abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a.at(m - 1, m - 1).abs() + z.abs() + a.at(m + 1, m + 1).abs());
                        if u <= f64::EPSILON * v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m + 2..=nn {
                        *a.at_mut(i, i - 2) = 0.0;
                        if i != m + 2 {
                            *a.at_mut(i, i - 3) = 0.0;
                        }
                    }
                    let mut k = m;
                    while k + 1 <= nn {
                        if k != m {
                            p = a.at(k, k - 1);
                            q = a.at(k + 1, k - 1);
                            r = 0.0;
                            if k != nn - 1 {
                                r = a.at(k + 2, k - 1);
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    *a.at_mut(k, k - 1) = -a.at(k, k - 1);
                                }
                            } else {
                                *a.at_mut(k, k - 1) = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                p = a.at(k, j) + q * a.at(k + 1, j);
                                if k != nn - 1 {
                                    p += r * a.at(k + 2, j);
                                    *a.at_mut(k + 2, j) -= p * z;
                                }
                                *a.at_mut(k + 1, j) -= p * y;
                                *a.at_mut(k, j) -= p * x;
                            }
                            let mmin = nn.min(k + 3);
                            for i in l..=mmin {
                                p = x * a.at(i, k) + y * a.at(i, k + 1);
                                if k != nn - 1 {
                                    p += z * a.at(i, k + 2);
                                    *a.at_mut(i, k + 2) -= p * r;
                                }
                                *a.at_mut(i, k + 1) -= p * q;
                                *a.at_mut(i, k) -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn < 2 || l + 1 >= nn {
                break;
            }
        }
    }
    Ok((wr, wi))
}

/// Eigenvalues sorted by real part, largest first (ties by imaginary part).
pub fn eigenvalues(m: &DMat) -> Result<Vec<Complex64>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "eigenvalues of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    if m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameters("matrix has non-finite entries".into()));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = Work::new(m);
    balance(&mut a);
    hessenberg(&mut a);
    let (wr, wi) = hqr(&mut a)?;
    let mut out: Vec<Complex64> = (1..=n).map(|k| Complex64::new(wr[k], wi[k])).collect();
    out.sort_by(|u, v| v.re.total_cmp(&u.re).then(v.im.total_cmp(&u.im)));
    Ok(out)
}
