//! Symmetric tridiagonal eigenproblems: Sturm-sequence bisection for the
//! eigenvalues and inverse iteration for the eigenvectors.

/// Symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e`
/// (`e.len() == d.len() - 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    d: Vec<f64>,
    e: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(d: Vec<f64>, e: Vec<f64>) -> Self {
        assert!(!d.is_empty(), "empty matrix");
        assert_eq!(e.len() + 1, d.len(), "off-diagonal length");
        Self { d, e }
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.d.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.e[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let (lo, hi) = self.gershgorin();
        let tiny = f64::EPSILON * (hi.abs().max(lo.abs()) + f64::MIN_POSITIVE);
        let mut count = 0;
        let mut q = self.d[0] - x;
        for i in 0..self.d.len() {
            if i > 0 {
                q = self.d[i] - x - self.e[i - 1] * self.e[i - 1] / q;
            }
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection on the Sturm count.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        assert!(k < self.len(), "eigenvalue index out of range");
        let (mut lo, mut hi) = self.gershgorin();
        let span = hi - lo;
        lo -= 1e-12 * span.max(1.0);
        hi += 1e-12 * span.max(1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solves `(T − σI) x = b` by Gaussian elimination with partial pivoting.
    fn shifted_solve(&self, sigma: f64, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        let (glo, ghi) = self.gershgorin();
        let guard = f64::EPSILON * (ghi - glo).abs().max(1.0);
        // rows carry up to three nonzeros after pivoting: (diag, upper, upper2)
        let mut a: Vec<f64> = self.d.iter().map(|d| d - sigma).collect();
        let mut c: Vec<f64> = self.e.clone();
        c.push(0.0);
        let mut c2 = vec![0.0; n];
        let mut sub: Vec<f64> = self.e.clone();
        let mut x = b.to_vec();
        for i in 0..n - 1 {
            if sub[i].abs() > a[i].abs() {
                // swap rows i and i+1
                let (ai, ci, xi) = (a[i], c[i], x[i]);
                a[i] = sub[i];
                c[i] = a[i + 1];
                c2[i] = c[i + 1];
                x[i] = x[i + 1];
                let m = ai / a[i];
                a[i + 1] = ci - m * c[i];
                c[i + 1] = -m * c2[i];
                x[i + 1] = xi - m * x[i];
            } else {
                if a[i] == 0.0 {
                    a[i] = guard;
                }
                let m = sub[i] / a[i];
                a[i + 1] -= m * c[i];
                x[i + 1] -= m * x[i];
                c2[i] = 0.0;
            }
            sub[i] = 0.0;
        }
        if a[n - 1] == 0.0 {
            a[n - 1] = guard;
        }
        x[n - 1] /= a[n - 1];
        if n > 1 {
            x[n - 2] = (x[n - 2] - c[n - 2] * x[n - 1]) / a[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - c[i] * x[i + 1] - c2[i] * x[i + 2]) / a[i];
        }
        x
    }

    /// Unit eigenvector for the eigenvalue `lambda` by inverse iteration,
    /// made orthogonal to `against`.
    pub fn eigenvector(&self, lambda: f64, against: &[Vec<f64>]) -> Vec<f64> {
        let n = self.len();
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.1 * ((i as f64) * 0.618_033_988_75).fract())
            .collect();
        for _ in 0..4 {
            v = self.shifted_solve(lambda, &v);
            for u in against {
                let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= dot * y);
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.d[i] * v[i];
                if i > 0 {
                    s += self.e[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.e[i] * v[i + 1];
                }
                s
            })
            .collect()
    }
}
