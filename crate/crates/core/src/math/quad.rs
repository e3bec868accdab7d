//! Gauss–Hermite quadrature for expectations over a standard normal variable.
//!
//! Nodes are the eigenvalues of the Jacobi matrix of the Hermite recurrence
//! (symmetric tridiagonal, zero diagonal, off-diagonal sqrt(j/2)), computed
//! with the implicit-shift QL sweep and polished with two Newton steps on
//! the orthonormal recurrence; weights come from the derivative identity at
//! each node. Plain Newton from asymptotic guesses — the usual shortcut —
//! loses roots near the spectrum edge for rules this large, while the QL
//! route is unconditionally convergent.
//!
//! The rule integrates e^(-x^2) f(x) over the real line;
//! [`GaussHermite::expect`] applies the change of variable that turns it
//! into E[f(xi)] with xi ~ N(0,1).

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Number of nodes of the shared rule. 240 nodes keep the bit-MSE and
/// capacity integrands well below their 1e-10 / 1e-9 tolerances across the
/// whole SNR range exercised by the analyses.
pub const DEFAULT_NODES: usize = 240;

#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Orthonormal Hermite value h_n(z) and derivative h_n'(z).
fn hermite_value_and_derivative(n: usize, z: f64) -> (f64, f64) {
    let pim4 = 1.0 / PI.powf(0.25);
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 1..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Eigenvalues of a symmetric tridiagonal matrix by the implicit-shift QL
/// algorithm. `d` is the diagonal, `e` the subdiagonal (e[0..n-1] used).
fn tridiagonal_eigenvalues(mut d: Vec<f64>, mut e: Vec<f64>) -> Vec<f64> {
    let n = d.len();
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 50, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if i == l {
                    d[l] -= p;
                    e[l] = g;
                    e[m] = 0.0;
                }
            }
        }
    }
    d
}

impl GaussHermite {
    /// Build an `n`-node rule. Panics if `n == 0`.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "quadrature order must be positive");
        let diag = vec![0.0; n];
        let off: Vec<f64> = (1..n).map(|j| (j as f64 / 2.0).sqrt()).collect();
        let mut eig = tridiagonal_eigenvalues(diag, off);
        eig.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));

        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Two Newton polishes from the eigenvalue; it is already within
            // a few ulps, so the steps stay local.
            let mut z = eig[i];
            let mut pp = 0.0;
            for _ in 0..2 {
                let (p, dp) = hermite_value_and_derivative(n, z);
                pp = dp;
                z -= p / dp;
            }
            if 2 * i + 1 == n {
                z = 0.0; // middle node of an odd rule is exact
                let (_, dp) = hermite_value_and_derivative(n, z);
                pp = dp;
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            let w = 2.0 / (pp * pp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussHermite { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// E[f(xi)] for xi ~ N(0,1).
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let scale = 1.0 / PI.sqrt();
        let root2 = std::f64::consts::SQRT_2;
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(root2 * x);
        }
        acc * scale
    }
}

/// Shared rule used by the scalar special functions.
pub fn rule() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    RULE.get_or_init(|| GaussHermite::new(DEFAULT_NODES))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_sqrt_pi() {
        for n in [1, 2, 3, 7, 64, 129, 200, DEFAULT_NODES] {
            let q = GaussHermite::new(n);
            let total: f64 = q.weights.iter().sum();
            assert!((total - PI.sqrt()).abs() < 1e-12, "n={n}: {total}");
        }
    }

    #[test]
    fn three_point_rule_reference_values() {
        let q = GaussHermite::new(3);
        assert!((q.nodes[0] - 1.224_744_871_391_589).abs() < 1e-14);
        assert!(q.nodes[1].abs() < 1e-14);
        assert!((q.weights[0] - 0.295_408_975_150_919_35).abs() < 1e-14);
        assert!((q.weights[1] - 1.181_635_900_603_677_4).abs() < 1e-14);
    }

    #[test]
    fn gaussian_moments() {
        let q = rule();
        assert!((q.expect(|_| 1.0) - 1.0).abs() < 1e-13);
        assert!((q.expect(|x| x) - 0.0).abs() < 1e-13);
        assert!((q.expect(|x| x * x) - 1.0).abs() < 1e-12);
        assert!((q.expect(|x| x.powi(4)) - 3.0).abs() < 1e-11);
        assert!((q.expect(|x| x.powi(6)) - 15.0).abs() < 1e-10);
    }

    #[test]
    fn characteristic_function() {
        // E[cos xi] = e^(-1/2) for a standard normal.
        let q = rule();
        let got = q.expect(|x| x.cos());
        assert!((got - (-0.5f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn nodes_are_symmetric_and_sorted() {
        for n in [51, 200, DEFAULT_NODES] {
            let q = GaussHermite::new(n);
            for i in 0..q.len() {
                assert_eq!(q.nodes[i], -q.nodes[q.len() - 1 - i]);
                if i > 0 {
                    assert!(q.nodes[i] < q.nodes[i - 1], "n={n}: not descending at {i}");
                }
            }
        }
    }
}
