//! Brute-force reference implementations. Nothing here shares code with the
//! `stepsvm` library; each routine re-derives its answer from definitions.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub bias: f64,
}

/// Exact maximizer of `sum a - 1/2 a'Qa` (`Q_ij = y_i y_j K_ij`) subject to
/// `y'a = 0`, `0 <= a <= C`, by enumerating every assignment of each
/// coefficient to {0, C, free}. For each assignment the equality-constrained
/// stationarity system on the free block is solved by SVD least squares;
/// consistent, box-feasible solutions are candidates and the best objective
/// wins. Exponential in `m`; intended for `m <= 9`.
pub fn brute_force_dual(k: &[Vec<f64>], y: &[f64], c: f64) -> Option<QpSolution> {
    let m = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * k[i][j];
    let objective = |a: &[f64]| {
        let mut quad = 0.0;
        for i in 0..m {
            for j in 0..m {
                quad += a[i] * a[j] * q(i, j);
            }
        }
        a.iter().sum::<f64>() - 0.5 * quad
    };
    let scale = 1.0 + k.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    let mut best: Option<(f64, Vec<f64>)> = None;
    let total = 3usize.pow(m as u32);
    let mut state = vec![0u8; m];
    for code in 0..total {
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..m).filter(|&i| state[i] == 2).collect();
        let mut a = vec![0.0; m];
        for i in 0..m {
            if state[i] == 1 {
                a[i] = c;
            }
        }
        if free.is_empty() {
            let s: f64 = (0..m).map(|i| a[i] * y[i]).sum();
            if s.abs() > 1e-12 * (1.0 + c) {
                continue;
            }
        } else {
            let f = free.len();
            let mut lhs = DMatrix::<f64>::zeros(f + 1, f + 1);
            let mut rhs = DVector::<f64>::zeros(f + 1);
            for (r, &i) in free.iter().enumerate() {
                for (cc, &j) in free.iter().enumerate() {
                    lhs[(r, cc)] = q(i, j);
                }
                lhs[(r, f)] = y[i];
                lhs[(f, r)] = y[i];
                let mut b = 1.0;
                for j in 0..m {
                    if state[j] == 1 {
                        b -= q(i, j) * c;
                    }
                }
                rhs[r] = b;
            }
            rhs[f] = -(0..m).filter(|&j| state[j] == 1).map(|j| y[j] * c).sum::<f64>();
            let svd = lhs.clone().svd(true, true);
            let Ok(sol) = svd.solve(&rhs, 1e-12 * scale) else {
                continue;
            };
            let resid = (&lhs * &sol - &rhs).amax();
            if resid > 1e-9 * scale * (1.0 + c) {
                continue;
            }
            let slack = 1e-10 * (1.0 + c);
            if free.iter().enumerate().any(|(r, _)| sol[r] < -slack || sol[r] > c + slack) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                a[i] = sol[r].clamp(0.0, c);
            }
        }
        let obj = objective(&a);
        if best.as_ref().is_none_or(|(b, _)| obj > *b) {
            best = Some((obj, a));
        }
    }
    let (objective, alpha) = best?;
    let bias = reference_bias(k, y, &alpha, c);
    Some(QpSolution {
        alpha,
        objective,
        bias,
    })
}

/// Offset from a dual solution: the mean of `y_i - sum_j a_j y_j K_ij` over
/// coefficients strictly inside the box, else the midpoint of the feasible
/// interval implied by the bounded ones.
pub fn reference_bias(k: &[Vec<f64>], y: &[f64], alpha: &[f64], c: f64) -> f64 {
    let m = y.len();
    let eps = 1e-9 * (1.0 + c);
    let resid = |i: usize| y[i] - (0..m).map(|j| alpha[j] * y[j] * k[j][i]).sum::<f64>();
    let free: Vec<usize> = (0..m).filter(|&i| alpha[i] > eps && alpha[i] < c - eps).collect();
    if !free.is_empty() {
        return free.iter().map(|&i| resid(i)).sum::<f64>() / free.len() as f64;
    }
    // y f >= 1 at a = 0 and y f <= 1 at a = C bound b from each side.
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for i in 0..m {
        let r = resid(i);
        let at_zero = alpha[i] <= eps;
        if (at_zero && y[i] > 0.0) || (!at_zero && y[i] < 0.0) {
            lo = lo.max(r);
        } else {
            hi = hi.min(r);
        }
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo,
        (false, true) => hi,
        _ => 0.0,
    }
}

pub fn decision(k_row: &[f64], y: &[f64], alpha: &[f64], bias: f64) -> f64 {
    k_row
        .iter()
        .zip(y)
        .zip(alpha)
        .map(|((kv, yv), a)| a * yv * kv)
        .sum::<f64>()
        + bias
}

/// Textbook single-pass Pearson correlation; `None` when either input is
/// constant.
pub fn naive_pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(x) || constant(y) {
        return None;
    }
    let n = x.len() as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    let r = (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt());
    Some(r.clamp(-1.0, 1.0))
}

/// Correlation filter by literal pair scanning over column-major data:
/// visit (i, j), i < j, in lexicographic order, skipping removed features;
/// when `|r| > threshold` remove the one with the larger mean (the larger
/// index on equal means). Returns the kept indices.
pub fn correlation_filter_oracle(columns: &[Vec<f64>], threshold: f64) -> Vec<usize> {
    let p = columns.len();
    let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let mut removed = vec![false; p];
    for i in 0..p {
        for j in i + 1..p {
            if removed[i] {
                break;
            }
            if removed[j] {
                continue;
            }
            let Some(r) = naive_pearson(&columns[i], &columns[j]) else {
                continue;
            };
            if r.abs() > threshold {
                let (mi, mj) = (mean(&columns[i]), mean(&columns[j]));
                if mi > mj {
                    removed[i] = true;
                } else {
                    removed[j] = true;
                }
            }
        }
    }
    (0..p).filter(|&i| !removed[i]).collect()
}

/// Cyclic Jacobi eigendecomposition of a small symmetric matrix. Returns
/// eigenvalues in decreasing order with unit eigenvectors (`vectors[i]` pairs
/// with `values[i]`).
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        let scale: f64 = (0..n).map(|i| m[i][i] * m[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[y][y].total_cmp(&m[x][x]));
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|r| v[r][i]).collect()).collect();
    (values, vectors)
}

/// Deterministic xorshift stream for generating oracle test problems.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed.wrapping_mul(0x2545_F491_4F6C_DD1D) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform().max(1e-300);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_dual() {
        let k = vec![vec![1.0, -1.0], vec![-1.0, 1.0]];
        let s = brute_force_dual(&k, &[-1.0, 1.0], 10.0).unwrap();
        assert!((s.alpha[0] - 0.5).abs() < 1e-12);
        assert!((s.objective - 0.5).abs() < 1e-12);
        assert!(s.bias.abs() < 1e-12);
    }

    #[test]
    fn pearson_half() {
        assert!((naive_pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(naive_pearson(&[1.0, 1.0], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn jacobi_diagonalizes() {
        let a = vec![vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 0.0], vec![0.0, 0.0, 5.0]];
        let (vals, vecs) = jacobi_eigen(&a);
        let want = [5.0, 3.0, 1.0];
        for (v, w) in vals.iter().zip(want) {
            assert!((v - w).abs() < 1e-12);
        }
        for (val, vec) in vals.iter().zip(&vecs) {
            for i in 0..3 {
                let av: f64 = (0..3).map(|j| a[i][j] * vec[j]).sum();
                assert!((av - val * vec[i]).abs() < 1e-12);
            }
        }
    }
}
