//! Perron roots and vectors of small nonnegative irreducible matrices, and the
//! max-plus quantities that govern their behavior under strong tilting.

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 100_000;
const TOLERANCE: f64 = 1e-13;

/// Perron root with left and right eigenvectors.
///
/// `right` is normalized to unit maximum; `left` is scaled so `left·right = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronPair {
    pub lambda: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

/// Whether every state reaches every other along positive entries.
pub fn is_irreducible(a: &[Vec<f64>]) -> bool {
    let n = a.len();
    (0..n).all(|s| reachable(a, s, false).iter().all(|&x| x) && reachable(a, s, true).iter().all(|&x| x))
}

fn reachable(a: &[Vec<f64>], start: usize, transpose: bool) -> Vec<bool> {
    let n = a.len();
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            let w = if transpose { a[j][i] } else { a[i][j] };
            if w > 0.0 && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

fn mat_vec(a: &[Vec<f64>], x: &[f64], shift: f64) -> Vec<f64> {
    a.iter()
        .zip(x)
        .map(|(row, xi)| row.iter().zip(x).map(|(aij, xj)| aij * xj).sum::<f64>() + shift * xi)
        .collect()
}

fn vec_mat(x: &[f64], a: &[Vec<f64>], shift: f64) -> Vec<f64> {
    let n = a.len();
    (0..n).map(|j| (0..n).map(|i| x[i] * a[i][j]).sum::<f64>() + shift * x[j]).collect()
}

/// Power iteration on `A + cI`, `c` the mean row sum. The shift puts mass on
/// the diagonal, so periodic matrices converge too.
fn dominant(a: &[Vec<f64>], transpose: bool) -> Result<Vec<f64>> {
    let n = a.len();
    let shift = a.iter().map(|r| r.iter().sum::<f64>()).sum::<f64>() / n as f64;
    let mut x = vec![1.0; n];
    let mut last_residual = f64::INFINITY;
    for it in 0..MAX_ITERATIONS {
        let mut y = if transpose { vec_mat(&x, a, shift) } else { mat_vec(a, &x, shift) };
        let top = y.iter().cloned().fold(0.0, f64::max);
        if !(top > 0.0 && top.is_finite()) {
            return Err(Error::NonConvergence { iterations: it, residual: f64::NAN });
        }
        y.iter_mut().for_each(|v| *v /= top);
        let change = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = y;
        if change <= 1e-15 {
            return Ok(x);
        }
        last_residual = change;
    }
    if last_residual <= 1e-10 {
        Ok(x)
    } else {
        Err(Error::NonConvergence { iterations: MAX_ITERATIONS, residual: last_residual })
    }
}

/// Perron root of a nonnegative irreducible matrix.
pub fn perron(a: &[Vec<f64>]) -> Result<PerronPair> {
    let n = a.len();
    if n == 0 || a.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput("matrix must be square and nonempty".into()));
    }
    let right = dominant(a, false)?;
    let left = dominant(a, true)?;
    let ar = mat_vec(a, &right, 0.0);
    let lr: f64 = left.iter().zip(&right).map(|(l, r)| l * r).sum();
    let lar: f64 = left.iter().zip(&ar).map(|(l, r)| l * r).sum();
    let lambda = lar / lr;
    // consistency of the Rayleigh quotient with the eigen-equation
    let resid = ar.iter().zip(&right).map(|(x, r)| (x - lambda * r).abs()).fold(0.0, f64::max);
    if !(resid <= TOLERANCE.sqrt() * lambda.max(f64::MIN_POSITIVE)) {
        return Err(Error::NonConvergence { iterations: MAX_ITERATIONS, residual: resid });
    }
    Ok(PerronPair { lambda, left: left.iter().map(|l| l / lr).collect(), right })
}

/// Stationary distribution of an irreducible stochastic matrix.
pub fn stationary(pi: &[Vec<f64>]) -> Result<Vec<f64>> {
    let left = dominant(pi, true)?;
    let s: f64 = left.iter().sum();
    Ok(left.iter().map(|x| x / s).collect())
}

/// Maximum cycle mean of `w` over the edges where `support` is positive
/// (Karp's algorithm, walks started from every vertex).
pub fn max_cycle_mean(support: &[Vec<f64>], w: &[Vec<f64>]) -> f64 {
    let n = support.len();
    let mut d = vec![vec![f64::NEG_INFINITY; n]; n + 1];
    d[0] = vec![0.0; n];
    for k in 1..=n {
        for j in 0..n {
            d[k][j] = (0..n)
                .filter(|&i| support[i][j] > 0.0 && d[k - 1][i] > f64::NEG_INFINITY)
                .map(|i| d[k - 1][i] + w[i][j])
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
    (0..n)
        .filter(|&v| d[n][v] > f64::NEG_INFINITY)
        .map(|v| {
            (0..n)
                .filter(|&k| d[k][v] > f64::NEG_INFINITY)
                .map(|k| (d[n][v] - d[k][v]) / (n - k) as f64)
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Limits of `h(α) − α·μ*` and of the tilt gap `αh'(α) − h(α)` as `α → ∞`,
/// where `h(α) = log ρ(π ∘ e^{αw})` and `μ*` is the maximum cycle mean.
///
/// Returns `(μ*, −log ρ_c)`, `ρ_c` the Perron root of `π` restricted to the
/// critical graph (edges on cycles of mean `μ*`).
pub fn tilted_asymptote(pi: &[Vec<f64>], w: &[Vec<f64>]) -> Result<(f64, f64)> {
    let n = pi.len();
    let mu = max_cycle_mean(pi, w);
    let scale = w
        .iter()
        .flatten()
        .zip(pi.iter().flatten())
        .filter(|(_, p)| **p > 0.0)
        .map(|(x, _)| x.abs())
        .fold(1.0, f64::max);
    let tol = 1e-9 * scale;
    // potentials: longest walk values for the weights w − μ*, which have no positive cycles
    let mut u = vec![0.0; n];
    for _ in 0..=n {
        for i in 0..n {
            for j in 0..n {
                if pi[i][j] > 0.0 {
                    let cand = u[i] + w[i][j] - mu;
                    if cand > u[j] {
                        u[j] = cand;
                    }
                }
            }
        }
    }
    let tight: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if pi[i][j] > 0.0 && w[i][j] - mu + u[i] - u[j] >= -tol { pi[i][j] } else { 0.0 })
                .collect()
        })
        .collect();
    let mut rho: f64 = 0.0;
    for comp in strongly_connected(&tight) {
        let has_cycle = comp.len() > 1 || tight[comp[0]][comp[0]] > 0.0;
        if !has_cycle {
            continue;
        }
        let sub: Vec<Vec<f64>> = comp.iter().map(|&i| comp.iter().map(|&j| tight[i][j]).collect()).collect();
        rho = rho.max(perron(&sub)?.lambda);
    }
    if rho <= 0.0 {
        return Err(Error::NonConvergence { iterations: 0, residual: f64::NAN });
    }
    Ok((mu, -rho.ln()))
}

fn strongly_connected(a: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = a.len();
    let mut assigned = vec![false; n];
    let mut comps = Vec::new();
    for s in 0..n {
        if assigned[s] {
            continue;
        }
        let fwd = reachable(a, s, false);
        let bwd = reachable(a, s, true);
        let comp: Vec<usize> = (0..n).filter(|&j| fwd[j] && bwd[j]).collect();
        for &j in &comp {
            assigned[j] = true;
        }
        comps.push(comp);
    }
    comps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_closed_form() {
        let a = vec![vec![0.3, 1.2], vec![0.7, 0.4]];
        let tr = 0.7;
        let det: f64 = 0.3 * 0.4 - 1.2 * 0.7;
        let want = 0.5 * (tr + ((tr * tr) - 4.0 * det).sqrt());
        let p = perron(&a).unwrap();
        assert!((p.lambda - want).abs() < 1e-12);
    }

    #[test]
    fn periodic_matrix_converges() {
        let a = vec![vec![0.0, 2.0], vec![0.5, 0.0]];
        assert!((perron(&a).unwrap().lambda - 1.0).abs() < 1e-13);
    }

    #[test]
    fn reducible_detection() {
        assert!(!is_irreducible(&[vec![1.0, 0.0], vec![0.5, 0.5]]));
        assert!(is_irreducible(&[vec![0.0, 1.0], vec![1.0, 0.0]]));
    }

    #[test]
    fn stationary_of_two_state_chain() {
        let pi = vec![vec![0.9, 0.1], vec![0.3, 0.7]];
        let l = stationary(&pi).unwrap();
        assert!((l[0] - 0.75).abs() < 1e-13 && (l[1] - 0.25).abs() < 1e-13);
    }

    #[test]
    fn karp_on_small_graph() {
        let pi = vec![vec![0.0, 1.0, 0.0], vec![0.5, 0.0, 0.5], vec![1.0, 0.0, 0.0]];
        let w = vec![vec![0.0, 3.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]];
        // cycles: 0→1→0 mean 2, 0→1→2→0 mean 1
        assert!((max_cycle_mean(&pi, &w) - 2.0).abs() < 1e-15);
        let (mu, gap) = tilted_asymptote(&pi, &w).unwrap();
        assert!((mu - 2.0).abs() < 1e-15);
        assert!((gap + (0.5f64).sqrt().ln()).abs() < 1e-12);
    }
}
