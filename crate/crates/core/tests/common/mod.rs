//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

/// All permutations of `1..=m` as rank vectors, by recursive insertion.
pub fn all_rank_vectors(m: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                prefix.push(v + 1);
                rec(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; m], &mut out);
    out
}

/// Unordered item pairs ordered the same way by both rank vectors.
pub fn concordance(a: &[usize], b: &[usize]) -> usize {
    let mut c = 0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            if (a[i] > a[j]) == (b[i] > b[j]) {
                c += 1;
            }
        }
    }
    c
}

/// Mallows pmf with the normalizer summed over every permutation.
pub fn brute_pmf(epsilon: f64, center: &[usize], out: &[usize]) -> f64 {
    let m = center.len();
    let w = epsilon / (m - 1) as f64;
    let z: f64 = all_rank_vectors(m)
        .iter()
        .map(|p| (w * concordance(center, p) as f64).exp())
        .sum();
    (w * concordance(center, out) as f64).exp() / z
}

/// Remove-and-reinsert neighbors of a rank vector, by brute force over all
/// permutations: `b` is a neighbor when some item can be deleted from both so
/// that the remaining relative orders agree.
pub fn brute_neighbors(r: &[usize]) -> Vec<Vec<usize>> {
    let m = r.len();
    all_rank_vectors(m)
        .into_iter()
        .filter(|p| p.as_slice() != r)
        .filter(|p| {
            (0..m).any(|k| {
                (0..m).all(|i| {
                    (0..m).all(|j| i == k || j == k || i == j || (r[i] > r[j]) == (p[i] > p[j]))
                })
            })
        })
        .collect()
}

/// Sample mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Simpson's rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let x = a + k as f64 * h;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}
