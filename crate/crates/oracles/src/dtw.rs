//! DTW by exhaustive enumeration of alignment paths.

/// Minimum over every monotone path from `(0, 0)` to `(n-1, m-1)` using steps
/// (1,0), (0,1), (1,1) of `Σ |x_i - y_j|^q`, raised to `1/q`. Exponential; keep
/// both lengths small.
pub fn dtw_enumerate(x: &[[f64; 2]], y: &[[f64; 2]], q: f64) -> f64 {
    assert!(!x.is_empty() && !y.is_empty(), "sequences must be nonempty");
    let mut best = f64::INFINITY;
    let mut path = vec![(0usize, 0usize)];
    walk(x, y, q, &mut path, &mut best);
    best.powf(1.0 / q)
}

fn cost(x: &[[f64; 2]], y: &[[f64; 2]], q: f64, path: &[(usize, usize)]) -> f64 {
    path.iter()
        .map(|&(i, j)| {
            let dx = x[i][0] - y[j][0];
            let dy = x[i][1] - y[j][1];
            (dx * dx + dy * dy).sqrt().powf(q)
        })
        .sum()
}

fn walk(x: &[[f64; 2]], y: &[[f64; 2]], q: f64, path: &mut Vec<(usize, usize)>, best: &mut f64) {
    let (i, j) = *path.last().unwrap();
    if i == x.len() - 1 && j == y.len() - 1 {
        *best = best.min(cost(x, y, q, path));
        return;
    }
    for (di, dj) in [(1, 0), (0, 1), (1, 1)] {
        let (ni, nj) = (i + di, j + dj);
        if ni < x.len() && nj < y.len() {
            path.push((ni, nj));
            walk(x, y, q, path, best);
            path.pop();
        }
    }
}

/// Number of admissible paths for lengths `(n, m)` (Delannoy number).
pub fn path_count(n: usize, m: usize) -> u64 {
    if n == 1 || m == 1 {
        return 1;
    }
    path_count(n - 1, m) + path_count(n, m - 1) + path_count(n - 1, m - 1)
}
