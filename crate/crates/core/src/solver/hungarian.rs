//! Rectangular min-cost assignment (Hungarian method with potentials).

/// Assigns each row to a distinct column at minimum total cost.
///
/// Works for any rectangular matrix; the smaller side is matched completely.
/// `+∞` entries are allowed and the value is `+∞` only when every complete
/// matching uses one. Returns `(value, row_to_col)` where `row_to_col[i]` is
/// `None` for rows left unmatched (only when rows outnumber columns).
pub fn assign(cost: &[Vec<f64>]) -> (f64, Vec<Option<usize>>) {
    let rows = cost.len();
    let cols = cost.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 {
        return (0.0, vec![None; rows]);
    }
    if rows <= cols {
        let (value, perm) = assign_tall(cost);
        (value, perm.into_iter().map(Some).collect())
    } else {
        let transposed: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| cost[i][j]).collect()).collect();
        let (value, col_to_row) = assign_tall(&transposed);
        let mut row_to_col = vec![None; rows];
        for (j, i) in col_to_row.into_iter().enumerate() {
            row_to_col[i] = Some(j);
        }
        (value, row_to_col)
    }
}

/// Rows ≤ columns. Infinite entries are replaced by a penalty large enough
/// that any matching using one is worse than every finite matching.
fn assign_tall(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = cost.len();
    let finite_total: f64 = cost.iter().flatten().filter(|c| c.is_finite()).map(|c| c.abs()).sum();
    let penalty = (finite_total + 1.0) * (n as f64 + 1.0);
    let has_inf = cost.iter().flatten().any(|c| !c.is_finite());
    let get = |i: usize, j: usize| {
        let c = cost[i][j];
        if c.is_finite() {
            c
        } else {
            penalty
        }
    };
    let perm = potentials(n, cost[0].len(), get);
    let mut value = 0.0;
    for (i, &j) in perm.iter().enumerate() {
        if has_inf && !cost[i][j].is_finite() {
            return (f64::INFINITY, perm);
        }
        value += cost[i][j];
    }
    (value, perm)
}

/// Shortest augmenting path Hungarian algorithm, `n ≤ m`.
fn potentials(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            perm[p[j] - 1] = j - 1;
        }
    }
    perm
}

/// Square assignment returning the lexicographically smallest optimal
/// permutation, fixing rows in order and re-solving the remainder.
pub fn assign_lexicographic(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = cost.len();
    let (best, _) = assign(cost);
    if !best.is_finite() || n == 0 {
        let (v, p) = assign(cost);
        return (v, p.into_iter().map(|j| j.unwrap_or(0)).collect());
    }
    let tol = 1e-12 * (1.0 + best.abs());
    let mut free_cols: Vec<usize> = (0..n).collect();
    let mut perm = Vec::with_capacity(n);
    let mut fixed = 0.0;
    for i in 0..n {
        let mut chosen = None;
        for (pos, &j) in free_cols.iter().enumerate() {
            if !cost[i][j].is_finite() {
                continue;
            }
            let rest_cols: Vec<usize> = free_cols.iter().copied().filter(|&c| c != j).collect();
            let sub: Vec<Vec<f64>> = (i + 1..n).map(|r| rest_cols.iter().map(|&c| cost[r][c]).collect()).collect();
            let (rest, _) = assign(&sub);
            if fixed + cost[i][j] + rest <= best + tol {
                chosen = Some(pos);
                break;
            }
        }
        // Round-off could in principle reject every column; fall back to the
        // cheapest completion in that case.
        let pos = chosen.unwrap_or_else(|| {
            let mut best_pos = 0;
            let mut best_val = f64::INFINITY;
            for (pos, &j) in free_cols.iter().enumerate() {
                let rest_cols: Vec<usize> = free_cols.iter().copied().filter(|&c| c != j).collect();
                let sub: Vec<Vec<f64>> =
                    (i + 1..n).map(|r| rest_cols.iter().map(|&c| cost[r][c]).collect()).collect();
                let v = cost[i][j] + assign(&sub).0;
                if v < best_val {
                    best_val = v;
                    best_pos = pos;
                }
            }
            best_pos
        });
        let j = free_cols.remove(pos);
        fixed += cost[i][j];
        perm.push(j);
    }
    let value = perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    (value, perm)
}
