//! Optimal one-to-one assignment (Hungarian method, O(n³)).

/// Maximum-weight assignment of rows to columns.
///
/// Rectangular inputs are padded with zero-weight dummies. Returns, for each
/// row, the column it is matched to, or `None` if it was matched to a dummy.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.iter().map(Vec::len).max().unwrap_or(0);
    let n = rows.max(cols);
    if n == 0 {
        return Vec::new();
    }
    let cost = |i: usize, j: usize| -> f64 {
        -weights
            .get(i)
            .and_then(|r| r.get(j))
            .copied()
            .unwrap_or(0.0)
    };

    // Potentials and matching are 1-based; index 0 is the virtual source column.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
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
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut out = vec![None; rows];
    for j in 1..=n {
        let i = matched_row[j];
        if i >= 1 && i <= rows && j <= cols {
            out[i - 1] = Some(j - 1);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(weights: &[Vec<f64>], a: &[Option<usize>]) -> f64 {
        a.iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| weights[i][j]))
            .sum()
    }

    #[test]
    fn square() {
        let w = vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0], vec![3.0, 6.0, 9.0]];
        let a = max_weight_assignment(&w);
        assert_eq!(total(&w, &a), 14.0);
    }

    #[test]
    fn more_rows_than_columns() {
        let w = vec![vec![1.0], vec![7.0], vec![3.0]];
        assert_eq!(max_weight_assignment(&w), vec![None, Some(0), None]);
    }

    #[test]
    fn more_columns_than_rows() {
        let w = vec![vec![1.0, 5.0, 2.0]];
        assert_eq!(max_weight_assignment(&w), vec![Some(1)]);
    }

    #[test]
    fn empty() {
        assert!(max_weight_assignment(&[]).is_empty());
    }
}
