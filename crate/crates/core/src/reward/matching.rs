//! Maximum-weight bipartite matching over a similarity matrix.
//!
//! Only entries strictly above `tau` are eligible. The optimum is found with
//! the Hungarian method. Ties are broken by the row assignment vector (the
//! gold index chosen for each predicted item, with "unmatched" ranking after
//! every index): the lexicographically smallest optimal vector wins. Two
//! totals within [`TIE_EPSILON`] count as tied.

use serde::Serialize;

/// Totals closer than this are treated as equal when breaking ties.
pub const TIE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchPair {
    pub predicted: usize,
    pub gold: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MatchSet {
    /// Sorted by `predicted`; no index repeats on either side.
    pub pairs: Vec<MatchPair>,
}

impl MatchSet {
    pub fn total(&self) -> f64 {
        self.pairs.iter().map(|p| p.score).sum()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// `sim[i][j]` is the similarity of predicted item `i` to gold item `j`.
/// All rows must have the same length.
pub fn optimal_matching(sim: &[Vec<f64>], tau: f64) -> MatchSet {
    let rows = sim.len();
    let cols = sim.first().map_or(0, Vec::len);
    debug_assert!(sim.iter().all(|r| r.len() == cols), "ragged similarity matrix");
    if rows == 0 || cols == 0 {
        return MatchSet::default();
    }
    let weight = |i: usize, j: usize| {
        let s = sim[i][j];
        if s > tau {
            s
        } else {
            0.0
        }
    };

    let all_cols: Vec<usize> = (0..cols).collect();
    let all_rows: Vec<usize> = (0..rows).collect();
    let best = max_weight(&weight, &all_rows, &all_cols);

    // Fix rows in order, each to the smallest column that still admits an
    // optimal completion.
    let mut free_cols = all_cols;
    let mut fixed = 0.0;
    let mut pairs = Vec::new();
    for i in 0..rows {
        let rest_rows: Vec<usize> = (i + 1..rows).collect();
        let mut chosen = None;
        for (pos, &j) in free_cols.iter().enumerate() {
            let w = weight(i, j);
            if w <= 0.0 {
                continue;
            }
            let remaining: Vec<usize> = free_cols
                .iter()
                .copied()
                .filter(|&c| c != j)
                .collect();
            let completion = fixed + w + max_weight(&weight, &rest_rows, &remaining);
            if completion >= best - TIE_EPSILON {
                chosen = Some(pos);
                break;
            }
        }
        if let Some(pos) = chosen {
            let j = free_cols.remove(pos);
            let score = sim[i][j];
            fixed += score;
            pairs.push(MatchPair {
                predicted: i,
                gold: j,
                score,
            });
        }
    }
    MatchSet { pairs }
}

/// Optimal total weight of the sub-problem restricted to `rows` × `cols`.
fn max_weight<F: Fn(usize, usize) -> f64>(weight: &F, rows: &[usize], cols: &[usize]) -> f64 {
    if rows.is_empty() || cols.is_empty() {
        return 0.0;
    }
    let n = rows.len().max(cols.len());
    // square cost matrix; padding and ineligible cells cost 0
    let mut cost = vec![vec![0.0; n]; n];
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            cost[a][b] = -weight(i, j);
        }
    }
    let assignment = hungarian(&cost);
    assignment
        .iter()
        .enumerate()
        .filter(|&(a, &b)| a < rows.len() && b < cols.len())
        .map(|(a, &b)| weight(rows[a], cols[b]))
        .sum()
}

/// Minimum-cost assignment on a square matrix (shortest augmenting path
/// with potentials, O(n³)). Returns the column assigned to each row.
pub(crate) fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
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

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(m: &MatchSet) -> Vec<(usize, usize)> {
        m.pairs.iter().map(|p| (p.predicted, p.gold)).collect()
    }

    #[test]
    fn single_cell() {
        let m = optimal_matching(&[vec![0.9]], 0.35);
        assert_eq!(m.pairs, vec![MatchPair { predicted: 0, gold: 0, score: 0.9 }]);
    }

    #[test]
    fn beats_greedy() {
        let m = optimal_matching(&[vec![0.9, 0.8], vec![0.85, 0.1]], 0.35);
        assert_eq!(pairs(&m), vec![(0, 1), (1, 0)]);
        assert!((m.total() - 1.65).abs() < 1e-12);
    }

    #[test]
    fn threshold_is_strict() {
        let m = optimal_matching(&[vec![0.35, 0.35], vec![0.35, 0.35]], 0.35);
        assert!(m.is_empty());
        let m = optimal_matching(&[vec![0.35 + 1e-9]], 0.35);
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn ties_pick_lexicographically_smallest() {
        let m = optimal_matching(&[vec![0.5, 0.5], vec![0.5, 0.5]], 0.35);
        assert_eq!(pairs(&m), vec![(0, 0), (1, 1)]);
        // 0.9 alone ties 0.45 + 0.45; (0,0) sorts first
        let m = optimal_matching(&[vec![0.9, 0.45], vec![0.45, 0.0]], 0.35);
        assert_eq!(pairs(&m), vec![(0, 0)]);
    }

    #[test]
    fn rectangular() {
        let m = optimal_matching(&[vec![0.2, 0.9, 0.4]], 0.35);
        assert_eq!(pairs(&m), vec![(0, 1)]);
        let m = optimal_matching(&[vec![0.2], vec![0.9], vec![0.4]], 0.35);
        assert_eq!(pairs(&m), vec![(1, 0)]);
        assert!(optimal_matching(&[], 0.35).is_empty());
        assert!(optimal_matching(&[vec![], vec![]], 0.35).is_empty());
    }

    #[test]
    fn hungarian_min_cost() {
        let cost = vec![
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ];
        let a = hungarian(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        assert_eq!(total, 5.0);
    }
}
