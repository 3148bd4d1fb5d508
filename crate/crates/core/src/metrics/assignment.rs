//! Exact maximum-weight bipartite matching (Kuhn–Munkres with potentials).

use num_rational::BigRational;
use num_traits::{Signed, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    /// (row, column) pairs, sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub total: BigRational,
}

/// Maximum-weight one-to-one matching on a rectangular matrix of
/// non-negative scores. Every row (or every column, whichever side is
/// smaller) is matched; zero-score pairs are included.
pub fn assignment_max(scores: &[Vec<BigRational>]) -> Assignment {
    let rows = scores.len();
    let cols = scores.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Assignment {
            pairs: Vec::new(),
            total: BigRational::zero(),
        };
    }
    assert!(
        scores.iter().all(|r| r.len() == cols),
        "score matrix must be rectangular"
    );
    let transposed = rows > cols;
    let (n, m) = if transposed { (cols, rows) } else { (rows, cols) };
    // minimise negated scores; the solver wants n <= m
    let cost = |i: usize, j: usize| -> BigRational {
        if transposed {
            -scores[j][i].clone()
        } else {
            -scores[i][j].clone()
        }
    };
    let inf = scores
        .iter()
        .flatten()
        .fold(BigRational::zero(), |acc, x| acc + x.abs())
        * BigRational::from_integer(2.into())
        + BigRational::from_integer(1.into());

    let mut u = vec![BigRational::zero(); n + 1];
    let mut v = vec![BigRational::zero(); m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf.clone(); m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf.clone();
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - &u[i0] - &v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j].clone();
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += &delta;
                    v[j] -= &delta;
                } else {
                    minv[j] -= &delta;
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

    let mut pairs: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| p[j] != 0)
        .map(|j| {
            let (r, c) = (p[j] - 1, j - 1);
            if transposed {
                (c, r)
            } else {
                (r, c)
            }
        })
        .collect();
    pairs.sort_unstable();
    let total = pairs
        .iter()
        .fold(BigRational::zero(), |acc, &(r, c)| acc + &scores[r][c]);
    Assignment { pairs, total }
}
