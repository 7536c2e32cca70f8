//! Linearising pairwise precedence scores into a reading order.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::doc_model::BBox;
use crate::error::{Error, Result};

/// Score above which `i` is counted as winning against `j`.
pub const WIN_THRESHOLD: f64 = 0.5;
/// Default x-overlap ratio for grouping boxes into one column.
pub const DEFAULT_COLUMN_OVERLAP: f64 = 0.5;

/// `scores[i][j]` is the estimated probability that region `i` precedes
/// region `j`. The diagonal is ignored. Rows need not be complementary:
/// nothing here assumes `scores[i][j] + scores[j][i] == 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseOrderMatrix {
    scores: Vec<Vec<f64>>,
}

impl PairwiseOrderMatrix {
    pub fn new(scores: Vec<Vec<f64>>) -> Result<Self> {
        let n = scores.len();
        for (i, row) in scores.iter().enumerate() {
            if row.len() != n {
                return Err(Error::MatrixShapeMismatch {
                    regions: n,
                    detail: format!("row {i} has {} entries", row.len()),
                });
            }
            if let Some(j) = row.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::MatrixShapeMismatch {
                    regions: n,
                    detail: format!("entry [{i}][{j}] = {} outside [0, 1]", row[j]),
                });
            }
        }
        let mut scores = scores;
        for (i, row) in scores.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        Ok(Self { scores })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.scores[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.scores
    }

    /// Restricts the matrix to `keep` (indices into the current rows), in
    /// that order.
    pub fn submatrix(&self, keep: &[usize]) -> Self {
        let scores = keep
            .iter()
            .map(|&i| keep.iter().map(|&j| self.scores[i][j]).collect())
            .collect();
        Self { scores }
    }

    /// Number of opponents each item beats.
    pub fn copeland(&self) -> Vec<usize> {
        let n = self.len();
        (0..n)
            .map(|i| (0..n).filter(|&j| j != i && self.scores[i][j] > WIN_THRESHOLD).count())
            .collect()
    }

    /// Sum of each item's precedence scores.
    pub fn borda(&self) -> Vec<f64> {
        let n = self.len();
        (0..n).map(|i| (0..n).filter(|&j| j != i).map(|j| self.scores[i][j]).sum()).collect()
    }
}

/// A permutation of `0..n`: `as_slice()[k]` is the index of the k-th item read.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ReadingOrder(Vec<usize>);

impl ReadingOrder {
    pub fn new(permutation: Vec<usize>) -> Result<Self> {
        let n = permutation.len();
        let mut seen = vec![false; n];
        for &i in &permutation {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidOrder(format!("{permutation:?} is not a permutation of 0..{n}")));
            }
        }
        Ok(Self(permutation))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `rank[i]` is the position at which item `i` is read.
    pub fn ranks(&self) -> Vec<usize> {
        let mut rank = vec![0; self.0.len()];
        for (pos, &i) in self.0.iter().enumerate() {
            rank[i] = pos;
        }
        rank
    }
}

impl TryFrom<Vec<usize>> for ReadingOrder {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        ReadingOrder::new(v)
    }
}

impl From<ReadingOrder> for Vec<usize> {
    fn from(o: ReadingOrder) -> Vec<usize> {
        o.0
    }
}

fn geometric_cmp(a: &BBox, b: &BBox) -> Ordering {
    a.y0().total_cmp(&b.y0()).then(a.x0().total_cmp(&b.x0()))
}

/// Sorts items by Copeland wins, then Borda score, then top-to-bottom and
/// left-to-right position, with the index as the last resort.
pub fn decode_order(matrix: &PairwiseOrderMatrix, positions: &[BBox]) -> Result<ReadingOrder> {
    if positions.len() != matrix.len() {
        return Err(Error::DimensionMismatch {
            matrix: matrix.len(),
            positions: positions.len(),
        });
    }
    let copeland = matrix.copeland();
    let borda = matrix.borda();
    let mut order: Vec<usize> = (0..matrix.len()).collect();
    order.sort_by(|&i, &j| {
        copeland[j]
            .cmp(&copeland[i])
            .then(borda[j].total_cmp(&borda[i]))
            .then(geometric_cmp(&positions[i], &positions[j]))
            .then(i.cmp(&j))
    });
    Ok(ReadingOrder(order))
}

/// The 0/1 matrix that encodes `order` exactly.
pub fn matrix_from_order(order: &ReadingOrder) -> PairwiseOrderMatrix {
    let n = order.len();
    let rank = order.ranks();
    let scores = (0..n)
        .map(|i| (0..n).map(|j| if rank[i] < rank[j] { 1.0 } else { 0.0 }).collect())
        .collect();
    PairwiseOrderMatrix { scores }
}

pub fn geometric_order(positions: &[BBox]) -> ReadingOrder {
    geometric_order_with(positions, DEFAULT_COLUMN_OVERLAP)
}

/// Column-aware order: boxes whose x-intervals overlap by at least
/// `min_overlap` of the narrower box share a column; columns are read left
/// to right and each column top to bottom.
pub fn geometric_order_with(positions: &[BBox], min_overlap: f64) -> ReadingOrder {
    let n = positions.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&positions[i], &positions[j]);
            let overlap = (a.x1().min(b.x1()) - a.x0().max(b.x0())).max(0.0);
            let narrow = a.width().min(b.width());
            let shared = if narrow > 0.0 {
                overlap / narrow >= min_overlap
            } else {
                // Zero-width boxes join a column they fall inside.
                a.x0() <= b.x1() && b.x0() <= a.x1()
            };
            if shared {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let column: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    let mut column_left = vec![f64::INFINITY; n];
    for i in 0..n {
        column_left[column[i]] = column_left[column[i]].min(positions[i].x0());
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (ci, cj) = (column[i], column[j]);
        column_left[ci]
            .total_cmp(&column_left[cj])
            .then(ci.cmp(&cj))
            .then(geometric_cmp(&positions[i], &positions[j]))
            .then(i.cmp(&j))
    });
    ReadingOrder(order)
}

/// Fraction of discordant pairs between two orders over the same items.
pub fn kendall_tau_distance(a: &ReadingOrder, b: &ReadingOrder) -> f64 {
    let n = a.len();
    if n < 2 {
        return 0.0;
    }
    let (ra, rb) = (a.ranks(), b.ranks());
    let mut discordant = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if (ra[i] < ra[j]) != (rb[i] < rb[j]) {
                discordant += 1;
            }
        }
    }
    discordant as f64 / (n * (n - 1) / 2) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stacked(n: usize) -> Vec<BBox> {
        (0..n)
            .map(|i| BBox::new(0.0, 10.0 * i as f64, 100.0, 10.0 * i as f64 + 8.0).unwrap())
            .collect()
    }

    #[test]
    fn singleton() {
        let m = PairwiseOrderMatrix::new(vec![vec![0.0]]).unwrap();
        assert_eq!(decode_order(&m, &stacked(1)).unwrap().as_slice(), &[0]);
    }

    #[test]
    fn consistent_matrix_decodes() {
        let order = ReadingOrder::new(vec![2, 0, 1]).unwrap();
        let m = matrix_from_order(&order);
        assert_eq!(decode_order(&m, &stacked(3)).unwrap(), order);
    }

    #[test]
    fn cyclic_matrix_falls_back_to_geometry() {
        let mut s = vec![vec![0.0; 3]; 3];
        s[0][1] = 1.0;
        s[1][2] = 1.0;
        s[2][0] = 1.0;
        let m = PairwiseOrderMatrix::new(s).unwrap();
        assert_eq!(m.copeland(), vec![1, 1, 1]);
        assert_eq!(decode_order(&m, &stacked(3)).unwrap().as_slice(), &[0, 1, 2]);
    }

    #[test]
    fn matrix_from_order_examples() {
        let m = matrix_from_order(&ReadingOrder::new(vec![0, 1]).unwrap());
        assert_eq!(m.rows(), &[vec![0.0, 1.0], vec![0.0, 0.0]]);
        let m = matrix_from_order(&ReadingOrder::new(vec![1, 0]).unwrap());
        assert_eq!(m.rows(), &[vec![0.0, 0.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn dimension_mismatch() {
        let m = matrix_from_order(&ReadingOrder::identity(2));
        assert!(matches!(decode_order(&m, &stacked(3)), Err(Error::DimensionMismatch { matrix: 2, positions: 3 })));
    }

    #[test]
    fn matrix_validation() {
        assert!(PairwiseOrderMatrix::new(vec![vec![0.0, 1.0]]).is_err());
        assert!(PairwiseOrderMatrix::new(vec![vec![0.0, 1.5], vec![0.0, 0.0]]).is_err());
        // Diagonal is zeroed rather than rejected.
        let m = PairwiseOrderMatrix::new(vec![vec![0.7]]).unwrap();
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn reading_order_rejects_non_permutations() {
        assert!(ReadingOrder::new(vec![0, 0]).is_err());
        assert!(ReadingOrder::new(vec![1, 2]).is_err());
    }

    #[test]
    fn geometric_examples() {
        let top = BBox::new(0.0, 0.0, 100.0, 10.0).unwrap();
        let bottom = BBox::new(0.0, 50.0, 100.0, 60.0).unwrap();
        assert_eq!(geometric_order(&[bottom, top]).as_slice(), &[1, 0]);

        // Right column listed first; its boxes start higher than the left column's.
        let boxes = [
            BBox::new(520.0, 0.0, 1000.0, 400.0).unwrap(),
            BBox::new(520.0, 450.0, 1000.0, 900.0).unwrap(),
            BBox::new(0.0, 50.0, 480.0, 400.0).unwrap(),
            BBox::new(0.0, 450.0, 480.0, 950.0).unwrap(),
        ];
        assert_eq!(geometric_order(&boxes).as_slice(), &[2, 3, 0, 1]);
        assert!(geometric_order(&[]).is_empty());
    }

    #[test]
    fn kendall_tau() {
        let a = ReadingOrder::new(vec![0, 1, 2]).unwrap();
        let b = ReadingOrder::new(vec![2, 1, 0]).unwrap();
        assert_eq!(kendall_tau_distance(&a, &a), 0.0);
        assert_eq!(kendall_tau_distance(&a, &b), 1.0);
    }
}
