use std::cmp::Ordering;

/// A sorting permutation: `order[r]` is the index holding the `r`-th
/// largest value, and `inverse[i]` is the rank of index `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SortPermutation {
    order: Vec<usize>,
    inverse: Vec<usize>,
}

impl SortPermutation {
    /// Stable non-increasing sort; ties keep ascending index order.
    pub fn descending(x: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&a, &b| x[b].partial_cmp(&x[a]).unwrap_or(Ordering::Equal));
        Self::from_order(order)
    }

    /// Builds from an explicit order; panics if it is not a permutation.
    pub fn from_order(order: Vec<usize>) -> Self {
        let mut inverse = vec![usize::MAX; order.len()];
        for (rank, &i) in order.iter().enumerate() {
            assert!(
                i < order.len() && inverse[i] == usize::MAX,
                "not a permutation"
            );
            inverse[i] = rank;
        }
        Self { order, inverse }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_order((0..d).collect())
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// `P x`: the source vector rearranged into rank order.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.order.iter().map(|&i| x[i]).collect()
    }

    /// `P^{-1} y`: scatter rank-ordered values back to source positions.
    pub fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        self.inverse.iter().map(|&r| y[r]).collect()
    }
}

/// Largest `k` with `sorted[0] - sorted[k-1] <= delta`; at least 1.
pub fn active_count(sorted: &[f64], delta: f64) -> usize {
    let top = sorted[0];
    sorted.iter().take_while(|&&v| top - v <= delta).count().max(1)
}
