/// Dense numbering of the forward arcs `(i, j)`, `0 <= i < j < n_nodes`,
/// in row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArcSet {
    n_nodes: usize,
}

impl ArcSet {
    pub fn new(n_nodes: usize) -> Self {
        Self { n_nodes }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn len(&self) -> usize {
        self.n_nodes * self.n_nodes.saturating_sub(1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n_nodes, "arc ({i}, {j}) out of range");
        // Arcs leaving nodes 0..i come first.
        i * (2 * self.n_nodes - i - 1) / 2 + (j - i - 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n_nodes;
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
    }
}
