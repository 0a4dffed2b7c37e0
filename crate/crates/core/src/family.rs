use nalgebra::DMatrix;

/// Partial-transpose blocks C_K, K = 0, 1, …, each (K+1)×(K+1) in the basis |i, K−i⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockFamily {
    blocks: Vec<DMatrix<f64>>,
    traces: Vec<f64>,
    tail_mass: f64,
    normalized: bool,
}

impl BlockFamily {
    /// # Panics
    /// If block K is not (K+1)×(K+1).
    pub fn new(blocks: Vec<DMatrix<f64>>, tail_mass: f64, normalized: bool) -> Self {
        for (k, b) in blocks.iter().enumerate() {
            assert_eq!(b.shape(), (k + 1, k + 1), "block {k} has wrong shape");
        }
        let traces = blocks.iter().map(|b| b.trace()).collect();
        Self {
            blocks,
            traces,
            tail_mass,
            normalized,
        }
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> Option<&DMatrix<f64>> {
        self.blocks.get(k)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn traces(&self) -> &[f64] {
        &self.traces
    }

    /// Σ_K Tr C_K, i.e. the trace of the (possibly unnormalized) state.
    pub fn total_trace(&self) -> f64 {
        self.traces.iter().sum()
    }

    /// Σ_K Tr[J_K C_K].
    pub fn skew_trace(&self) -> f64 {
        self.blocks.iter().map(skew_diagonal_sum).sum()
    }

    /// Estimated trace carried by blocks beyond the last one stored.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Whether the family is known to have unit total trace.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Largest |entry| over all blocks.
    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(|b| b.amax()).fold(0.0, f64::max)
    }
}

/// Tr[J C] for the anti-identity J.
pub fn skew_diagonal_sum(c: &DMatrix<f64>) -> f64 {
    let n = c.nrows();
    (0..n).map(|i| c[(i, n - 1 - i)]).sum()
}

/// The n×n anti-identity.
pub fn anti_identity(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i + j + 1 == n { 1.0 } else { 0.0 })
}
