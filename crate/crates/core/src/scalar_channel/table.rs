//! Tabulated overlap map `o(gamma) = 2 psi'(gamma)` used to locate roots
//! cheaply before exact refinement.
//!
//! Nodes are uniform in `s = gamma / (1 + gamma)`, which covers the whole
//! half-line with resolution concentrated where `o` varies. Interpolation is
//! four-point Lagrange in `s`.

pub(crate) const TABLE_NODES: usize = 2048;

#[derive(Debug)]
pub(crate) struct OverlapTable {
    values: Vec<f64>,
}

#[inline]
pub(crate) fn node_gamma(k: usize) -> f64 {
    let s = k as f64 / TABLE_NODES as f64;
    s / (1.0 - s)
}

impl OverlapTable {
    pub(crate) fn build(exact: impl Fn(f64) -> f64) -> Self {
        OverlapTable { values: (0..TABLE_NODES).map(|k| exact(node_gamma(k))).collect() }
    }

    /// Largest tabulated `gamma`.
    pub(crate) fn gamma_max(&self) -> f64 {
        node_gamma(TABLE_NODES - 1)
    }

    pub(crate) fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Interpolated overlap, or `None` outside the tabulated range.
    pub(crate) fn interpolate(&self, gamma: f64) -> Option<f64> {
        let pos = gamma / (1.0 + gamma) * TABLE_NODES as f64;
        let k = pos.floor() as usize;
        if k + 1 >= TABLE_NODES {
            return None;
        }
        let base = k.saturating_sub(1).min(TABLE_NODES - 4);
        let t = pos - base as f64;
        let v = &self.values[base..base + 4];
        // Lagrange basis on the nodes 0, 1, 2, 3.
        let (t0, t1, t2, t3) = (t, t - 1.0, t - 2.0, t - 3.0);
        Some(
            -v[0] * t1 * t2 * t3 / 6.0 + v[1] * t0 * t2 * t3 / 2.0 - v[2] * t0 * t1 * t3 / 2.0
                + v[3] * t0 * t1 * t2 / 6.0,
        )
    }

    /// Index `k >= 1` with `values[k - 1] < target <= values[k]`, if the
    /// table reaches `target`.
    pub(crate) fn upper_index(&self, target: f64) -> Option<usize> {
        let k = self.values.partition_point(|&v| v < target);
        (k < TABLE_NODES).then_some(k.max(1))
    }
}
