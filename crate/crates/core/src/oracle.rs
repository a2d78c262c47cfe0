//! Exact edge expansion by subset enumeration, for small graphs.

use num_rational::Ratio;
use thiserror::Error;

use crate::graph::Graph;

/// Default largest `n` accepted by [`exact_edge_expansion`].
pub const DEFAULT_VERTEX_CAP: usize = 22;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("exact enumeration needs n <= {cap}, graph has n = {n}")]
pub struct OracleError {
    pub n: usize,
    pub cap: usize,
}

/// An optimal set for `h(G) = min |∂S| / |S|` over `1 <= |S| <= n/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactExpansion {
    /// Number of edges leaving `S`.
    pub cut: u64,
    /// `|S|`.
    pub size: u64,
    /// Vertices of `S`, 0-indexed and ascending.
    pub subset: Vec<usize>,
}

impl ExactExpansion {
    /// The value as a reduced fraction.
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.cut, self.size)
    }

    pub fn value(&self) -> f64 {
        self.cut as f64 / self.size as f64
    }
}

/// Computes `h(G)` exactly with [`DEFAULT_VERTEX_CAP`].
pub fn exact_edge_expansion(g: &Graph) -> Result<ExactExpansion, OracleError> {
    exact_edge_expansion_capped(g, DEFAULT_VERTEX_CAP)
}

/// Enumerates all subsets of size at most `⌊n/2⌋`. Ratios are compared
/// exactly; among optimal sets the lexicographically smallest vertex list
/// is reported.
pub fn exact_edge_expansion_capped(g: &Graph, cap: usize) -> Result<ExactExpansion, OracleError> {
    let n = g.n();
    if n > cap || n >= 64 {
        return Err(OracleError { n, cap });
    }
    let nbr: Vec<u64> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0u64, |acc, &w| acc | (1 << w)))
        .collect();
    let half = (n / 2) as u32;

    let mut best: Option<(Ratio<u64>, Vec<usize>, u64, u64)> = None;
    for mask in 1u64..(1u64 << n) {
        let size = mask.count_ones();
        if size > half {
            continue;
        }
        let mut cut = 0u64;
        let mut rest = mask;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            cut += u64::from((nbr[v] & !mask).count_ones());
        }
        let r = Ratio::new(cut, u64::from(size));
        let better = match &best {
            None => true,
            Some((br, bs, _, _)) => r < *br || (r == *br && members(mask) < *bs),
        };
        if better {
            best = Some((r, members(mask), cut, u64::from(size)));
        }
    }
    let (_, subset, cut, size) = best.expect("n >= 3 gives at least one candidate subset");
    Ok(ExactExpansion { cut, size, subset })
}

fn members(mask: u64) -> Vec<usize> {
    (0..64).filter(|&i| mask >> i & 1 == 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_family, Family};

    fn family(f: Family) -> Graph {
        generate_family(f).unwrap()
    }

    /// Minimum over every non-empty proper subset with `min(|S|, n - |S|)`
    /// in the denominator.
    fn complement_form(g: &Graph) -> Ratio<u64> {
        let n = g.n();
        (1u64..(1 << n) - 1)
            .map(|mask| {
                let cut = g
                    .edges()
                    .iter()
                    .filter(|&&(u, v)| (mask >> u & 1) != (mask >> v & 1))
                    .count() as u64;
                let s = u64::from(mask.count_ones());
                Ratio::new(cut, s.min(n as u64 - s))
            })
            .min()
            .unwrap()
    }

    #[test]
    fn small_examples() {
        let two_triangles = Graph::new(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        let h = exact_edge_expansion(&two_triangles).unwrap();
        assert_eq!(h.cut, 0);
        assert_eq!(h.subset, vec![0, 1, 2]);

        let c4 = exact_edge_expansion(&family(Family::Cycle(4))).unwrap();
        assert_eq!((c4.cut, c4.size), (2, 2));
        assert_eq!(c4.ratio(), Ratio::from_integer(1));
        assert_eq!(c4.subset, vec![0, 1]);

        let k5 = exact_edge_expansion(&family(Family::Complete(5))).unwrap();
        assert_eq!((k5.cut, k5.size, k5.value()), (6, 2, 3.0));

        let k6 = exact_edge_expansion(&family(Family::Complete(6))).unwrap();
        assert_eq!((k6.cut, k6.size, k6.value()), (9, 3, 3.0));
        assert_eq!(k6.subset, vec![0, 1, 2]);
    }

    #[test]
    fn path_and_bipartite_values() {
        // Path on 6 vertices: cut the middle edge.
        assert_eq!(exact_edge_expansion(&family(Family::Path(6))).unwrap().ratio(), Ratio::new(1, 3));
        let k33 = family(Family::CompleteBipartite(3, 3));
        assert_eq!(exact_edge_expansion(&k33).unwrap().ratio(), complement_form(&k33));
    }

    #[test]
    fn cap_is_enforced() {
        let g = family(Family::Cycle(10));
        assert_eq!(exact_edge_expansion_capped(&g, 8), Err(OracleError { n: 10, cap: 8 }));
    }

    #[test]
    fn complement_symmetry_and_connectivity() {
        for seed in 0..40 {
            let g = match generate_family(Family::Gnp { n: 9, p: 0.35, seed }) {
                Ok(g) => g,
                Err(_) => continue,
            };
            let h = exact_edge_expansion(&g).unwrap();
            assert_eq!(h.ratio(), complement_form(&g));
            assert!(h.cut > 0);
        }
        let disconnected = Graph::new(5, [(0, 1), (2, 3), (3, 4)]).unwrap();
        assert_eq!(exact_edge_expansion(&disconnected).unwrap().cut, 0);
    }
}
