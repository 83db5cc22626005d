use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{NodeId, Topology, TopologyError};
use crate::scalar::Scalar;

/// Spectrum of a connected topology's adjacency matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport<T> {
    /// Side degrees when the graph is biregular bipartite.
    pub degrees: Option<(usize, usize)>,
    /// For bipartite graphs: largest absolute value after removing one maximal
    /// and one minimal eigenvalue. Otherwise: largest absolute value after
    /// removing one maximal eigenvalue.
    pub lambda: T,
    /// Eigenvalues in ascending order.
    pub eigenvalues: Vec<T>,
    /// Second-largest absolute eigenvalue of each one-side two-hop adjacency
    /// `A_i` (the diagonal blocks of `A^2`), whose top eigenvalue is `d0 * d1`.
    pub side_lambda: Option<[T; 2]>,
}

/// Eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations,
/// returned in ascending order.
#[allow(clippy::needless_range_loop)]
pub fn symmetric_eigenvalues<T: Scalar>(matrix: &[Vec<T>]) -> Vec<T> {
    let n = matrix.len();
    let mut a: Vec<Vec<T>> = matrix.to_vec();
    let tol = T::eigen_tolerance();
    let scale = a.iter().flatten().fold(T::one(), |acc, &v| acc.max(v.abs()));
    let two = T::lit(2.0);
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .fold(T::zero(), |acc, (i, j)| acc + a[i][j] * a[i][j]);
        if off.sqrt() <= tol * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq.abs() <= T::min_positive_value() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<T> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    eig
}

fn to_scalar<T: Scalar>(m: &[Vec<u32>]) -> Vec<Vec<T>> {
    m.iter()
        .map(|row| row.iter().map(|&c| T::from_count(c as usize)).collect())
        .collect()
}

fn second_abs<T: Scalar>(sorted: &[T]) -> T {
    let mut abs: Vec<T> = sorted.iter().map(|v| v.abs()).collect();
    abs.sort_by(|x, y| y.partial_cmp(x).expect("finite"));
    abs.get(1).copied().unwrap_or_else(T::zero)
}

pub fn spectral_report<T: Scalar>(g: &Topology) -> Result<SpectralReport<T>, TopologyError> {
    if !g.is_connected() {
        return Err(TopologyError::Disconnected);
    }
    let adjacency = g.adjacency_matrix();
    let eigenvalues = symmetric_eigenvalues(&to_scalar::<T>(&adjacency));
    let n = eigenvalues.len();

    let Some(partition) = g.partition() else {
        let lambda = eigenvalues[..n.saturating_sub(1)]
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()));
        return Ok(SpectralReport {
            degrees: None,
            lambda,
            eigenvalues,
            side_lambda: None,
        });
    };

    let lambda = if n > 2 {
        eigenvalues[1..n - 1].iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    } else {
        T::zero()
    };
    let degrees = g.biregular_degrees().ok();

    // A_i = B B^T restricted to side i, with B the n_a x n_b biadjacency block.
    let side_block = |side: usize| -> Vec<Vec<T>> {
        let rows: Vec<NodeId> = partition.side(side).collect();
        let mids: Vec<NodeId> = partition.side(1 - side).collect();
        rows.iter()
            .map(|&u| {
                rows.iter()
                    .map(|&v| {
                        let walks: u32 = mids.iter().map(|&w| adjacency[u][w] * adjacency[w][v]).sum();
                        T::from_count(walks as usize)
                    })
                    .collect()
            })
            .collect()
    };
    let side_lambda = degrees.map(|_| {
        [
            second_abs(&symmetric_eigenvalues(&side_block(0))),
            second_abs(&symmetric_eigenvalues(&side_block(1))),
        ]
    });
    Ok(SpectralReport {
        degrees,
        lambda,
        eigenvalues,
        side_lambda,
    })
}

/// Strict upper bound `sqrt(2 beta / alpha)` on the poor-node multiplier,
/// available only when `beta - sqrt(2 alpha beta) >= lambda / (2 d)`.
pub fn mu_bound<T: Scalar>(alpha: T, beta: T, lambda: T, d: T) -> Option<T> {
    let two = T::lit(2.0);
    let margin = beta - (two * alpha * beta).sqrt();
    (margin >= lambda / (two * d)).then(|| (two * beta / alpha).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeCountCheck<T> {
    pub edges: usize,
    pub center: T,
    pub slack: T,
    pub holds: bool,
}

/// Compares the edge count between `S0` and `S1` against
/// `theta0 theta1 (d0 n0 + d1 n1) / 2 +- lambda/2 [theta1 (1-theta0) n0 + theta0 (1-theta1) n1]`.
pub fn edge_count_bound_check<T: Scalar>(
    g: &Topology,
    s0: &BTreeSet<NodeId>,
    s1: &BTreeSet<NodeId>,
) -> Result<EdgeCountCheck<T>, TopologyError> {
    let report = spectral_report::<T>(g)?;
    EdgeCountChecker::new(g, &report)?.check(s0, s1)
}

/// Reusable form of [`edge_count_bound_check`] for many subset pairs on one graph.
pub struct EdgeCountChecker<'g, T> {
    g: &'g Topology,
    d: (usize, usize),
    lambda: T,
}

impl<'g, T: Scalar> EdgeCountChecker<'g, T> {
    pub fn new(g: &'g Topology, report: &SpectralReport<T>) -> Result<Self, TopologyError> {
        let d = g.biregular_degrees()?;
        Ok(Self {
            g,
            d,
            lambda: report.lambda,
        })
    }

    pub fn check(&self, s0: &BTreeSet<NodeId>, s1: &BTreeSet<NodeId>) -> Result<EdgeCountCheck<T>, TopologyError> {
        let p = self.g.partition().ok_or(TopologyError::NotBipartite)?;
        for (side, set) in [s0, s1].into_iter().enumerate() {
            if set.is_empty() {
                return Err(TopologyError::EmptySubset(side));
            }
            if let Some(&v) = set.iter().find(|&&v| v >= self.g.node_count() || p.side_of(v) != side) {
                return Err(TopologyError::WrongSide(v, side));
            }
        }
        let edges: usize = s0
            .iter()
            .flat_map(|&u| self.g.neighbors(u).iter())
            .filter(|(v, _)| s1.contains(v))
            .map(|&(_, m)| m as usize)
            .sum();

        let (n0, n1) = (T::from_count(p.n_a), T::from_count(p.n_b));
        let (d0, d1) = (T::from_count(self.d.0), T::from_count(self.d.1));
        let theta0 = T::from_count(s0.len()) / n0;
        let theta1 = T::from_count(s1.len()) / n1;
        let half = T::lit(0.5);
        let center = half * theta0 * theta1 * (d0 * n0 + d1 * n1);
        let slack = half * self.lambda * (theta1 * (T::one() - theta0) * n0 + theta0 * (T::one() - theta1) * n1);
        let holds = (T::from_count(edges) - center).abs() <= slack + T::lit(1e-9);
        Ok(EdgeCountCheck {
            edges,
            center,
            slack,
            holds,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_butterfly, build_complete, build_complete_bipartite, butterfly_to_bipartite};

    #[test]
    fn complete_bipartite_spectrum() {
        let r = spectral_report::<f64>(&build_complete_bipartite(2, 2)).unwrap();
        let expected = [-2.0, 0.0, 0.0, 2.0];
        for (a, b) in r.eigenvalues.iter().zip(expected) {
            assert!((a - b).abs() < 1e-9, "{:?}", r.eigenvalues);
        }
        assert!(r.lambda.abs() < 1e-9);
        for (a, b) in [(3, 3), (4, 4), (2, 5)] {
            let r = spectral_report::<f64>(&build_complete_bipartite(a, b)).unwrap();
            assert!(r.lambda < 1e-8);
            let top = ((a * b) as f64).sqrt();
            assert!((r.eigenvalues.last().unwrap() - top).abs() < 1e-9);
            assert!((r.eigenvalues[0] + top).abs() < 1e-9);
        }
    }

    #[test]
    fn complete_graph_spectrum() {
        // K_n: n-1 once, -1 with multiplicity n-1
        let r = spectral_report::<f64>(&build_complete(5)).unwrap();
        assert!((r.eigenvalues[4] - 4.0).abs() < 1e-9);
        assert!((r.lambda - 1.0).abs() < 1e-9);
    }

    #[test]
    fn f32_matches_f64() {
        let g = build_complete_bipartite(3, 3);
        let a = spectral_report::<f32>(&g).unwrap();
        let b = spectral_report::<f64>(&g).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((*x as f64 - y).abs() < 1e-4);
        }
    }

    #[test]
    fn butterfly_bipartite_has_gap() {
        let g = butterfly_to_bipartite(&build_butterfly(2).unwrap()).unwrap().topology;
        let r = spectral_report::<f64>(&g).unwrap();
        assert!(r.lambda < 4.0 - 1e-6, "lambda={}", r.lambda);
        let side = r.side_lambda.unwrap();
        assert!(side[0] < 16.0 - 1e-6);
    }

    #[test]
    fn disconnected_rejected() {
        let g = Topology::from_edges(
            crate::topology::TopologyKind::Explicit,
            4,
            Some(crate::topology::Partition { n_a: 2, n_b: 2 }),
            [(0, 2), (1, 3)],
        )
        .unwrap();
        assert_eq!(spectral_report::<f64>(&g).unwrap_err(), TopologyError::Disconnected);
    }

    #[test]
    fn mu_bound_examples() {
        let b = mu_bound(0.01f64, 0.5, 0.1, 10.0).unwrap();
        assert!((b - 10.0).abs() < 1e-12);
        assert_eq!(mu_bound(0.5f64, 0.5, 0.0, 1.0), None);
        let b = mu_bound(0.02f64, 0.5, 0.0, 1.0).unwrap();
        assert!((b - 50f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn edge_count_examples() {
        let k22 = build_complete_bipartite(2, 2);
        let c = edge_count_bound_check::<f64>(&k22, &BTreeSet::from([0, 1]), &BTreeSet::from([2, 3])).unwrap();
        assert_eq!(c.edges, 4);
        assert!((c.center - 4.0).abs() < 1e-12);
        assert!(c.slack.abs() < 1e-8);
        assert!(c.holds);

        let k33 = build_complete_bipartite(3, 3);
        let c = edge_count_bound_check::<f64>(&k33, &BTreeSet::from([1]), &BTreeSet::from([4])).unwrap();
        assert_eq!(c.edges, 1);
        assert!((c.center - 1.0).abs() < 1e-12);
        assert!(c.holds);

        assert_eq!(
            edge_count_bound_check::<f64>(&k33, &BTreeSet::new(), &BTreeSet::from([4])).unwrap_err(),
            TopologyError::EmptySubset(0)
        );
    }
}
