//! The k-th power of a directed path.
//!
//! Vertices are positions `1..=n`. Every edge points toward position 1, which
//! is the unique sink. The graph is never materialised: edges and their
//! distance labels are arithmetic on positions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `P_n^k`: an edge `i -> j` exists iff `0 < i - j <= k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathPower {
    n: usize,
    k: usize,
}

impl PathPower {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n < 2 || k == 0 || k >= n {
            return Err(Error::InvalidGraph { n, k });
        }
        Ok(Self { n, k })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    /// `true` when every ordered pair is comparable (`k = n - 1`).
    pub fn is_linear_order(&self) -> bool {
        self.k + 1 == self.n
    }

    pub fn check_position(&self, pos: usize) -> Result<()> {
        if pos == 0 || pos > self.n {
            return Err(Error::PositionOutOfRange { pos, n: self.n });
        }
        Ok(())
    }

    pub fn edge_exists(&self, from: usize, to: usize) -> Result<bool> {
        self.check_position(from)?;
        self.check_position(to)?;
        Ok(self.adjacent_unchecked(from, to))
    }

    /// Edge test without range checks. Callers guarantee both positions are valid.
    #[inline]
    pub(crate) fn adjacent_unchecked(&self, from: usize, to: usize) -> bool {
        from > to && from - to <= self.k
    }

    /// Distance label of the edge `from -> to`: the number of underlying path
    /// vertices strictly between the two endpoints.
    pub fn d_value(&self, from: usize, to: usize) -> Result<usize> {
        if !self.edge_exists(from, to)? {
            return Err(Error::NotAnEdge { from, to });
        }
        Ok(from - to - 1)
    }

    pub fn is_sink(&self, pos: usize) -> Result<bool> {
        self.check_position(pos)?;
        Ok(pos == 1)
    }

    pub fn out_degree(&self, pos: usize) -> Result<usize> {
        self.check_position(pos)?;
        Ok(self.k.min(pos - 1))
    }

    pub fn in_degree(&self, pos: usize) -> Result<usize> {
        self.check_position(pos)?;
        Ok(self.k.min(self.n - pos))
    }

    pub fn edge_count(&self) -> usize {
        self.n * self.k - self.k * (self.k + 1) / 2
    }
}

impl std::fmt::Display for PathPower {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "P_{}^{}", self.n, self.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, k: usize) -> PathPower {
        PathPower::new(n, k).unwrap()
    }

    #[test]
    fn construction_bounds() {
        assert!(PathPower::new(2, 1).is_ok());
        assert!(PathPower::new(5, 4).is_ok());
        assert_eq!(
            PathPower::new(5, 5),
            Err(Error::InvalidGraph { n: 5, k: 5 })
        );
        assert!(PathPower::new(5, 0).is_err());
        assert!(PathPower::new(1, 1).is_err());
    }

    #[test]
    fn drawn_arcs() {
        assert!(g(4, 2).edge_exists(3, 1).unwrap());
        assert!(!g(4, 1).edge_exists(3, 1).unwrap());
        assert!(g(9, 2).edge_exists(7, 5).unwrap());
        for i in 1..=6 {
            assert!(!g(6, 3).edge_exists(i, i).unwrap());
        }
        // edges only point toward the sink
        assert!(!g(4, 3).edge_exists(1, 2).unwrap());
    }

    #[test]
    fn out_of_range_positions() {
        assert_eq!(
            g(4, 2).edge_exists(5, 1),
            Err(Error::PositionOutOfRange { pos: 5, n: 4 })
        );
        assert!(g(4, 2).is_sink(0).is_err());
    }

    #[test]
    fn distance_labels() {
        assert_eq!(g(9, 2).d_value(9, 7).unwrap(), 1);
        assert_eq!(g(9, 2).d_value(5, 4).unwrap(), 0);
        assert_eq!(g(4, 3).d_value(4, 1).unwrap(), 2);
        assert_eq!(
            g(9, 2).d_value(9, 6),
            Err(Error::NotAnEdge { from: 9, to: 6 })
        );
    }

    /// Longest directed path from `from` to `to` in vertex count, by DFS.
    fn longest_path_vertices(g: &PathPower, from: usize, to: usize) -> Option<usize> {
        if from == to {
            return Some(1);
        }
        (1..=g.n())
            .filter(|&next| g.edge_exists(from, next).unwrap())
            .filter_map(|next| longest_path_vertices(g, next, to))
            .max()
            .map(|len| len + 1)
    }

    #[test]
    fn d_value_matches_longest_path_enumeration() {
        for n in 2..=7 {
            for k in 1..n {
                let g = g(n, k);
                for i in 1..=n {
                    for j in 1..=n {
                        if g.edge_exists(i, j).unwrap() {
                            let l = longest_path_vertices(&g, i, j).unwrap();
                            assert_eq!(g.d_value(i, j).unwrap(), l - 2);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn sink_is_position_one() {
        assert!(g(5, 2).is_sink(1).unwrap());
        assert!(!g(5, 2).is_sink(5).unwrap());
        assert!(!g(2, 1).is_sink(2).unwrap());
    }

    #[test]
    fn degrees_and_edge_count_exhaustive() {
        for n in 2..=12 {
            for k in 1..n {
                let g = g(n, k);
                let mut edges = 0;
                for i in 1..=n {
                    let out = (1..=n).filter(|&j| g.edge_exists(i, j).unwrap()).count();
                    let inn = (1..=n).filter(|&j| g.edge_exists(j, i).unwrap()).count();
                    assert_eq!(out, g.out_degree(i).unwrap());
                    assert_eq!(inn, g.in_degree(i).unwrap());
                    assert_eq!(out == 0, g.is_sink(i).unwrap());
                    edges += out;
                }
                assert_eq!(edges, g.edge_count());
                if k == n - 1 {
                    assert_eq!(edges, n * (n - 1) / 2);
                }
                if k == 1 {
                    assert_eq!(edges, n - 1);
                }
            }
        }
    }
}
