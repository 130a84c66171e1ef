//! The selector's view of the arrivals so far.
//!
//! The observer holds true positions internally but only hands out what the
//! labelled induced subgraph determines: component shapes relative to their
//! lowest known vertex, the component count, the number of inner slots still
//! to be filled, and whether the newest arrival has an outgoing edge.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::PathPower;

/// A connected component of the induced subgraph.
///
/// Consecutive known positions differ by at most `k`; neighbouring components
/// have extremes more than `k` apart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    known: Vec<usize>,
}

impl Component {
    fn singleton(pos: usize) -> Self {
        Self { known: vec![pos] }
    }

    pub(crate) fn lo(&self) -> usize {
        self.known[0]
    }

    pub(crate) fn hi(&self) -> usize {
        *self.known.last().expect("components are never empty")
    }

    pub fn size(&self) -> usize {
        self.known.len()
    }

    pub fn span(&self) -> usize {
        self.hi() - self.lo() + 1
    }

    /// Missing positions between the extremes.
    pub fn inner_missing(&self) -> usize {
        self.span() - self.size()
    }

    /// Known vertices as offsets from the lowest one. This is what the edge
    /// labels reveal; absolute placement is not observable.
    pub fn offsets(&self) -> Vec<usize> {
        let lo = self.lo();
        self.known.iter().map(|&p| p - lo).collect()
    }
}

/// What the selector learns at one arrival.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationEvent {
    pub t: usize,
    /// The newest arrival has no outgoing edge in the induced subgraph.
    pub is_max: bool,
    /// Number of connected components.
    pub components: usize,
    /// Not-yet-arrived vertices that must land strictly inside a component.
    pub inner: usize,
    /// `(n - t) - k(c - 1) - b`: future arrivals not forced into a gap or an
    /// inner slot.
    pub slack: usize,
    pub condition_met: bool,
}

#[derive(Debug, Clone)]
pub struct Observer {
    graph: PathPower,
    t: usize,
    arrived: Vec<bool>,
    /// Keyed by the component's lowest position.
    components: BTreeMap<usize, Component>,
    inner: usize,
    last: Option<ObservationEvent>,
}

impl Observer {
    pub fn new(graph: PathPower) -> Self {
        Self {
            graph,
            t: 0,
            arrived: vec![false; graph.n() + 1],
            components: BTreeMap::new(),
            inner: 0,
            last: None,
        }
    }

    pub fn graph(&self) -> PathPower {
        self.graph
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn inner(&self) -> usize {
        self.inner
    }

    /// Slack before any arrival is reported as `n`.
    pub fn slack(&self) -> usize {
        let n = self.graph.n();
        match self.components.len() {
            0 => n,
            c => (n - self.t) - self.graph.k() * (c - 1) - self.inner,
        }
    }

    pub fn stopping_condition(&self) -> bool {
        self.t >= 1 && self.slack() == 0
    }

    pub fn last_event(&self) -> Option<&ObservationEvent> {
        self.last.as_ref()
    }

    /// Component shapes as sorted offset lists. The list itself is sorted so
    /// that the order carries no information about absolute placement.
    pub fn component_shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes: Vec<_> = self.components.values().map(Component::offsets).collect();
        shapes.sort();
        shapes
    }

    #[cfg(test)]
    fn components_by_position(&self) -> impl Iterator<Item = &Component> {
        self.components.values()
    }

    pub fn observe(&mut self, pos: usize) -> Result<ObservationEvent> {
        self.graph.check_position(pos)?;
        if self.arrived[pos] {
            return Err(Error::DuplicateArrival(pos));
        }
        let k = self.graph.k();
        let is_max = (pos.saturating_sub(k).max(1)..pos).all(|q| !self.arrived[q]);
        self.arrived[pos] = true;
        self.t += 1;

        let below = self
            .components
            .range(..=pos)
            .next_back()
            .map(|(&lo, c)| (lo, c.hi()));
        match below {
            Some((lo, hi)) if pos < hi => {
                // fills an inner slot
                let comp = self.components.get_mut(&lo).expect("present");
                let at = comp.known.partition_point(|&p| p < pos);
                comp.known.insert(at, pos);
                self.inner -= 1;
            }
            _ => {
                let mut merged = Component::singleton(pos);
                if let Some((lo, hi)) = below {
                    if pos - hi <= k {
                        let mut lower = self.components.remove(&lo).expect("present");
                        self.inner -= lower.inner_missing();
                        lower.known.append(&mut merged.known);
                        merged = lower;
                    }
                }
                let above = self.components.range(pos + 1..).next().map(|(&lo, _)| lo);
                if let Some(lo) = above {
                    if lo - pos <= k {
                        let mut upper = self.components.remove(&lo).expect("present");
                        self.inner -= upper.inner_missing();
                        merged.known.append(&mut upper.known);
                    }
                }
                self.inner += merged.inner_missing();
                self.components.insert(merged.lo(), merged);
            }
        }

        let slack = self.slack();
        let event = ObservationEvent {
            t: self.t,
            is_max,
            components: self.components.len(),
            inner: self.inner,
            slack,
            condition_met: slack == 0,
        };
        self.last = Some(event);
        Ok(event)
    }
}

/// Recomputes `(c, b)` from scratch by scanning the sorted arrived positions.
/// Reference implementation for the incremental bookkeeping above.
pub fn rescan_components(graph: &PathPower, arrived: &[usize]) -> (usize, usize) {
    let mut sorted = arrived.to_vec();
    sorted.sort_unstable();
    if sorted.is_empty() {
        return (0, 0);
    }
    let mut c = 1;
    let mut b = 0;
    for w in sorted.windows(2) {
        let gap = w[1] - w[0];
        if gap > graph.k() {
            c += 1;
        } else {
            b += gap - 1;
        }
    }
    (c, b)
}
