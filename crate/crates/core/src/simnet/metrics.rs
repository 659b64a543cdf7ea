use std::collections::BTreeMap;
use std::time::Duration;

use super::SimNet;
use crate::protocol::{Entity, OpCounts};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EntityMetrics {
    pub sent: u64,
    pub received: u64,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub ops: OpCounts,
    /// Wall time spent inside this entity's step function.
    pub busy: Duration,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metrics {
    pub entities: BTreeMap<Entity, EntityMetrics>,
    pub dropped: u64,
    pub logical_time: u64,
}

impl Metrics {
    pub fn entity(&self, e: Entity) -> EntityMetrics {
        self.entities.get(&e).copied().unwrap_or_default()
    }

    pub fn total_bytes_sent(&self) -> u64 {
        self.entities.values().map(|m| m.bytes_sent).sum()
    }
}

/// Gathers transport counters from `net` and operation counters reported
/// by the actors.
pub fn collect_metrics(net: &SimNet, actors: &[(Entity, OpCounts)]) -> Metrics {
    let mut entities: BTreeMap<Entity, EntityMetrics> = BTreeMap::new();
    for (&e, c) in net.counters() {
        let m = entities.entry(e).or_default();
        m.sent = c.sent;
        m.received = c.received;
        m.bytes_sent = c.bytes_sent;
        m.bytes_received = c.bytes_received;
    }
    for (&e, &d) in net.busy() {
        entities.entry(e).or_default().busy = d;
    }
    for &(e, ops) in actors {
        entities.entry(e).or_default().ops += ops;
    }
    Metrics { entities, dropped: net.dropped(), logical_time: net.now() }
}
