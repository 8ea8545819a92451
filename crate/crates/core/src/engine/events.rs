use std::fmt;

/// Phase boundaries of one job.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PhaseEvent {
    MapStart(usize),
    MapEnd(usize),
    ShuffleDone,
    ReduceStart(usize),
    ReduceEnd(usize),
}

impl fmt::Display for PhaseEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseEvent::MapStart(i) => write!(f, "map_start({i})"),
            PhaseEvent::MapEnd(i) => write!(f, "map_end({i})"),
            PhaseEvent::ShuffleDone => f.write_str("shuffle_done"),
            PhaseEvent::ReduceStart(j) => write!(f, "reduce_start({j})"),
            PhaseEvent::ReduceEnd(j) => write!(f, "reduce_end({j})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimedEvent {
    pub at: u64,
    pub event: PhaseEvent,
}

/// Lamport-clocked log of phase events.
///
/// Each worker ticks its own clock once per invocation; the shuffle joins
/// every mapper's clock, so its timestamp exceeds every `MapEnd`, and each
/// reducer starts from the shuffle's clock. Timestamps therefore depend only
/// on the work assigned to each worker, never on the thread schedule.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PhaseEventLog {
    events: Vec<TimedEvent>,
}

impl PhaseEventLog {
    pub fn new() -> Self {
        PhaseEventLog::default()
    }

    pub(crate) fn record(&mut self, at: u64, event: PhaseEvent) {
        self.events.push(TimedEvent { at, event });
    }

    /// Keeps events in a canonical (timestamp, event) order.
    pub(crate) fn seal(&mut self) {
        self.events.sort_unstable();
    }

    pub fn events(&self) -> &[TimedEvent] {
        &self.events
    }

    pub fn shuffle_done_at(&self) -> Option<u64> {
        self.events
            .iter()
            .find(|e| e.event == PhaseEvent::ShuffleDone)
            .map(|e| e.at)
    }

    pub fn max_map_end(&self) -> Option<u64> {
        self.events
            .iter()
            .filter(|e| matches!(e.event, PhaseEvent::MapEnd(_)))
            .map(|e| e.at)
            .max()
    }

    pub fn min_reduce_start(&self) -> Option<u64> {
        self.events
            .iter()
            .filter(|e| matches!(e.event, PhaseEvent::ReduceStart(_)))
            .map(|e| e.at)
            .min()
    }

    /// `min(ReduceStart) > max(MapEnd)`; vacuously true if either side is absent.
    pub fn satisfies_bsp(&self) -> bool {
        match (self.min_reduce_start(), self.max_map_end()) {
            (Some(r), Some(m)) => r > m,
            _ => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bsp_check() {
        let mut log = PhaseEventLog::new();
        log.record(1, PhaseEvent::MapStart(0));
        log.record(4, PhaseEvent::MapEnd(0));
        log.record(5, PhaseEvent::ShuffleDone);
        log.record(6, PhaseEvent::ReduceStart(0));
        assert!(log.satisfies_bsp());
        log.record(3, PhaseEvent::ReduceStart(1));
        assert!(!log.satisfies_bsp());
        log.seal();
        assert_eq!(log.events()[1].event, PhaseEvent::ReduceStart(1));
    }
}
