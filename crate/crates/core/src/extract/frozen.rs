use std::collections::{BTreeMap, HashMap};

pub const FREEZE_WINDOW: usize = 50;
pub const FREEZE_THRESHOLD: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MappingState {
    Observing {
        tally: BTreeMap<String, usize>,
        seen: usize,
    },
    Frozen(String),
    Unfrozen,
}

impl Default for MappingState {
    fn default() -> Self {
        MappingState::Observing {
            tally: BTreeMap::new(),
            seen: 0,
        }
    }
}

/// Per requested key: after `window` observed inputs, freezes to the event
/// key that at least `threshold × window` of them resolved to, otherwise
/// stays unfrozen for good.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenMapping {
    pub window: usize,
    pub threshold: f64,
    states: HashMap<String, MappingState>,
}

impl Default for FrozenMapping {
    fn default() -> Self {
        FrozenMapping::new(FREEZE_WINDOW, FREEZE_THRESHOLD)
    }
}

impl FrozenMapping {
    pub fn new(window: usize, threshold: f64) -> Self {
        FrozenMapping {
            window: window.max(1),
            threshold,
            states: HashMap::new(),
        }
    }

    pub fn state(&self, key: &str) -> MappingState {
        self.states.get(key).cloned().unwrap_or_default()
    }

    pub fn is_observing(&self, key: &str) -> bool {
        matches!(self.state(key), MappingState::Observing { .. })
    }

    pub fn frozen_key(&self, key: &str) -> Option<String> {
        match self.states.get(key) {
            Some(MappingState::Frozen(k)) => Some(k.clone()),
            _ => None,
        }
    }

    /// Records which event key (if any) one input resolved to.
    pub fn observe(&mut self, key: &str, resolved_to: Option<&str>) {
        let (window, threshold) = (self.window, self.threshold);
        let state = self.states.entry(key.to_string()).or_default();
        let MappingState::Observing { tally, seen } = state else {
            return;
        };
        *seen += 1;
        if let Some(k) = resolved_to {
            *tally.entry(k.to_string()).or_default() += 1;
        }
        if *seen < window {
            return;
        }
        // ties go to the lexicographically smallest key
        let best = tally
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(k, &n)| (k.clone(), n));
        *state = match best {
            Some((k, n)) if n as f64 >= threshold * window as f64 - 1e-9 => MappingState::Frozen(k),
            _ => MappingState::Unfrozen,
        };
    }
}
