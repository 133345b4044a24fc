use std::collections::BTreeMap;

/// Flags components silent for more than three heartbeat periods.
#[derive(Debug, Clone)]
pub struct HeartbeatMonitor {
    period: u64,
    last: BTreeMap<String, u64>,
    flagged: BTreeMap<String, bool>,
}

impl HeartbeatMonitor {
    pub const MISSED_PERIODS: u64 = 3;

    /// `period` in the caller's time unit.
    pub fn new(period: u64) -> Self {
        Self {
            period,
            last: BTreeMap::new(),
            flagged: BTreeMap::new(),
        }
    }

    pub fn beat(&mut self, component: &str, now: u64) {
        self.last.insert(component.to_string(), now);
        self.flagged.insert(component.to_string(), false);
    }

    /// Components that just crossed the silence limit; each is reported
    /// once until it beats again.
    pub fn check(&mut self, now: u64) -> Vec<String> {
        let limit = Self::MISSED_PERIODS * self.period;
        let mut out = Vec::new();
        for (name, t) in &self.last {
            let flagged = self.flagged.get_mut(name).expect("tracked together");
            if !*flagged && now.saturating_sub(*t) > limit {
                *flagged = true;
                out.push(name.clone());
            }
        }
        out
    }

    /// Next time at which `check` could report something.
    pub fn next_deadline(&self) -> Option<u64> {
        let limit = Self::MISSED_PERIODS * self.period;
        self.last
            .iter()
            .filter(|(n, _)| !self.flagged[*n])
            .map(|(_, t)| t + limit + 1)
            .min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silence_is_reported_once() {
        let mut m = HeartbeatMonitor::new(1000);
        m.beat("camera", 0);
        m.beat("robot", 0);
        assert!(m.check(3000).is_empty());
        m.beat("robot", 2500);
        assert_eq!(m.check(3001), vec!["camera".to_string()]);
        assert!(m.check(4000).is_empty());
        assert_eq!(m.next_deadline(), Some(5501));
        m.beat("camera", 4000);
        assert_eq!(m.check(7001), vec!["camera".to_string(), "robot".to_string()]);
    }
}
