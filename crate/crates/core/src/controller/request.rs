use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Remaining counts per class plus the classes already reported missing.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PickRequest {
    pub remaining: BTreeMap<String, u32>,
    pub unavailable: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RequestUpdate {
    Verified(String),
    Unavailable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ListStatus {
    ListFulfilled,
    ListOpen,
}

impl PickRequest {
    pub fn new(items: impl IntoIterator<Item = (String, u32)>) -> Self {
        Self {
            remaining: items.into_iter().collect(),
            unavailable: BTreeSet::new(),
        }
    }

    pub fn total(&self) -> u32 {
        self.remaining.values().sum()
    }

    pub fn is_fulfilled(&self) -> bool {
        self.remaining.values().all(|n| *n == 0)
    }

    /// Classes still worth looking for.
    pub fn actionable(&self) -> BTreeMap<String, u32> {
        self.remaining
            .iter()
            .filter(|(k, n)| **n > 0 && !self.unavailable.contains(*k))
            .map(|(k, n)| (k.clone(), *n))
            .collect()
    }
}

/// Apply one bookkeeping event. Returns the list status and whether this
/// call newly reported a class as unavailable.
pub fn update_request(req: &mut PickRequest, update: &RequestUpdate) -> (ListStatus, bool) {
    let mut newly = false;
    match update {
        RequestUpdate::Verified(class) => {
            if let Some(n) = req.remaining.get_mut(class) {
                *n = n.saturating_sub(1);
            }
        }
        RequestUpdate::Unavailable(class) => {
            newly = req.unavailable.insert(class.clone());
        }
    }
    let status = if req.is_fulfilled() {
        ListStatus::ListFulfilled
    } else {
        ListStatus::ListOpen
    };
    (status, newly)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(items: &[(&str, u32)]) -> PickRequest {
        PickRequest::new(items.iter().map(|(k, n)| (k.to_string(), *n)))
    }

    #[test]
    fn verified_pick_fulfills() {
        let mut r = req(&[("hammer", 1)]);
        let (s, _) = update_request(&mut r, &RequestUpdate::Verified("hammer".into()));
        assert_eq!(s, ListStatus::ListFulfilled);
        assert_eq!(r.remaining["hammer"], 0);
    }

    #[test]
    fn decrement_floors_at_zero() {
        let mut r = req(&[("hammer", 0), ("dog", 1)]);
        let (s, _) = update_request(&mut r, &RequestUpdate::Verified("hammer".into()));
        assert_eq!(r.remaining["hammer"], 0);
        assert_eq!(s, ListStatus::ListOpen);
    }

    #[test]
    fn unavailable_reported_once() {
        let mut r = req(&[("dog", 2), ("hammer", 1)]);
        let (s, newly) = update_request(&mut r, &RequestUpdate::Unavailable("dog".into()));
        assert_eq!((s, newly), (ListStatus::ListOpen, true));
        let (_, again) = update_request(&mut r, &RequestUpdate::Unavailable("dog".into()));
        assert!(!again);
        assert_eq!(r.unavailable.len(), 1);
        assert_eq!(r.actionable().keys().collect::<Vec<_>>(), vec!["hammer"]);
    }
}
