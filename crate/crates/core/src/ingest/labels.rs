use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::trace::{Direction, TraceKey};

/// A labelled user activity occupying `[start_epoch_s, end_epoch_s)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityLabel {
    pub activity_id: u32,
    pub device_events: BTreeSet<TraceKey>,
    pub start_epoch_s: i64,
    pub end_epoch_s: i64,
}

impl ActivityLabel {
    pub fn duration_s(&self) -> i64 {
        self.end_epoch_s - self.start_epoch_s
    }

    pub fn contains(&self, epoch_s: i64) -> bool {
        epoch_s >= self.start_epoch_s && epoch_s < self.end_epoch_s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivitySpec {
    pub name: String,
    pub device_events: BTreeSet<TraceKey>,
}

/// Known activities, keyed by id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityCatalog {
    pub activities: BTreeMap<u32, ActivitySpec>,
}

impl ActivityCatalog {
    pub fn ids(&self) -> Vec<u32> {
        self.activities.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.activities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activities.is_empty()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.activities.contains_key(&id)
    }

    /// Catalog made of the distinct ids and device sets seen in `labels`.
    pub fn from_labels(labels: &[ActivityLabel]) -> Self {
        let mut activities = BTreeMap::new();
        for l in labels {
            activities.entry(l.activity_id).or_insert_with(|| ActivitySpec {
                name: format!("activity-{}", l.activity_id),
                device_events: l.device_events.clone(),
            });
        }
        ActivityCatalog { activities }
    }
}

/// Check that every label names a catalog activity and that windows of the
/// same activity never overlap.
pub fn validate_labels(labels: &[ActivityLabel], catalog: &ActivityCatalog) -> Result<()> {
    let mut by_id: BTreeMap<u32, Vec<(i64, i64, usize)>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        if !catalog.contains(l.activity_id) {
            return Err(Error::contract(format!(
                "label {i}: activity {} is not in the catalog",
                l.activity_id
            )));
        }
        if l.end_epoch_s <= l.start_epoch_s {
            return Err(Error::contract(format!("label {i}: empty window")));
        }
        by_id
            .entry(l.activity_id)
            .or_default()
            .push((l.start_epoch_s, l.end_epoch_s, i));
    }
    for (id, mut windows) in by_id {
        windows.sort();
        for w in windows.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::contract(format!(
                    "activity {id}: labels {} and {} overlap",
                    w[0].2, w[1].2
                )));
            }
        }
    }
    Ok(())
}

/// The fourteen activities observed in the UNSW smart-home traces after a
/// 2,000 KB/s background filter, with device/direction sets and event counts.
/// Kept as a reference fixture for label catalogs and report layouts.
pub const UNSW_ACTIVITIES: [(u32, &[(&str, Direction)], u32); 14] = [
    (0, &[("InsteonCam", Direction::In)], 2616),
    (1, &[("Amazon", Direction::In), ("Amazon", Direction::Out)], 956),
    (2, &[("BabyMonitor", Direction::Out)], 844),
    (3, &[("Amazon", Direction::In)], 711),
    (4, &[("PhotoFrame", Direction::In)], 689),
    (5, &[("TPLinkCam", Direction::In)], 484),
    (6, &[("TPLinkCam", Direction::In), ("TPLinkCam", Direction::Out)], 376),
    (7, &[("DropCam", Direction::Out)], 298),
    (
        8,
        &[
            ("TPLinkCam", Direction::In),
            ("DropCam", Direction::Out),
            ("TPLinkCam", Direction::Out),
        ],
        228,
    ),
    (9, &[("SleepSensor", Direction::Out)], 163),
    (10, &[("BelkinPlug", Direction::In)], 139),
    (
        11,
        &[
            ("Amazon", Direction::In),
            ("InsteonCam", Direction::In),
            ("Amazon", Direction::Out),
        ],
        126,
    ),
    (
        12,
        &[("InsteonCam", Direction::In), ("BabyMonitor", Direction::Out)],
        117,
    ),
    (13, &[("BabyMonitor", Direction::In)], 116),
];

/// Background cap applied before building the UNSW activity table, KB/s.
pub const UNSW_BACKGROUND_CAP_KB_S: f64 = 2000.0;

pub fn unsw_catalog() -> ActivityCatalog {
    let activities = UNSW_ACTIVITIES
        .iter()
        .map(|(id, events, _)| {
            let device_events = events
                .iter()
                .map(|(d, dir)| TraceKey::new(*d, *dir))
                .collect();
            (
                *id,
                ActivitySpec {
                    name: format!("activity-{id}"),
                    device_events,
                },
            )
        })
        .collect();
    ActivityCatalog { activities }
}
