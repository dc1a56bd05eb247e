//! Seeded synthetic smart-home traces.
//!
//! Each device emits a parametric burst per direction: a linear ramp up, a
//! flat plateau, and a linear ramp down. Bursts sit on a sparse keep-alive
//! floor well below any burst sample, so every burst is a clean
//! threshold-crossing motif with a single maximum.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

use super::labels::{ActivityCatalog, ActivityLabel, ActivitySpec};
use super::trace::{Direction, RateTrace, TraceKey};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurstShape {
    pub peak_kb_s: f64,
    pub rise_s: u32,
    pub plateau_s: u32,
    pub fall_s: u32,
}

impl BurstShape {
    pub fn len(&self) -> usize {
        (self.rise_s + self.plateau_s + self.fall_s) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn samples(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        let (r, f) = (self.rise_s as f64, self.fall_s as f64);
        for k in 0..self.rise_s {
            v.push(self.peak_kb_s * (k as f64 + 1.0) / (r + 1.0));
        }
        v.extend(std::iter::repeat(self.peak_kb_s).take(self.plateau_s as usize));
        for k in 0..self.fall_s {
            v.push(self.peak_kb_s * (f - k as f64) / (f + 1.0));
        }
        v
    }

    fn jittered(&self, rng: &mut ChaCha8Rng) -> BurstShape {
        let plateau = self.plateau_s as i64 + rng.random_range(-1i64..=1);
        BurstShape {
            peak_kb_s: self.peak_kb_s * rng.random_range(0.9..1.1),
            plateau_s: plateau.max(1) as u32,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub device_id: String,
    pub inbound: BurstShape,
    pub outbound: BurstShape,
}

impl DeviceProfile {
    pub fn shape(&self, d: Direction) -> &BurstShape {
        match d {
            Direction::In => &self.inbound,
            Direction::Out => &self.outbound,
        }
    }
}

// (peak in, peak out, rise, plateau, fall) for the first devices; later
// devices cycle through these with scaled amplitudes.
const BASE_PROFILES: [(f64, f64, u32, u32, u32); 4] = [
    (120.0, 45.0, 2, 6, 3),
    (60.0, 150.0, 4, 3, 5),
    (200.0, 25.0, 1, 10, 2),
    (90.0, 90.0, 3, 4, 8),
];

pub fn device_id(i: usize) -> String {
    format!("dev{i}")
}

/// Distinct per-device burst profiles; the seed perturbs amplitudes by up to 5%.
pub fn device_profiles(n_devices: usize, seed: u64) -> Vec<DeviceProfile> {
    let mut rng = seed::rng(seed::derive(seed, 0xD3));
    (0..n_devices)
        .map(|i| {
            let (pi, po, r, p, f) = BASE_PROFILES[i % BASE_PROFILES.len()];
            let scale = 1.0 + 0.6 * (i / BASE_PROFILES.len()) as f64;
            let shape = |peak: f64, rng: &mut ChaCha8Rng| BurstShape {
                peak_kb_s: peak * scale * rng.random_range(0.95..1.05),
                rise_s: r,
                plateau_s: p + (i / BASE_PROFILES.len()) as u32,
                fall_s: f,
            };
            DeviceProfile {
                device_id: device_id(i),
                inbound: shape(pi, &mut rng),
                outbound: shape(po, &mut rng),
            }
        })
        .collect()
}

const FLOOR_PROBABILITY: f64 = 0.08;
const FLOOR_RANGE: std::ops::Range<f64> = 0.05..0.5;

struct Canvas {
    keys: Vec<TraceKey>,
    series: BTreeMap<TraceKey, Vec<f64>>,
}

impl Canvas {
    fn new(profiles: &[DeviceProfile], duration_s: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut series = BTreeMap::new();
        for p in profiles {
            for d in [Direction::In, Direction::Out] {
                let floor: Vec<f64> = (0..duration_s)
                    .map(|_| {
                        if rng.random_bool(FLOOR_PROBABILITY) {
                            rng.random_range(FLOOR_RANGE)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                series.insert(TraceKey::new(p.device_id.clone(), d), floor);
            }
        }
        Canvas {
            keys: series.keys().cloned().collect(),
            series,
        }
    }

    /// Overlay a burst with `max`, so the floor never perturbs burst samples.
    fn stamp(&mut self, key: &TraceKey, at: usize, samples: &[f64]) {
        let s = self.series.get_mut(key).expect("known key");
        for (i, &v) in samples.iter().enumerate() {
            if let Some(slot) = s.get_mut(at + i) {
                *slot = slot.max(v);
            }
        }
    }

    fn into_traces(self, start_epoch_s: i64) -> Result<Vec<RateTrace>> {
        let mut series = self.series;
        self.keys
            .into_iter()
            .map(|k| {
                let rates = series.remove(&k).expect("known key");
                RateTrace::from_key(k, 1, start_epoch_s, rates)
            })
            .collect()
    }
}

/// Synthetic home output: per-(device, direction) traces plus event labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthHome {
    pub traces: Vec<RateTrace>,
    pub labels: Vec<ActivityLabel>,
    pub catalog: ActivityCatalog,
    pub profiles: Vec<DeviceProfile>,
}

/// Epoch of the first sample of every synthetic trace.
pub const SYNTH_EPOCH: i64 = 1_500_000_000;

/// Per-device events: activity `i` is a burst of device `i` in both directions.
///
/// Events of a device fall in disjoint equal-length slots of the timeline.
pub fn synth_home(
    seed: u64,
    n_devices: usize,
    duration_s: usize,
    events_per_device: usize,
) -> Result<SynthHome> {
    if n_devices == 0 || duration_s == 0 || events_per_device == 0 {
        return Err(Error::contract("synth_home arguments must be positive"));
    }
    let profiles = device_profiles(n_devices, seed);
    let mut rng = seed::rng(seed);
    let mut canvas = Canvas::new(&profiles, duration_s, &mut rng);
    let slot = duration_s / events_per_device;
    let mut labels = Vec::new();
    let mut catalog = ActivityCatalog::default();
    for (i, p) in profiles.iter().enumerate() {
        let events: BTreeSet<TraceKey> = [Direction::In, Direction::Out]
            .into_iter()
            .map(|d| TraceKey::new(p.device_id.clone(), d))
            .collect();
        catalog.activities.insert(
            i as u32,
            ActivitySpec {
                name: p.device_id.clone(),
                device_events: events.clone(),
            },
        );
        for e in 0..events_per_device {
            let shapes: Vec<(TraceKey, Vec<f64>)> = events
                .iter()
                .map(|k| (k.clone(), p.shape(k.direction).jittered(&mut rng).samples()))
                .collect();
            let len = shapes.iter().map(|s| s.1.len()).max().unwrap_or(0);
            if len > slot {
                return Err(Error::contract(format!(
                    "{duration_s}s cannot hold {events_per_device} bursts of {len}s per device"
                )));
            }
            let at = e * slot + rng.random_range(0..=slot - len);
            for (k, s) in &shapes {
                canvas.stamp(k, at, s);
            }
            labels.push(ActivityLabel {
                activity_id: i as u32,
                device_events: events.clone(),
                start_epoch_s: SYNTH_EPOCH + at as i64,
                end_epoch_s: SYNTH_EPOCH + (at + len) as i64,
            });
        }
    }
    labels.sort_by_key(|l| (l.start_epoch_s, l.activity_id));
    Ok(SynthHome {
        traces: canvas.into_traces(SYNTH_EPOCH)?,
        labels,
        catalog,
        profiles,
    })
}

/// Parameters for the multi-device activity fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityHomeSpec {
    pub seed: u64,
    pub n_devices: usize,
    pub duration_s: usize,
    /// Activities by id; device ids must be `dev0..dev{n_devices-1}`.
    pub catalog: ActivityCatalog,
    pub min_gap_s: usize,
    pub max_gap_s: usize,
}

impl ActivityHomeSpec {
    /// Four devices, fourteen activities, two hours at 1 s.
    pub fn desk_fixture(seed: u64) -> Self {
        ActivityHomeSpec {
            seed,
            n_devices: 4,
            duration_s: 7200,
            catalog: fourteen_activity_catalog(),
            min_gap_s: 30,
            max_gap_s: 42,
        }
    }
}

/// Fourteen activities over four devices, shaped after the UNSW table:
/// single-direction events, paired in/out events, and multi-device combos.
pub fn fourteen_activity_catalog() -> ActivityCatalog {
    use Direction::{In, Out};
    let table: [&[(usize, Direction)]; 14] = [
        &[(2, In)],
        &[(0, In), (0, Out)],
        &[(1, Out)],
        &[(0, In)],
        &[(2, Out)],
        &[(3, In)],
        &[(3, In), (3, Out)],
        &[(1, In), (1, Out)],
        &[(3, In), (1, Out), (3, Out)],
        &[(3, Out)],
        &[(0, Out)],
        &[(0, In), (2, In), (0, Out)],
        &[(2, In), (1, Out)],
        &[(1, In)],
    ];
    let activities = table
        .iter()
        .enumerate()
        .map(|(id, events)| {
            let device_events = events
                .iter()
                .map(|&(d, dir)| TraceKey::new(device_id(d), dir))
                .collect();
            (
                id as u32,
                ActivitySpec {
                    name: format!("activity-{id}"),
                    device_events,
                },
            )
        })
        .collect();
    ActivityCatalog { activities }
}

/// Sequential activities separated by random gaps; activity order is drawn
/// from shuffled rounds of the catalog so classes stay balanced.
pub fn synth_activity_home(spec: &ActivityHomeSpec) -> Result<SynthHome> {
    if spec.n_devices == 0 || spec.duration_s == 0 || spec.catalog.is_empty() {
        return Err(Error::contract("activity home needs devices, duration, and activities"));
    }
    if spec.min_gap_s == 0 || spec.max_gap_s < spec.min_gap_s {
        return Err(Error::contract("gap range must be positive and ordered"));
    }
    let profiles = device_profiles(spec.n_devices, spec.seed);
    let by_id: BTreeMap<&str, &DeviceProfile> =
        profiles.iter().map(|p| (p.device_id.as_str(), p)).collect();
    for (id, a) in &spec.catalog.activities {
        if let Some(k) = a.device_events.iter().find(|k| !by_id.contains_key(k.device_id.as_str())) {
            return Err(Error::contract(format!(
                "activity {id} references unknown device {}",
                k.device_id
            )));
        }
    }
    let mut rng = seed::rng(spec.seed);
    let mut canvas = Canvas::new(&profiles, spec.duration_s, &mut rng);
    let ids = spec.catalog.ids();
    let mut queue: Vec<u32> = Vec::new();
    let mut labels = Vec::new();
    let mut t = rng.random_range(spec.min_gap_s..=spec.max_gap_s);
    loop {
        if queue.is_empty() {
            queue = ids.clone();
            queue.shuffle(&mut rng);
        }
        let id = queue.pop().expect("refilled above");
        let activity = &spec.catalog.activities[&id];
        let mut end = t;
        let mut stamps = Vec::new();
        for k in &activity.device_events {
            let shape = by_id[k.device_id.as_str()].shape(k.direction).jittered(&mut rng);
            let at = t + rng.random_range(0..=2);
            end = end.max(at + shape.len());
            stamps.push((k.clone(), at, shape.samples()));
        }
        if end >= spec.duration_s {
            break;
        }
        for (k, at, s) in &stamps {
            canvas.stamp(k, *at, s);
        }
        labels.push(ActivityLabel {
            activity_id: id,
            device_events: activity.device_events.clone(),
            start_epoch_s: SYNTH_EPOCH + t as i64,
            end_epoch_s: SYNTH_EPOCH + end as i64,
        });
        t += rng.random_range(spec.min_gap_s..=spec.max_gap_s);
    }
    Ok(SynthHome {
        traces: canvas.into_traces(SYNTH_EPOCH)?,
        labels,
        catalog: spec.catalog.clone(),
        profiles,
    })
}
