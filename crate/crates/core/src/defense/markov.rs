//! First-order Markov user model over activity clusters.
//!
//! Activities are clustered by k-means on (start hour of day, duration);
//! each cluster is a state. Transitions are add-one smoothed bigram counts
//! over the time-ordered label stream, dwell times are exponential with the
//! per-state mean gap to the next label, and each state emits the bank
//! motifs whose centres fell inside that state's label windows.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ActivityLabel;
use crate::motif::Motif;
use crate::seed;

use super::bank::MotifBank;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MarkovUserModel {
    pub n_states: usize,
    pub activity_state: BTreeMap<u32, usize>,
    pub initial: Vec<f64>,
    /// Row-stochastic, `n_states × n_states`.
    pub transition: Vec<Vec<f64>>,
    pub mean_dwell_s: Vec<f64>,
    pub emissions: Vec<Vec<Motif>>,
}

/// One simulated activity: sample-time offset (seconds from trace start) and state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulatedEvent {
    pub offset_s: f64,
    pub state: usize,
}

impl MarkovUserModel {
    pub fn is_fitted(&self) -> bool {
        self.n_states >= 2 && self.transition.len() == self.n_states
    }

    pub fn state_of(&self, activity_id: u32) -> Option<usize> {
        self.activity_state.get(&activity_id).copied()
    }

    /// Walk the chain from `seed` until `horizon_s` seconds have elapsed.
    pub fn simulate(&self, horizon_s: f64, seed: u64) -> Result<Vec<SimulatedEvent>> {
        if !self.is_fitted() {
            return Err(Error::UnfittedModel);
        }
        let mut rng = seed::rng(seed);
        let mut state = sample_index(&self.initial, &mut rng);
        let mut t = 0.0;
        let mut out = Vec::new();
        loop {
            let mean = self.mean_dwell_s[state].max(1e-9);
            t += Exp::new(1.0 / mean).expect("positive rate").sample(&mut rng);
            if t >= horizon_s {
                break;
            }
            out.push(SimulatedEvent { offset_s: t, state });
            state = sample_index(&self.transition[state], &mut rng);
        }
        Ok(out)
    }
}

fn sample_index(p: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &w) in p.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

fn hour_of_day(epoch_s: i64) -> f64 {
    epoch_s.rem_euclid(86_400) as f64 / 3600.0
}

fn sq_dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Seeded k-means++ followed by Lloyd iterations. Every cluster ends with at
/// least one point as long as `k <= points.len()`.
fn kmeans(points: &[[f64; 2]], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = seed::rng(seed);
    let mut centers: Vec<[f64; 2]> = vec![points[rng.random_range(0..points.len())]];
    while centers.len() < k {
        let d: Vec<f64> = points
            .iter()
            .map(|p| centers.iter().map(|c| sq_dist(p, c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d.iter().sum();
        let pick = if total > 0.0 {
            sample_index(&d.iter().map(|x| x / total).collect::<Vec<_>>(), &mut rng)
        } else {
            rng.random_range(0..points.len())
        };
        centers.push(points[pick]);
    }
    let mut assign = vec![0usize; points.len()];
    for _ in 0..100 {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| sq_dist(p, &centers[a]).total_cmp(&sq_dist(p, &centers[b])))
                .expect("k >= 1");
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        // refill empty clusters with the point farthest from its centre,
        // taken from a cluster that has more than one member
        for c in 0..k {
            if assign.contains(&c) {
                continue;
            }
            let mut sizes = vec![0usize; k];
            for &a in &assign {
                sizes[a] += 1;
            }
            let donor = (0..points.len())
                .filter(|&i| sizes[assign[i]] > 1)
                .max_by(|&a, &b| {
                    sq_dist(&points[a], &centers[assign[a]])
                        .total_cmp(&sq_dist(&points[b], &centers[assign[b]]))
                        .then(b.cmp(&a))
                });
            if let Some(i) = donor {
                assign[i] = c;
                changed = true;
            }
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&[f64; 2]> = points
                .iter()
                .zip(&assign)
                .filter(|(_, &a)| a == c)
                .map(|(p, _)| p)
                .collect();
            if !members.is_empty() {
                let m = members.len() as f64;
                *center = [
                    members.iter().map(|p| p[0]).sum::<f64>() / m,
                    members.iter().map(|p| p[1]).sum::<f64>() / m,
                ];
            }
        }
        if !changed {
            break;
        }
    }
    assign
}

/// Add-one smoothed, row-normalised bigram counts over a state sequence.
pub fn smoothed_transitions(states: &[usize], n_states: usize) -> Vec<Vec<f64>> {
    let mut counts = vec![vec![1.0; n_states]; n_states];
    for w in states.windows(2) {
        counts[w[0]][w[1]] += 1.0;
    }
    for row in &mut counts {
        let s: f64 = row.iter().sum();
        for v in row.iter_mut() {
            *v /= s;
        }
    }
    counts
}

pub fn fit_markov_model(
    labels: &[ActivityLabel],
    bank: &MotifBank,
    n_states: usize,
    seed: u64,
) -> Result<MarkovUserModel> {
    let mut ordered: Vec<&ActivityLabel> = labels.iter().collect();
    ordered.sort_by_key(|l| (l.start_epoch_s, l.activity_id));

    // per-activity mean (hour of day, duration)
    let mut acc: BTreeMap<u32, (f64, f64, usize)> = BTreeMap::new();
    for l in &ordered {
        let e = acc.entry(l.activity_id).or_insert((0.0, 0.0, 0));
        e.0 += hour_of_day(l.start_epoch_s);
        e.1 += l.duration_s() as f64;
        e.2 += 1;
    }
    if acc.len() < 2 {
        return Err(Error::contract(format!(
            "user model needs at least 2 distinct activities, found {}",
            acc.len()
        )));
    }
    if n_states < 2 || acc.len() < n_states {
        return Err(Error::contract(format!(
            "cannot form {n_states} states from {} activities",
            acc.len()
        )));
    }
    let ids: Vec<u32> = acc.keys().copied().collect();
    let raw: Vec<[f64; 2]> = acc
        .values()
        .map(|&(h, d, c)| [h / c as f64, d / c as f64])
        .collect();
    // standardise each axis so hours and seconds weigh equally
    let mut points = raw.clone();
    for axis in 0..2 {
        let m = raw.iter().map(|p| p[axis]).sum::<f64>() / raw.len() as f64;
        let sd = (raw.iter().map(|p| (p[axis] - m).powi(2)).sum::<f64>() / raw.len() as f64).sqrt();
        let sd = if sd > 1e-12 { sd } else { 1.0 };
        for p in &mut points {
            p[axis] = (p[axis] - m) / sd;
        }
    }
    let assign = kmeans(&points, n_states, seed);
    let activity_state: BTreeMap<u32, usize> = ids.iter().copied().zip(assign).collect();

    let states: Vec<usize> = ordered.iter().map(|l| activity_state[&l.activity_id]).collect();
    let transition = smoothed_transitions(&states, n_states);

    let mut initial = vec![0.0; n_states];
    for &s in &states {
        initial[s] += 1.0;
    }
    let total = states.len() as f64;
    initial.iter_mut().for_each(|v| *v /= total);

    let mut gaps = vec![(0.0, 0usize); n_states];
    for w in ordered.windows(2) {
        let s = activity_state[&w[0].activity_id];
        gaps[s].0 += (w[1].start_epoch_s - w[0].start_epoch_s) as f64;
        gaps[s].1 += 1;
    }
    let all_gaps: (f64, usize) = gaps.iter().fold((0.0, 0), |a, g| (a.0 + g.0, a.1 + g.1));
    let fallback = if all_gaps.1 > 0 {
        all_gaps.0 / all_gaps.1 as f64
    } else {
        3600.0
    };
    let mean_dwell_s = gaps
        .iter()
        .map(|&(s, c)| if c > 0 && s > 0.0 { s / c as f64 } else { fallback })
        .collect();

    let mut emissions = vec![Vec::new(); n_states];
    for m in bank.motifs() {
        let at = m.center_epoch_s();
        if let Some(l) = ordered.iter().find(|l| l.contains(at)) {
            emissions[activity_state[&l.activity_id]].push(m.clone());
        }
    }

    Ok(MarkovUserModel {
        n_states,
        activity_state,
        initial,
        transition,
        mean_dwell_s,
        emissions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Direction, RateTrace};
    use std::collections::BTreeSet;

    fn label(id: u32, start: i64, len: i64) -> ActivityLabel {
        ActivityLabel {
            activity_id: id,
            device_events: BTreeSet::new(),
            start_epoch_s: start,
            end_epoch_s: start + len,
        }
    }

    fn bank() -> MotifBank {
        let t = RateTrace::new("a", Direction::In, 1, 0, vec![0.0, 3.0, 7.0, 4.0, 0.0]).unwrap();
        crate::defense::build_motif_bank(&[t], 1.0, 5).unwrap()
    }

    #[test]
    fn alternating_activities() {
        let labels: Vec<_> = (0..100)
            .map(|i| label((i % 2) as u32, i * 100, if i % 2 == 0 { 10 } else { 40 }))
            .collect();
        let m = fit_markov_model(&labels, &bank(), 2, 1).unwrap();
        let a = m.state_of(0).unwrap();
        let b = m.state_of(1).unwrap();
        assert_ne!(a, b);
        assert!(m.transition[a][b] > 0.95 && m.transition[b][a] > 0.95);
        assert!(m.transition[a][a] < 0.05);
        for row in &m.transition {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_activity_rejected() {
        let labels: Vec<_> = (0..10).map(|i| label(3, i * 100, 10)).collect();
        assert!(matches!(
            fit_markov_model(&labels, &bank(), 2, 1),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn more_states_than_activities_rejected() {
        let labels: Vec<_> = (0..10).map(|i| label((i % 2) as u32, i * 100, 10)).collect();
        assert!(fit_markov_model(&labels, &bank(), 3, 1).is_err());
    }

    #[test]
    fn unfitted_model_refuses_simulation() {
        assert!(matches!(
            MarkovUserModel::default().simulate(100.0, 1),
            Err(Error::UnfittedModel)
        ));
    }

    #[test]
    fn kmeans_fills_every_cluster_even_with_duplicates() {
        let pts = vec![[0.0, 0.0]; 5];
        let a = kmeans(&pts, 3, 2);
        for c in 0..3 {
            assert!(a.contains(&c));
        }
    }

    #[test]
    fn simulation_is_seeded() {
        let labels: Vec<_> = (0..40).map(|i| label((i % 4) as u32, i * 60, 10 + i % 4 * 10)).collect();
        let m = fit_markov_model(&labels, &bank(), 3, 5).unwrap();
        let a = m.simulate(3600.0, 7).unwrap();
        let b = m.simulate(3600.0, 7).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
        assert!(a.windows(2).all(|w| w[0].offset_s < w[1].offset_s));
    }
}
