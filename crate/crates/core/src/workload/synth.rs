//! Synthetic traces with planted super points and exact ground truth.

use std::collections::HashSet;
use std::net::Ipv4Addr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::WindowConfig;

use super::oracle::GroundTruth;
use super::trace::TraceRecord;

/// Largest host population accepted, so distinct addresses stay cheap to draw.
pub const MAX_HOSTS: u64 = 1 << 31;

/// A host that receives exactly `opposites` distinct peers, dealt round-robin
/// over slots `slots[0]..=slots[1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedHost {
    pub cip: Ipv4Addr,
    pub opposites: u32,
    pub slots: [u64; 2],
}

/// Ordinary traffic: `hosts` inside addresses ranked by a Zipf law, each
/// talking to a private pool of at most `max_opposites` peers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundSpec {
    pub hosts: u32,
    pub zipf: f64,
    pub pairs_per_slot: u32,
    pub max_opposites: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub slots: u64,
    #[serde(default)]
    pub background: Option<BackgroundSpec>,
    #[serde(default)]
    pub planted: Vec<PlantedHost>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticTrace {
    pub records: Vec<TraceRecord>,
    pub truth: GroundTruth,
}

impl SynthSpec {
    pub fn check(&self, window: &WindowConfig) -> Result<()> {
        let mut problems = Vec::new();
        if self.slots == 0 {
            problems.push("slots must be positive".to_string());
        }
        let end = u64::from(window.start) + self.slots.saturating_mul(u64::from(window.mu));
        if end > u64::from(u32::MAX) + 1 {
            problems.push(format!(
                "{} slots of {} s from {} run past the 32-bit timestamp range",
                self.slots, window.mu, window.start
            ));
        }
        let mut cips = HashSet::new();
        for p in &self.planted {
            if !cips.insert(p.cip) {
                problems.push(format!("planted host {} listed twice", p.cip));
            }
            if p.opposites == 0 {
                problems.push(format!(
                    "planted host {} needs at least one opposite",
                    p.cip
                ));
            }
            let [a, b] = p.slots;
            if a > b || b >= self.slots {
                problems.push(format!(
                    "planted host {} slot range {a}..={b} outside 0..{}",
                    p.cip, self.slots
                ));
            }
        }
        if let Some(bg) = &self.background {
            if u64::from(bg.hosts) + self.planted.len() as u64 > MAX_HOSTS {
                problems.push(format!(
                    "{} background hosts exceed the address budget",
                    bg.hosts
                ));
            }
            if bg.hosts > 0 {
                if !(bg.zipf.is_finite() && bg.zipf >= 0.0) {
                    problems.push(format!(
                        "zipf exponent must be finite and >= 0 (got {})",
                        bg.zipf
                    ));
                }
                if bg.max_opposites == 0 {
                    problems.push("background max_opposites must be positive".to_string());
                }
            } else if bg.pairs_per_slot > 0 {
                problems.push("background pairs need at least one host".to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Infeasible(problems.join("; ")))
        }
    }
}

/// Peer `j` of a pool starting at `base`; an odd stride keeps all 2^32
/// indices distinct.
fn pool_addr(base: u32, stride: u32, j: u32) -> u32 {
    base.wrapping_add(stride.wrapping_mul(j))
}

fn odd(rng: &mut ChaCha8Rng) -> u32 {
    rng.random::<u32>() | 1
}

/// Number of peers of a planted host that land in slot `t`.
fn planted_in_slot(p: &PlantedHost, t: u64) -> u64 {
    let [a, b] = p.slots;
    if t < a || t > b {
        return 0;
    }
    let span = b - a + 1;
    let offset = t - a;
    let total = u64::from(p.opposites);
    if offset >= total {
        0
    } else {
        (total - offset).div_ceil(span)
    }
}

struct Background {
    cips: Vec<u32>,
    bases: Vec<u32>,
    strides: Vec<u32>,
    zipf: Option<Zipf<f64>>,
    pool: u32,
    pairs: u32,
}

/// Generates the trace and its ground truth. Truth is tracked from pool
/// indices and the planted deal, independently of the address stream.
pub fn synth_trace(spec: &SynthSpec, window: &WindowConfig, seed: u64) -> Result<SyntheticTrace> {
    spec.check(window)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let planted_cips: HashSet<u32> = spec.planted.iter().map(|p| u32::from(p.cip)).collect();
    let planted_pools: Vec<(u32, u32)> = spec
        .planted
        .iter()
        .map(|_| (rng.random(), odd(&mut rng)))
        .collect();

    let bg = spec.background.as_ref().filter(|b| b.hosts > 0);
    let background = bg.map(|b| {
        let mut taken = planted_cips.clone();
        let mut cips = Vec::with_capacity(b.hosts as usize);
        while cips.len() < b.hosts as usize {
            let c: u32 = rng.random();
            if taken.insert(c) {
                cips.push(c);
            }
        }
        let bases = (0..b.hosts).map(|_| rng.random()).collect();
        let strides = (0..b.hosts).map(|_| odd(&mut rng)).collect();
        let zipf = (b.pairs_per_slot > 0)
            .then(|| Zipf::new(f64::from(b.hosts), b.zipf).expect("checked parameters"));
        Background {
            cips,
            bases,
            strides,
            zipf,
            pool: b.max_opposites,
            pairs: b.pairs_per_slot,
        }
    });

    let k = u64::from(window.k);
    let hosts = background.as_ref().map_or(0, |b| b.cips.len());
    let mut last_seen: Vec<Vec<u64>> = vec![Vec::new(); hosts];
    let mut counts = vec![0u32; hosts];
    let mut touched: Vec<Vec<(u32, u32)>> = Vec::new();

    let mut records = Vec::new();
    let mut truth = GroundTruth::new();
    for s in 0..spec.slots {
        let first = window.window_first(s);
        let slot_start = window.start + (s * u64::from(window.mu)) as u32;
        let ts = |rng: &mut ChaCha8Rng| slot_start + rng.random_range(0..window.mu);
        let mut slot_records = Vec::new();

        for (p, &(base, stride)) in spec.planted.iter().zip(&planted_pools) {
            let [a, _] = p.slots;
            let n = planted_in_slot(p, s);
            let span = p.slots[1] - a + 1;
            for i in 0..n {
                let j = (s - a) + i * span;
                let oip = pool_addr(base, stride, j as u32);
                slot_records.push(TraceRecord::new(ts(&mut rng), u32::from(p.cip), oip));
            }
        }

        if s >= k {
            for (h, j) in touched[(s - k) as usize].drain(..) {
                if last_seen[h as usize][j as usize] == s - k {
                    counts[h as usize] -= 1;
                }
            }
        }
        let mut now = Vec::new();
        if let Some(b) = &background {
            if let Some(zipf) = &b.zipf {
                for _ in 0..b.pairs {
                    let h = (zipf.sample(&mut rng) as usize).clamp(1, hosts) - 1;
                    let j = rng.random_range(0..b.pool);
                    let seen = &mut last_seen[h];
                    if seen.is_empty() {
                        seen.resize(b.pool as usize, u64::MAX);
                    }
                    let last = seen[j as usize];
                    if last != s {
                        if last == u64::MAX || last < first {
                            counts[h] += 1;
                        }
                        seen[j as usize] = s;
                        now.push((h as u32, j));
                    }
                    let oip = pool_addr(b.bases[h], b.strides[h], j);
                    slot_records.push(TraceRecord::new(ts(&mut rng), b.cips[h], oip));
                }
            }
        }
        touched.push(now);

        let mut window_counts: Vec<(u32, u32)> = spec
            .planted
            .iter()
            .map(|p| {
                let n: u64 = (first..=s).map(|t| planted_in_slot(p, t)).sum();
                (u32::from(p.cip), n as u32)
            })
            .collect();
        if let Some(b) = &background {
            window_counts.extend(
                counts
                    .iter()
                    .enumerate()
                    .filter(|&(_, &c)| c > 0)
                    .map(|(h, &c)| (b.cips[h], c)),
            );
        }
        truth.push_slot(window_counts);

        slot_records.sort_by_key(|r| r.ts);
        records.extend(slot_records);
    }
    Ok(SyntheticTrace { records, truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::exact_counts;

    fn planted(cip: u32, opposites: u32, a: u64, b: u64) -> PlantedHost {
        PlantedHost {
            cip: Ipv4Addr::from(cip),
            opposites,
            slots: [a, b],
        }
    }

    fn cross_check(spec: &SynthSpec, w: &WindowConfig, seed: u64) -> SyntheticTrace {
        let out = synth_trace(spec, w, seed).unwrap();
        let exact = exact_counts(out.records.iter().copied().map(Ok), w, spec.slots).unwrap();
        assert_eq!(out.truth, exact);
        out
    }

    #[test]
    fn single_planted_host() {
        let w = WindowConfig::new(1, 30, 0).unwrap();
        let spec = SynthSpec {
            slots: 1,
            background: None,
            planted: vec![planted(0x0A00_0001, 2048, 0, 0)],
        };
        let out = cross_check(&spec, &w, 1);
        assert_eq!(out.records.len(), 2048);
        assert_eq!(out.truth.window(0), &[(0x0A00_0001, 2048)]);
    }

    #[test]
    fn planted_spread_over_slots() {
        let w = WindowConfig::new(60, 2, 1_000).unwrap();
        let spec = SynthSpec {
            slots: 6,
            background: None,
            planted: vec![planted(9, 10, 1, 4), planted(10, 2, 0, 5)],
        };
        let out = cross_check(&spec, &w, 3);
        let c9: Vec<u32> = (0..6).map(|s| out.truth.count(s, 9)).collect();
        assert_eq!(c9, vec![0, 3, 6, 5, 4, 2]);
        let c10: Vec<u32> = (0..6).map(|s| out.truth.count(s, 10)).collect();
        assert_eq!(c10, vec![1, 2, 1, 0, 0, 0]);
        assert!(out.records.iter().all(|r| r.ts >= 1_000 && r.ts < 1_360));
    }

    #[test]
    fn background_matches_oracle_and_is_deterministic() {
        let w = WindowConfig::new(5, 4, 0).unwrap();
        let spec = SynthSpec {
            slots: 12,
            background: Some(BackgroundSpec {
                hosts: 300,
                zipf: 1.1,
                pairs_per_slot: 500,
                max_opposites: 16,
            }),
            planted: vec![planted(1, 100, 2, 9)],
        };
        let a = cross_check(&spec, &w, 42);
        let b = synth_trace(&spec, &w, 42).unwrap();
        assert_eq!(a, b);
        let c = synth_trace(&spec, &w, 43).unwrap();
        assert_ne!(a.records, c.records);
        assert!(a.records.windows(2).all(|p| p[0].ts <= p[1].ts));
        for s in 0..spec.slots {
            for &(cip, n) in a.truth.window(s) {
                assert!(cip == 1 || n <= 16);
            }
        }
    }

    #[test]
    fn infeasible_specs() {
        let w = WindowConfig::new(1, 3, 0).unwrap();
        let bad = [
            SynthSpec {
                slots: 0,
                background: None,
                planted: vec![],
            },
            SynthSpec {
                slots: 2,
                background: None,
                planted: vec![planted(1, 0, 0, 0)],
            },
            SynthSpec {
                slots: 2,
                background: None,
                planted: vec![planted(1, 5, 0, 2)],
            },
            SynthSpec {
                slots: 2,
                background: None,
                planted: vec![planted(1, 5, 0, 1), planted(1, 6, 0, 0)],
            },
            SynthSpec {
                slots: 2,
                background: Some(BackgroundSpec {
                    hosts: 0,
                    zipf: 1.0,
                    pairs_per_slot: 3,
                    max_opposites: 1,
                }),
                planted: vec![],
            },
        ];
        for spec in &bad {
            assert!(
                matches!(synth_trace(spec, &w, 0), Err(Error::Infeasible(_))),
                "{spec:?}"
            );
        }
        let late = WindowConfig::new(1000, 3, u32::MAX - 10).unwrap();
        let spec = SynthSpec {
            slots: 1,
            background: None,
            planted: vec![],
        };
        assert!(synth_trace(&spec, &late, 0).is_err());
    }
}
