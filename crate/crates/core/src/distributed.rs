//! Multi-node operation: RSEA snapshots, merging node sketches into a global
//! one, and a lockstep multi-node driver.
//!
//! # Snapshot format
//!
//! A 48-byte little-endian header followed by the grid:
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0  | 4 | magic `b"RSEA"` |
//! | 4  | 4 | format version (1) |
//! | 8  | 8 | hash seed |
//! | 16 | 1 | q |
//! | 17 | 1 | r |
//! | 18 | 1 | delta |
//! | 19 | 1 | zero |
//! | 20 | 4 | eta |
//! | 24 | 4 | k |
//! | 28 | 4 | theta |
//! | 32 | 8 | slot index |
//! | 40 | 4 | node id |
//! | 44 | 4 | zero |
//!
//! The payload is every recorder in (row, column, bucket) order as `u16` LE,
//! `2 * eta * r * 2^q` bytes exactly.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hashing::RhfgConfig;
use crate::load;
use crate::pipeline::{DetectorConfig, SlotBatches};
use crate::rsea::{DetectionReport, Rsea};
use crate::workload::TraceRecord;

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"RSEA";
pub const SNAPSHOT_VERSION: u32 = 1;
pub const SNAPSHOT_HEADER_LEN: usize = 48;
/// Node id written for merged sketches.
pub const MERGED_NODE: u32 = u32::MAX;

const IO_CHUNK: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SnapshotMeta {
    pub rhfg: RhfgConfig,
    pub eta: u32,
    pub k: u32,
    pub theta: u32,
    pub slot: u64,
    pub node: u32,
}

impl SnapshotMeta {
    /// Metadata for `rsea` as it stands.
    pub fn describe(rsea: &Rsea, k: u32, theta: u32, node: u32) -> Result<Self> {
        let eta = u32::try_from(rsea.eta())
            .map_err(|_| Error::InvalidConfig(vec![format!("eta {} exceeds u32", rsea.eta())]))?;
        Ok(Self {
            rhfg: *rsea.config(),
            eta,
            k,
            theta,
            slot: rsea.slot(),
            node,
        })
    }

    pub fn payload_len(&self) -> u64 {
        payload_len(&self.rhfg, self.eta as usize)
    }

    fn encode(&self) -> [u8; SNAPSHOT_HEADER_LEN] {
        let mut h = [0u8; SNAPSHOT_HEADER_LEN];
        h[0..4].copy_from_slice(&SNAPSHOT_MAGIC);
        h[4..8].copy_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        h[8..16].copy_from_slice(&self.rhfg.seed.to_le_bytes());
        h[16] = self.rhfg.q;
        h[17] = self.rhfg.r;
        h[18] = self.rhfg.delta;
        h[20..24].copy_from_slice(&self.eta.to_le_bytes());
        h[24..28].copy_from_slice(&self.k.to_le_bytes());
        h[28..32].copy_from_slice(&self.theta.to_le_bytes());
        h[32..40].copy_from_slice(&self.slot.to_le_bytes());
        h[40..44].copy_from_slice(&self.node.to_le_bytes());
        h
    }

    fn decode(h: &[u8; SNAPSHOT_HEADER_LEN]) -> Result<Self> {
        let u32_at = |i: usize| u32::from_le_bytes(h[i..i + 4].try_into().expect("4 bytes"));
        let u64_at = |i: usize| u64::from_le_bytes(h[i..i + 8].try_into().expect("8 bytes"));
        let magic: [u8; 4] = h[0..4].try_into().expect("4 bytes");
        if magic != SNAPSHOT_MAGIC {
            return Err(Error::BadMagic {
                expected: SNAPSHOT_MAGIC,
                found: magic,
            });
        }
        let version = u32_at(4);
        if version != SNAPSHOT_VERSION {
            return Err(Error::UnsupportedVersion {
                expected: SNAPSHOT_VERSION,
                found: version,
            });
        }
        if h[19] != 0 || u32_at(44) != 0 {
            return Err(Error::MalformedRecord {
                position: 0,
                reason: "reserved header bytes are not zero".into(),
            });
        }
        Ok(Self {
            rhfg: RhfgConfig::new(h[16], h[17], h[18], u64_at(8)),
            eta: u32_at(20),
            k: u32_at(24),
            theta: u32_at(28),
            slot: u64_at(32),
            node: u32_at(40),
        })
    }
}

/// Payload size in bytes for a grid of this shape.
pub fn payload_len(cfg: &RhfgConfig, eta: usize) -> u64 {
    2 * Rsea::grid_len(cfg, eta) as u64
}

#[derive(Clone, Debug, PartialEq)]
pub struct RseaSnapshot {
    pub meta: SnapshotMeta,
    pub rsea: Rsea,
}

/// Serializes `rsea` with the given window metadata.
pub fn export_snapshot<W: Write>(
    rsea: &Rsea,
    k: u32,
    theta: u32,
    node: u32,
    mut out: W,
) -> Result<()> {
    let meta = SnapshotMeta::describe(rsea, k, theta, node)?;
    out.write_all(&meta.encode())?;
    let mut buf = Vec::with_capacity(IO_CHUNK * 2);
    for chunk in rsea.grid().chunks(IO_CHUNK) {
        buf.clear();
        buf.extend(chunk.iter().flat_map(|v| v.to_le_bytes()));
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

fn read_full<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(filled)
}

/// Parses a snapshot, validating magic, version, parameters and length.
pub fn import_snapshot<R: Read>(mut input: R) -> Result<RseaSnapshot> {
    let mut header = [0u8; SNAPSHOT_HEADER_LEN];
    let got = read_full(&mut input, &mut header)?;
    if got < SNAPSHOT_HEADER_LEN {
        return Err(Error::Truncated {
            expected: SNAPSHOT_HEADER_LEN as u64,
            actual: got as u64,
        });
    }
    let meta = SnapshotMeta::decode(&header)?;
    meta.rhfg.check()?;
    if meta.eta < 2 {
        return Err(Error::InvalidConfig(vec![format!(
            "eta must be at least 2 (eta={})",
            meta.eta
        )]));
    }

    let expected = meta.payload_len();
    let cells = Rsea::grid_len(&meta.rhfg, meta.eta as usize);
    let mut grid = Vec::with_capacity(cells.min(1 << 24));
    let mut buf = vec![0u8; IO_CHUNK * 2];
    let mut actual = 0u64;
    while grid.len() < cells {
        let want = (cells - grid.len()).min(IO_CHUNK) * 2;
        let n = read_full(&mut input, &mut buf[..want])?;
        actual += n as u64;
        if n < want {
            return Err(Error::Truncated { expected, actual });
        }
        grid.extend(
            buf[..n]
                .chunks_exact(2)
                .map(|b| u16::from_le_bytes([b[0], b[1]])),
        );
    }
    let mut probe = [0u8; 1];
    if read_full(&mut input, &mut probe)? != 0 {
        return Err(Error::MalformedRecord {
            position: SNAPSHOT_HEADER_LEN as u64 + expected,
            reason: "trailing bytes after payload".into(),
        });
    }
    let rsea = Rsea::from_grid(meta.rhfg, meta.eta as usize, meta.slot, grid)?;
    Ok(RseaSnapshot { meta, rsea })
}

/// Like [`import_snapshot`], but also requires the layout to match.
pub fn import_snapshot_expecting<R: Read>(
    input: R,
    cfg: &RhfgConfig,
    eta: usize,
) -> Result<RseaSnapshot> {
    let snap = import_snapshot(input)?;
    compare_layout((&snap.meta.rhfg, snap.meta.eta as usize), (cfg, eta))?;
    Ok(snap)
}

fn compare_layout(a: (&RhfgConfig, usize), b: (&RhfgConfig, usize)) -> Result<()> {
    let (ca, ea) = a;
    let (cb, eb) = b;
    let mut problems = Vec::new();
    if ca.seed != cb.seed {
        problems.push(format!("seed mismatch: {:#x} vs {:#x}", ca.seed, cb.seed));
    }
    for (name, x, y) in [
        ("q", ca.q, cb.q),
        ("r", ca.r, cb.r),
        ("delta", ca.delta, cb.delta),
    ] {
        if x != y {
            problems.push(format!("{name} mismatch: {x} vs {y}"));
        }
    }
    if ea != eb {
        problems.push(format!("eta mismatch: {ea} vs {eb}"));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Incompatible(problems.join("; ")))
    }
}

/// Checks that two sketches share seed, q, r, delta and eta.
pub fn check_compatible(a: &Rsea, b: &Rsea) -> Result<()> {
    compare_layout((a.config(), a.eta()), (b.config(), b.eta()))
}

/// How per-node estimators combine into the global sketch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MergePolicy {
    /// Element-wise minimum: the global sketch equals the sketch of the
    /// combined stream.
    #[default]
    UnionMin,
    /// Element-wise maximum, kept for literal reproduction; a peer seen by
    /// only one node is lost.
    PaperMax,
}

/// Merges node sketches cell by cell. All inputs must be compatible and sit
/// at the same slot.
pub fn merge_rseas(rseas: &[&Rsea], policy: MergePolicy, workers: usize) -> Result<Rsea> {
    let (first, rest) = rseas.split_first().ok_or(Error::EmptyCombination)?;
    for other in rest {
        check_compatible(first, other)?;
        if other.slot() != first.slot() {
            return Err(Error::SlotMisalignment(format!(
                "cannot merge sketches at slots {} and {}",
                first.slot(),
                other.slot()
            )));
        }
    }
    let mut out = (*first).clone();
    let eta = first.eta();
    let grids: Vec<&[u16]> = rest.iter().map(|r| r.grid()).collect();
    let cells = out.grid().len() / eta;
    let ranges = load::split_ranges(cells, workers.max(1));
    let combine: fn(u16, u16) -> u16 = match policy {
        MergePolicy::UnionMin => std::cmp::min,
        MergePolicy::PaperMax => std::cmp::max,
    };
    let mut parts: Vec<&mut [u16]> = Vec::with_capacity(ranges.len());
    let mut tail = out.grid_mut();
    for r in &ranges {
        let (head, rest) = tail.split_at_mut(r.len() * eta);
        parts.push(head);
        tail = rest;
    }
    std::thread::scope(|scope| {
        for (part, r) in parts.into_iter().zip(&ranges) {
            let grids = &grids;
            let start = r.start * eta;
            let mut job = move || {
                for g in grids {
                    let src = &g[start..start + part.len()];
                    for (d, &s) in part.iter_mut().zip(src) {
                        *d = combine(*d, s);
                    }
                }
            };
            if ranges.len() == 1 {
                job();
            } else {
                scope.spawn(job);
            }
        }
    });
    Ok(out)
}

/// Merges snapshots; the result carries the first snapshot's window
/// metadata and [`MERGED_NODE`] as its node id.
pub fn merge_snapshots(
    snaps: &[RseaSnapshot],
    policy: MergePolicy,
    workers: usize,
) -> Result<RseaSnapshot> {
    let first = snaps.first().ok_or(Error::EmptyCombination)?;
    let rseas: Vec<&Rsea> = snaps.iter().map(|s| &s.rsea).collect();
    let rsea = merge_rseas(&rseas, policy, workers)?;
    let meta = SnapshotMeta {
        node: MERGED_NODE,
        ..first.meta
    };
    Ok(RseaSnapshot { meta, rsea })
}

/// Deals records to `n` shards uniformly at random, preserving order.
pub fn split_shards(records: &[TraceRecord], n: usize, seed: u64) -> Vec<Vec<TraceRecord>> {
    let n = n.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shards = vec![Vec::new(); n];
    for rec in records {
        shards[rng.random_range(0..n)].push(*rec);
    }
    shards
}

/// Outcome of one slot across the cluster.
pub struct SlotOutcome {
    pub report: DetectionReport,
    /// The merged sketch the report was reconstructed from.
    pub global: Rsea,
}

/// A set of nodes with identical configuration, driven in lockstep.
pub struct Cluster {
    cfg: DetectorConfig,
    policy: MergePolicy,
    nodes: Vec<Rsea>,
}

impl Cluster {
    pub fn new(cfg: DetectorConfig, nodes: usize, policy: MergePolicy) -> Result<Self> {
        cfg.validate()?;
        if nodes == 0 {
            return Err(Error::InvalidConfig(vec![
                "at least one node is required".into()
            ]));
        }
        let node = Rsea::new(cfg.rhfg, cfg.eta)?;
        Ok(Self {
            cfg,
            policy,
            nodes: vec![node; nodes],
        })
    }

    pub fn nodes(&self) -> &[Rsea] {
        &self.nodes
    }

    /// Scans each node's share of `slot`, merges and reconstructs.
    pub fn process_slot(&mut self, slot: u64, shards: &[Vec<(u32, u32)>]) -> Result<SlotOutcome> {
        if shards.len() != self.nodes.len() {
            return Err(Error::InvalidConfig(vec![format!(
                "{} shard batches for {} nodes",
                shards.len(),
                self.nodes.len()
            )]));
        }
        for (node, pairs) in self.nodes.iter_mut().zip(shards) {
            self.cfg.seek(node, slot)?;
            self.cfg.scan(node, pairs);
        }
        let refs: Vec<&Rsea> = self.nodes.iter().collect();
        let global = merge_rseas(&refs, self.policy, self.cfg.workers)?;
        let report = self.cfg.detect(&global)?;
        Ok(SlotOutcome { report, global })
    }
}

/// Runs `n` nodes, one per shard stream, merging at every slot end.
pub fn simulate_nodes<I, F>(
    shards: Vec<I>,
    cfg: DetectorConfig,
    policy: MergePolicy,
    min_slots: u64,
    mut sink: F,
) -> Result<Cluster>
where
    I: IntoIterator<Item = Result<TraceRecord>>,
    F: FnMut(&SlotOutcome) -> Result<()>,
{
    let mut cluster = Cluster::new(cfg, shards.len(), policy)?;
    let mut streams: Vec<_> = shards
        .into_iter()
        .map(|s| SlotBatches::new(s, cfg.window, min_slots))
        .collect();
    let mut live = vec![true; streams.len()];
    let mut slot = 0u64;
    loop {
        let mut batches = Vec::with_capacity(streams.len());
        for (stream, alive) in streams.iter_mut().zip(live.iter_mut()) {
            let next = if *alive { stream.next() } else { None };
            match next {
                Some(batch) => {
                    let (s, pairs) = batch?;
                    debug_assert_eq!(s, slot);
                    batches.push(pairs);
                }
                None => {
                    *alive = false;
                    batches.push(Vec::new());
                }
            }
        }
        if !live.iter().any(|&a| a) {
            break;
        }
        let outcome = cluster.process_slot(slot, &batches)?;
        sink(&outcome)?;
        slot += 1;
    }
    Ok(cluster)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Detector;
    use proptest::prelude::{any, prop_assert_eq, proptest, ProptestConfig};
    use std::io::Cursor;

    fn desk() -> (RhfgConfig, usize) {
        (RhfgConfig::new(10, 5, 8, 0x5EED), 64)
    }

    fn random_rsea(seed: u64, slots: u32) -> Rsea {
        let (cfg, eta) = desk();
        let mut rsea = Rsea::new(cfg, eta).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..slots {
            let pairs: Vec<(u32, u32)> = (0..200)
                .map(|_| (rng.random::<u32>() & 0xFF, rng.random()))
                .collect();
            rsea.scan_batch(&pairs, 1);
            rsea.advance_slot(1);
        }
        rsea
    }

    fn export(rsea: &Rsea) -> Vec<u8> {
        let mut buf = Vec::new();
        export_snapshot(rsea, 30, 128, 3, &mut buf).unwrap();
        buf
    }

    #[test]
    fn fresh_grid_payload_is_sentinel() {
        let (cfg, eta) = desk();
        let rsea = Rsea::new(cfg, eta).unwrap();
        let bytes = export(&rsea);
        assert_eq!(
            bytes.len() as u64,
            SNAPSHOT_HEADER_LEN as u64 + payload_len(&cfg, eta)
        );
        assert!(bytes[SNAPSHOT_HEADER_LEN..].iter().all(|&b| b == 0xFF));
        assert_eq!(&bytes[..4], b"RSEA");
    }

    #[test]
    fn paper_scale_payload_length() {
        assert_eq!(
            payload_len(&RhfgConfig::new(14, 5, 6, 0), 2048),
            335_544_320
        );
    }

    #[test]
    fn round_trip_keeps_meta() {
        let rsea = random_rsea(1, 4);
        let snap = import_snapshot(Cursor::new(export(&rsea))).unwrap();
        assert_eq!(snap.rsea, rsea);
        assert_eq!(
            (snap.meta.k, snap.meta.theta, snap.meta.node, snap.meta.slot),
            (30, 128, 3, 4)
        );
    }

    #[test]
    fn rejects_damaged_input() {
        let bytes = export(&random_rsea(2, 1));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            import_snapshot(Cursor::new(bad)),
            Err(Error::BadMagic { .. })
        ));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(
            import_snapshot(Cursor::new(bad)),
            Err(Error::UnsupportedVersion { found: 9, .. })
        ));
        let payload = bytes.len() as u64 - SNAPSHOT_HEADER_LEN as u64;
        let cut = &bytes[..bytes.len() - 3];
        match import_snapshot(Cursor::new(cut)) {
            Err(Error::Truncated { expected, actual }) => {
                assert_eq!((expected, actual), (payload, payload - 3));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            import_snapshot(Cursor::new(&bytes[..10])),
            Err(Error::Truncated {
                expected: 48,
                actual: 10
            })
        ));
        let mut long = bytes.clone();
        long.push(0);
        assert!(import_snapshot(Cursor::new(long)).is_err());
        let mut bad = bytes;
        bad[16] = 40;
        assert!(matches!(
            import_snapshot(Cursor::new(bad)),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn expected_layout_mismatch_names_values() {
        let bytes = export(&random_rsea(3, 1));
        let (mut cfg, eta) = desk();
        cfg.q = 14;
        cfg.delta = 6;
        let err = import_snapshot_expecting(Cursor::new(&bytes), &cfg, eta).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("q mismatch: 10 vs 14"), "{msg}");
        assert!(msg.contains("delta mismatch: 8 vs 6"), "{msg}");
        let (cfg, eta) = desk();
        import_snapshot_expecting(Cursor::new(&bytes), &cfg, eta).unwrap();
    }

    #[test]
    fn merge_rejects_incompatible_or_empty() {
        let a = random_rsea(4, 2);
        let mut cfg = *a.config();
        cfg.seed ^= 1;
        let b = Rsea::from_grid(cfg, a.eta(), a.slot(), a.grid().to_vec()).unwrap();
        assert!(matches!(
            merge_rseas(&[&a, &b], MergePolicy::UnionMin, 1),
            Err(Error::Incompatible(_))
        ));
        assert!(matches!(
            merge_rseas(&[], MergePolicy::UnionMin, 1),
            Err(Error::EmptyCombination)
        ));
        let c = random_rsea(5, 3);
        assert!(matches!(
            merge_rseas(&[&a, &c], MergePolicy::UnionMin, 1),
            Err(Error::SlotMisalignment(_))
        ));
        assert_eq!(merge_rseas(&[&a], MergePolicy::PaperMax, 4).unwrap(), a);
    }

    #[test]
    fn paper_max_loses_single_node_peers() {
        let (cfg, eta) = desk();
        let mut a = Rsea::new(cfg, eta).unwrap();
        let b = Rsea::new(cfg, eta).unwrap();
        let mut whole = Rsea::new(cfg, eta).unwrap();
        for o in 0..50u32 {
            a.update(7, o);
            whole.update(7, o);
        }
        assert_eq!(
            merge_rseas(&[&a, &b], MergePolicy::UnionMin, 2).unwrap(),
            whole
        );
        let max = merge_rseas(&[&a, &b], MergePolicy::PaperMax, 2).unwrap();
        assert_ne!(max, whole);
        assert!(max.grid().iter().all(|&v| v == crate::estimator::NEVER));
    }

    #[test]
    fn split_super_point_found_globally() {
        let mut cfg = DetectorConfig::desk(11);
        cfg.window.k = 2;
        let host = 0x0A0B_0C0D;
        let shards: Vec<Vec<(u32, u32)>> = (0..4u32)
            .map(|n| {
                (0..60u32)
                    .map(|j| (host, (n * 60 + j).wrapping_mul(0x9E37_79B9)))
                    .collect()
            })
            .collect();
        let mut cluster = Cluster::new(cfg, 4, MergePolicy::UnionMin).unwrap();
        let out = cluster.process_slot(0, &shards).unwrap();
        assert_eq!(out.report.cips().collect::<Vec<_>>(), vec![host]);
        for node in cluster.nodes() {
            let alone = cfg.detect(node).unwrap();
            assert!(alone.hosts.is_empty());
        }
    }

    #[test]
    fn single_node_simulation_matches_detector() {
        let cfg = DetectorConfig::desk(12);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut recs: Vec<TraceRecord> = (0..3000)
            .map(|_| {
                TraceRecord::new(
                    rng.random_range(0..6),
                    rng.random::<u32>() & 0x3F,
                    rng.random(),
                )
            })
            .collect();
        recs.sort_by_key(|r| r.ts);
        for o in 0..300u32 {
            recs.push(TraceRecord::new(6, 0xDEAD_BEEF, o));
        }
        let mut single = Vec::new();
        let mut det = Detector::new(cfg).unwrap();
        det.run(recs.iter().copied().map(Ok), 0, |r| {
            single.push(r.clone());
            Ok(())
        })
        .unwrap();
        let mut multi = Vec::new();
        let cluster = simulate_nodes(
            vec![recs.iter().copied().map(Ok)],
            cfg,
            MergePolicy::UnionMin,
            0,
            |o| {
                multi.push(o.report.clone());
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(single, multi);
        assert_eq!(cluster.nodes()[0], *det.rsea());
        assert!(single[6].cips().any(|c| c == 0xDEAD_BEEF));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn snapshot_round_trip(seed in any::<u64>(), slots in 0u32..5) {
            let rsea = random_rsea(seed, slots);
            let back = import_snapshot(Cursor::new(export(&rsea))).unwrap();
            prop_assert_eq!(&back.rsea, &rsea);
            prop_assert_eq!(export(&back.rsea), export(&rsea));
        }

        #[test]
        fn union_min_equals_unsplit_stream(seed in any::<u64>(), n in 1usize..5) {
            let (cfg, eta) = desk();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut whole = Rsea::new(cfg, eta).unwrap();
            let mut nodes = vec![Rsea::new(cfg, eta).unwrap(); n];
            for _ in 0..3 {
                let pairs: Vec<(u32, u32)> = (0..300).map(|_| (rng.random::<u32>() & 0xFFF, rng.random())).collect();
                whole.scan_batch(&pairs, 1);
                for p in &pairs {
                    nodes[rng.random_range(0..n)].update(p.0, p.1);
                }
                let refs: Vec<&Rsea> = nodes.iter().collect();
                prop_assert_eq!(&merge_rseas(&refs, MergePolicy::UnionMin, 3).unwrap(), &whole);
                whole.advance_slot(1);
                for node in &mut nodes {
                    node.advance_slot(1);
                }
            }
        }

        #[test]
        fn union_min_laws(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
            let (x, y, z) = (random_rsea(a, 2), random_rsea(b, 2), random_rsea(c, 2));
            let m = |p: &[&Rsea]| merge_rseas(p, MergePolicy::UnionMin, 2).unwrap();
            prop_assert_eq!(m(&[&x, &y]), m(&[&y, &x]));
            prop_assert_eq!(m(&[&x, &x]), x.clone());
            prop_assert_eq!(m(&[&m(&[&x, &y]), &z]), m(&[&x, &m(&[&y, &z])]));
        }
    }
}
