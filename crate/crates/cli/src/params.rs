use clap::{Args, ValueEnum};
use ssp_core::distributed::MergePolicy;
use ssp_core::pipeline::DetectorConfig;
use ssp_core::rsea::Strategy;
use ssp_core::{Error, Result};

pub const DEFAULT_SEED: u64 = 0x5EED_CAFE_F00D_D00D;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Min,
    PaperMax,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Recursive,
    Leveled,
}

fn parse_seed(s: &str) -> std::result::Result<u64, String> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
        None => s.replace('_', "").parse(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

/// Detector parameters. Explicit flags win over the `--desk` preset, which
/// wins over the full-scale defaults.
#[derive(Args, Clone, Debug, Default)]
pub struct Params {
    /// Buckets per estimator
    #[arg(long, global = true)]
    pub eta: Option<usize>,
    /// Column bits (2^q columns per row)
    #[arg(long, global = true)]
    pub q: Option<u8>,
    /// Rows in the hash group
    #[arg(long, global = true)]
    pub r: Option<u8>,
    /// Shift between consecutive rows
    #[arg(long, global = true)]
    pub delta: Option<u8>,
    /// Window length in slots
    #[arg(long, global = true)]
    pub k: Option<u32>,
    /// Slot duration in seconds
    #[arg(long, global = true)]
    pub mu: Option<u32>,
    /// Super point threshold (distinct opposites)
    #[arg(long, global = true)]
    pub theta: Option<u32>,
    /// Hash seed, decimal or 0x-prefixed hex; all nodes must agree
    #[arg(long, global = true, value_parser = parse_seed)]
    pub seed: Option<u64>,
    /// Pairs scanned per batch
    #[arg(long, global = true)]
    pub alpha: Option<usize>,
    /// Worker threads
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// How node sketches are combined
    #[arg(long, global = true, value_enum)]
    pub merge_policy: Option<PolicyArg>,
    /// Reconstruction strategy
    #[arg(long, global = true, value_enum)]
    pub strategy: Option<StrategyArg>,
    /// Epoch second at which slot 0 begins
    #[arg(long, global = true)]
    pub start: Option<u32>,
    /// Abort reconstruction when a level holds more candidates than this
    #[arg(long, global = true)]
    pub candidate_cap: Option<usize>,
    /// Laptop-sized preset (eta=256, q=10, r=5, delta=8, theta=128, k=30)
    #[arg(long, global = true)]
    pub desk: bool,
}

impl Params {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn base(&self) -> DetectorConfig {
        if self.desk {
            DetectorConfig::desk(self.seed())
        } else {
            DetectorConfig::paper(self.seed())
        }
    }

    /// Applies explicit flags on top of `cfg`.
    pub fn apply(&self, mut cfg: DetectorConfig) -> DetectorConfig {
        if let Some(v) = self.eta {
            cfg.eta = v;
        }
        if let Some(v) = self.q {
            cfg.rhfg.q = v;
        }
        if let Some(v) = self.r {
            cfg.rhfg.r = v;
        }
        if let Some(v) = self.delta {
            cfg.rhfg.delta = v;
        }
        if let Some(v) = self.seed {
            cfg.rhfg.seed = v;
        }
        if let Some(v) = self.k {
            cfg.window.k = v;
        }
        if let Some(v) = self.mu {
            cfg.window.mu = v;
        }
        if let Some(v) = self.start {
            cfg.window.start = v;
        }
        if let Some(v) = self.theta {
            cfg.theta = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = self.candidate_cap {
            cfg.candidate_cap = v;
        }
        if let Some(v) = self.strategy {
            cfg.strategy = match v {
                StrategyArg::Recursive => Strategy::Recursive,
                StrategyArg::Leveled => Strategy::Leveled,
            };
        }
        cfg
    }

    pub fn resolve(&self) -> Result<DetectorConfig> {
        let cfg = self.apply(self.base());
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn policy(&self) -> MergePolicy {
        match self.merge_policy {
            Some(PolicyArg::PaperMax) => MergePolicy::PaperMax,
            _ => MergePolicy::UnionMin,
        }
    }

    /// Rejects layout flags that contradict a snapshot's recorded layout.
    pub fn check_layout(&self, cfg: &DetectorConfig) -> Result<()> {
        let mut problems = Vec::new();
        let mut cmp = |name: &str, flag: Option<u64>, have: u64| {
            if let Some(f) = flag.filter(|&f| f != have) {
                problems.push(format!("{name} mismatch: {have} vs {f}"));
            }
        };
        cmp("eta", self.eta.map(|v| v as u64), cfg.eta as u64);
        cmp("q", self.q.map(u64::from), u64::from(cfg.rhfg.q));
        cmp("r", self.r.map(u64::from), u64::from(cfg.rhfg.r));
        cmp(
            "delta",
            self.delta.map(u64::from),
            u64::from(cfg.rhfg.delta),
        );
        cmp("seed", self.seed, cfg.rhfg.seed);
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Incompatible(problems.join("; ")))
        }
    }
}
