//! Plain-text `key=value` configuration and its validation into a
//! [`RunConfig`].
//!
//! Entries are separated by whitespace or newlines, `#` starts a comment and
//! list values are separated by `;`. Integer lists also accept inclusive
//! ranges written `a..b`.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::str::FromStr;

use dcf_mrp::model::{BackoffSchedule, PhyTiming};

use crate::error::{validation, CliResult};

/// What a run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    AnalyzeZero,
    AnalyzeDelay,
    Bianchi,
    MeanField,
    Fairness,
    SweepSlot,
    SweepMinBe,
    Compare,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::AnalyzeZero => "analyze-zero",
            Mode::AnalyzeDelay => "analyze-delay",
            Mode::Bianchi => "bianchi",
            Mode::MeanField => "meanfield",
            Mode::Fairness => "fairness",
            Mode::SweepSlot => "sweep-slot",
            Mode::SweepMinBe => "sweep-minbe",
            Mode::Compare => "compare",
        }
    }

    const ALL: [Mode; 9] = [
        Mode::Simulate,
        Mode::AnalyzeZero,
        Mode::AnalyzeDelay,
        Mode::Bianchi,
        Mode::MeanField,
        Mode::Fairness,
        Mode::SweepSlot,
        Mode::SweepMinBe,
        Mode::Compare,
    ];
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Mode::ALL.iter().map(|m| m.name()).collect();
                format!("unknown mode '{s}' (expected one of {})", names.join(", "))
            })
    }
}

/// Starting point of a mean-field trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialMass {
    /// All nodes at stage 0.
    First,
    /// Equal mass on every stage.
    Uniform,
    /// All nodes at the last stage.
    Last,
}

impl FromStr for InitialMass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "first" => Ok(InitialMass::First),
            "uniform" => Ok(InitialMass::Uniform),
            "last" => Ok(InitialMass::Last),
            _ => Err(format!(
                "unknown initial mass '{s}' (expected first, uniform or last)"
            )),
        }
    }
}

/// Fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub schedule: BackoffSchedule,
    /// Timing template; `sigma` is set, `delta` is taken from `delta_us`.
    pub timing: PhyTiming,
    pub n: Vec<usize>,
    pub delta_us: Vec<u64>,
    pub sigma_us: u64,
    pub cycles: u64,
    pub seed: u64,
    pub window: Option<usize>,
    pub frame_lens: Vec<usize>,
    pub eu1_max: f64,
    /// Set only when given explicitly.
    pub minbe_range: Option<RangeInclusive<u32>>,
    pub p: u32,
    pub max_be: u32,
    pub k: usize,
    pub m_max: usize,
    pub t_end: f64,
    pub mu0: InitialMass,
    pub trace: bool,
    pub out: PathBuf,
    pub label: String,
}

impl RunConfig {
    /// Timing for propagation delay `delta_us`.
    pub fn timing_for(&self, delta_us: u64) -> PhyTiming {
        self.timing.with_delay(delta_us as f64)
    }

    /// Delay in whole slots for `delta_us`.
    pub fn m_for(&self, delta_us: u64) -> usize {
        (delta_us / self.sigma_us) as usize
    }

    /// Whether any requested delay spans at least one slot.
    pub fn has_delay(&self) -> bool {
        self.delta_us.iter().any(|&d| self.m_for(d) > 0)
    }
}

const KEYS: [&str; 28] = [
    "mode",
    "schedule",
    "n",
    "delta_us",
    "sigma_us",
    "cycles",
    "seed",
    "window",
    "L",
    "eu1_max",
    "minbe_range",
    "minBE",
    "p",
    "maxBE",
    "K",
    "m_max",
    "t_end",
    "mu0",
    "trace",
    "out",
    "label",
    "t_d_us",
    "t_o_us",
    "ack_us",
    "phy_us",
    "sifs_us",
    "difs_us",
    "eifs_us",
];

/// Raw `key -> value` entries; later insertions override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    /// Parses configuration text.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut raw = RawConfig::default();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            for token in line.split_whitespace() {
                raw.set_pair(token)?;
            }
        }
        Ok(raw)
    }

    /// Sets one `key=value` token.
    pub fn set_pair(&mut self, token: &str) -> CliResult<()> {
        match token.split_once('=') {
            Some((k, v)) if !k.is_empty() => self.set(k, v),
            _ => validation(format!("expected key=value, got '{token}'")),
        }
    }

    /// Sets `key` to `value`, rejecting unknown keys.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        if !KEYS.contains(&key) {
            return validation(format!("unknown key '{key}'"));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Overlays every entry of `other`.
    pub fn merge(&mut self, other: RawConfig) {
        self.entries.extend(other.entries);
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn scalar<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_scalar(key, v),
        }
    }

    /// Validates and fills defaults.
    pub fn build(&self) -> CliResult<RunConfig> {
        let mode: Mode = match self.get("mode") {
            None => return validation("missing required key 'mode'"),
            Some(v) => v.parse().or_else(validation)?,
        };
        let minbe = self.scalar("minBE", 5u32)?;
        let p = self.scalar("p", 2u32)?;
        let max_be = self.scalar("maxBE", 10u32)?;
        let k = self.scalar("K", 6usize)?;
        let schedule = match self.get("schedule") {
            Some(spec) => parse_schedule(spec)?,
            None => BackoffSchedule::from_exponents(minbe, p, max_be, k)?,
        };
        let sigma_us = self.scalar("sigma_us", 20u64)?;
        if sigma_us == 0 {
            return validation("sigma_us must be >= 1");
        }
        let d = PhyTiming::default();
        let timing = PhyTiming {
            sigma: sigma_us as f64,
            t_d: self.scalar("t_d_us", d.t_d as u64)? as f64,
            ack: self.scalar("ack_us", d.ack as u64)? as f64,
            phy_hdr: self.scalar("phy_us", d.phy_hdr as u64)? as f64,
            sifs: self.scalar("sifs_us", d.sifs as u64)? as f64,
            difs: self.scalar("difs_us", d.difs as u64)? as f64,
            t_o: self.scalar("t_o_us", d.t_o as u64)? as f64,
            eifs: self.scalar("eifs_us", d.eifs as u64)? as f64,
            ..d
        };
        let n = match self.get("n") {
            None => vec![2],
            Some(v) => parse_usize_list("n", v)?,
        };
        if n.contains(&0) {
            return validation("n must be >= 1");
        }
        let delta_us = match self.get("delta_us") {
            None => vec![0],
            Some(v) => parse_usize_list("delta_us", v)?
                .into_iter()
                .map(|x| x as u64)
                .collect(),
        };
        let frame_lens = match self.get("L") {
            None => vec![1, 2, 5, 10, 20, 50, 100],
            Some(v) => parse_usize_list("L", v)?,
        };
        if frame_lens.contains(&0) {
            return validation("frame lengths L must be >= 1");
        }
        let minbe_range = self.get("minbe_range").map(parse_u32_range).transpose()?;
        let window = self
            .get("window")
            .map(|v| parse_scalar::<usize>("window", v))
            .transpose()?;
        if window == Some(0) {
            return validation("window must be >= 1");
        }
        let cycles = self.scalar("cycles", 1_000_000u64)?;
        if cycles == 0 {
            return validation("cycles must be >= 1");
        }
        let eu1_max = self.scalar("eu1_max", 3.0f64)?;
        if eu1_max.is_nan() || eu1_max <= 1.0 {
            return validation("eu1_max must exceed 1");
        }
        let t_end = self.scalar("t_end", 1e5f64)?;
        if !(t_end > 0.0 && t_end.is_finite()) {
            return validation("t_end must be positive and finite");
        }
        let label = self.get("label").unwrap_or("run").to_string();
        if label.is_empty() || label.contains(['/', '\\']) {
            return validation("label must be a non-empty file-name fragment");
        }
        let cfg = RunConfig {
            mode,
            schedule,
            timing,
            n,
            delta_us,
            sigma_us,
            cycles,
            seed: self.scalar("seed", 1u64)?,
            window,
            frame_lens,
            eu1_max,
            minbe_range,
            p,
            max_be,
            k,
            m_max: self.scalar("m_max", 30usize)?,
            t_end,
            mu0: self.scalar("mu0", InitialMass::First)?,
            trace: self.scalar("trace", false)?,
            out: PathBuf::from(self.get("out").unwrap_or(".")),
            label,
        };
        check_mode(&cfg)?;
        Ok(cfg)
    }
}

fn parse_scalar<T: FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.trim()
        .parse()
        .or_else(|_| validation(format!("invalid value '{v}' for '{key}'")))
}

/// Parses `a;b;c` with optional inclusive ranges `a..b`.
pub fn parse_usize_list(key: &str, v: &str) -> CliResult<Vec<usize>> {
    let mut out = Vec::new();
    for item in v.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        match item.split_once("..") {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (parse_scalar(key, a)?, parse_scalar(key, b)?);
                if a > b {
                    return validation(format!("empty range '{item}' for '{key}'"));
                }
                out.extend(a..=b);
            }
            None => out.push(parse_scalar(key, item)?),
        }
    }
    if out.is_empty() {
        return validation(format!("'{key}' needs at least one value"));
    }
    Ok(out)
}

fn parse_u32_range(v: &str) -> CliResult<RangeInclusive<u32>> {
    let (a, b) = match v.split_once("..") {
        Some((a, b)) => (
            parse_scalar("minbe_range", a)?,
            parse_scalar("minbe_range", b)?,
        ),
        None => {
            let x = parse_scalar("minbe_range", v)?;
            (x, x)
        }
    };
    if a > b {
        return validation(format!("empty minbe_range '{v}'"));
    }
    Ok(a..=b)
}

/// Parses a schedule: a preset name (`802.11b`, `seq1`..`seq4`,
/// `long-retry`, `large-variability`) or `;`-separated fields `K:<int>`
/// with one of `b:<means>`, `W:<windows>` or `minBE:<e>;p:<p>;maxBE:<e>`.
pub fn parse_schedule(spec: &str) -> CliResult<BackoffSchedule> {
    match spec.trim() {
        "802.11b" => return Ok(BackoffSchedule::ieee80211b()),
        "seq1" => return Ok(BackoffSchedule::test_sequence_1()),
        "seq2" => return Ok(BackoffSchedule::test_sequence_2()),
        "seq3" => return Ok(BackoffSchedule::test_sequence_3()),
        "seq4" => return Ok(BackoffSchedule::test_sequence_4()),
        "long-retry" => return Ok(BackoffSchedule::long_retry()),
        "large-variability" => return Ok(BackoffSchedule::large_variability()),
        _ => {}
    }
    let mut fields = BTreeMap::new();
    for part in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let Some((k, v)) = part.split_once(':') else {
            return validation(format!("schedule field '{part}' is not name:value"));
        };
        if fields.insert(k.trim(), v.trim()).is_some() {
            return validation(format!("schedule field '{k}' given twice"));
        }
    }
    let k: Option<usize> = fields
        .get("K")
        .map(|v| parse_scalar("schedule K", v))
        .transpose()?;
    let list = |name: &str| -> Option<Vec<&str>> {
        fields
            .get(name)
            .map(|v| v.split(',').map(str::trim).collect())
    };
    let with_k = |len: usize| -> CliResult<usize> {
        match k {
            Some(k) if k + 1 != len => validation(format!("schedule has K={k} but {len} stages")),
            _ => Ok(len - 1),
        }
    };
    let schedule = if let Some(means) = list("b") {
        let means = means
            .iter()
            .map(|v| parse_scalar::<f64>("schedule b", v))
            .collect::<CliResult<Vec<_>>>()?;
        BackoffSchedule::from_means(with_k(means.len())?, &means)?
    } else if let Some(ws) = list("W") {
        let ws = ws
            .iter()
            .map(|v| parse_scalar::<u32>("schedule W", v))
            .collect::<CliResult<Vec<_>>>()?;
        with_k(ws.len())?;
        BackoffSchedule::new(ws)?
    } else if let Some(mb) = fields.get("minBE") {
        let get = |name: &str, default: u32| -> CliResult<u32> {
            fields
                .get(name)
                .map_or(Ok(default), |v| parse_scalar(name, v))
        };
        BackoffSchedule::from_exponents(
            parse_scalar("minBE", mb)?,
            get("p", 2)?,
            get("maxBE", 10)?,
            k.unwrap_or(6),
        )?
    } else {
        return validation(format!("schedule '{spec}' needs b:, W: or minBE: values"));
    };
    let known = ["K", "b", "W", "minBE", "p", "maxBE"];
    if let Some(bad) = fields.keys().find(|f| !known.contains(f)) {
        return validation(format!("unknown schedule field '{bad}'"));
    }
    Ok(schedule)
}

fn check_mode(cfg: &RunConfig) -> CliResult<()> {
    let two_nodes_only = || -> CliResult<()> {
        if cfg.n != [2] {
            let n = cfg.n.iter().find(|&&x| x != 2).copied().unwrap_or(0);
            return validation(format!("delay analysis supports n=2 only (got n={n})"));
        }
        Ok(())
    };
    let needs_analysis_n = || -> CliResult<()> {
        if cfg.n.iter().any(|&x| x < 2) {
            return validation("analysis needs n >= 2");
        }
        Ok(())
    };
    match cfg.mode {
        Mode::Simulate | Mode::MeanField => Ok(()),
        Mode::AnalyzeZero | Mode::Bianchi => needs_analysis_n(),
        Mode::AnalyzeDelay | Mode::SweepSlot | Mode::SweepMinBe => two_nodes_only(),
        Mode::Fairness | Mode::Compare => {
            needs_analysis_n()?;
            if cfg.has_delay() {
                two_nodes_only()?;
            }
            if cfg.mode == Mode::Fairness && cfg.n.len() != 1 {
                return validation("fairness takes a single n");
            }
            Ok(())
        }
    }
    .and_then(|_| match cfg.mode {
        Mode::SweepSlot if cfg.delta_us.contains(&0) => validation("sweep-slot needs delta_us > 0"),
        Mode::SweepMinBe if cfg.delta_us.len() != 1 => {
            validation("sweep-minbe takes a single delta_us")
        }
        _ => Ok(()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(text: &str) -> CliResult<RunConfig> {
        RawConfig::parse(text)?.build()
    }

    #[test]
    fn delay_example_gives_m() {
        let cfg = build("mode=analyze-delay delta_us=140 n=2").unwrap();
        assert_eq!(cfg.m_for(cfg.delta_us[0]), 7);
    }

    #[test]
    fn delay_with_three_nodes_is_rejected() {
        let err = build("mode=analyze-delay n=3 delta_us=140").unwrap_err();
        assert!(err.to_string().contains("delay analysis supports n=2 only"));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn mean_schedule_reproduces_first_test_sequence() {
        let s = parse_schedule("K:7;b:1,3,9,27,81,243,729,2187").unwrap();
        assert_eq!(s, BackoffSchedule::test_sequence_1());
    }

    #[test]
    fn schedule_forms_agree() {
        let a = parse_schedule("minBE:5;p:2;maxBE:10;K:6").unwrap();
        assert_eq!(a.windows(), BackoffSchedule::ieee80211b().windows());
        let b = parse_schedule("W:32,64,128,256,512,1024,1024").unwrap();
        assert_eq!(a.windows(), b.windows());
        assert!(parse_schedule("K:2;W:1,2").is_err());
        assert!(parse_schedule("K:1;b:1,1.25").is_err());
        assert!(parse_schedule("K:1;Q:3").is_err());
    }

    #[test]
    fn defaults_follow_80211b() {
        let cfg = build("mode=bianchi").unwrap();
        assert_eq!(
            cfg.schedule.windows(),
            BackoffSchedule::ieee80211b().windows()
        );
        assert_eq!(cfg.sigma_us, 20);
        assert_eq!(cfg.timing.t_d, 4112.0);
        assert_eq!(cfg.timing.t_o, 10.0);
    }

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_usize_list("n", "2..4;7").unwrap(), vec![2, 3, 4, 7]);
        assert!(parse_usize_list("n", "5..3").is_err());
        assert!(parse_usize_list("n", "x").is_err());
    }

    #[test]
    fn comments_and_newlines() {
        let cfg = build("# header\nmode=bianchi  # trailing\nn=2;3\n").unwrap();
        assert_eq!(cfg.n, vec![2, 3]);
    }

    #[test]
    fn unknown_key_and_missing_mode() {
        assert!(build("mode=bianchi colour=red").is_err());
        assert!(build("n=2").unwrap_err().to_string().contains("mode"));
        assert!(build("mode=dance").is_err());
    }

    #[test]
    fn later_entries_override() {
        let mut raw = RawConfig::parse("mode=bianchi n=3").unwrap();
        raw.merge(RawConfig::parse("n=5").unwrap());
        assert_eq!(raw.build().unwrap().n, vec![5]);
    }
}
