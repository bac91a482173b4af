//! Experiment configuration files.
//!
//! One `section.key = value` pair per line; `#` starts a comment outside
//! quotes. Values are numbers, bare words, double-quoted strings (with `\"`
//! and `\\` escapes) or comma-separated lists. Every key is optional and
//! unknown keys are rejected. [`dump_defaults`] prints the complete default
//! document.
//!
//! ```
//! use iwcn_core::config::parse_config;
//! use iwcn_core::sim::PolicyKind;
//!
//! let cfg = parse_config("policy.kind = \"benchmark\"\nsim.seed = 7 # paired with run 6\n").unwrap();
//! assert_eq!(cfg.scenario.policy, PolicyKind::Benchmark);
//! assert_eq!(cfg.scenario.seed, 7);
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::energy::{DutyCycle, EnergyModel};
use crate::mac::{TimingConstants, WusMode};
use crate::sim::{PlacementSpec, PolicyKind, Scenario};
use crate::spatial::{Arena, Point};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unknown key `{key}` at line {line}")]
    UnknownKey { key: String, line: usize },
    #[error("`{key}`: {message}")]
    Constraint { key: String, message: String },
}

/// A parsed configuration: the scenario plus sweep and output settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n_values: Vec<usize>,
    /// Output file; `None` leaves the choice to the caller.
    pub output_path: Option<PathBuf>,
}

pub const DEFAULT_N_VALUES: [usize; 5] = [10, 25, 50, 100, 200];

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { scenario: Scenario::default(), n_values: DEFAULT_N_VALUES.to_vec(), output_path: None }
    }
}

const KEYS: &[&str] = &[
    "arena.width",
    "arena.height",
    "arena.relevance_radius",
    "arena.placement",
    "arena.placement_file",
    "devices.count",
    "devices.wur_fraction",
    "devices.duty_active_slots",
    "devices.duty_period_slots",
    "energy.capacity",
    "energy.harvest_prob",
    "energy.cost_sense",
    "energy.cost_tx",
    "energy.cost_wakeup_rx",
    "timing.slot_ms",
    "timing.deadline_ms",
    "timing.initial_report_slots",
    "timing.wakeup_round_slots",
    "timing.max_rounds",
    "policy.kind",
    "policy.k_req",
    "policy.knn_k",
    "policy.knn_window",
    "policy.candidate_factor",
    "policy.conserve_active_slots",
    "policy.conserve_period_slots",
    "policy.conserve_below",
    "policy.resume_above",
    "policy.control_interval",
    "wus.mode",
    "wus.group_size",
    "event.p_event",
    "event.epicenter",
    "sim.horizon",
    "sim.warmup",
    "sim.seed",
    "sim.replications",
    "sim.first_replication",
    "sweep.n_values",
    "output.path",
];

struct Entry {
    line: usize,
    value: String,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Syntax { line, column, message: message.into() }
}

/// Splits one line into key and unquoted value; `None` for blank lines.
fn parse_line(raw: &str, line: usize) -> Result<Option<(String, String)>, ConfigError> {
    let chars: Vec<char> = raw.chars().collect();
    let Some(eq) = chars.iter().position(|&c| c == '=' || c == '#' || c == '"') else {
        return if raw.trim().is_empty() { Ok(None) } else { Err(syntax(line, 1, "expected `key = value`")) };
    };
    if chars[eq] == '#' {
        return if chars[..eq].iter().all(|c| c.is_whitespace()) {
            Ok(None)
        } else {
            Err(syntax(line, eq + 1, "expected `=` before comment"))
        };
    }
    if chars[eq] == '"' {
        return Err(syntax(line, eq + 1, "unexpected quote in key"));
    }
    let key: String = chars[..eq].iter().collect::<String>().trim().to_string();
    let key_ok = !key.is_empty()
        && key.split('.').all(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'));
    if !key_ok {
        let col = chars.iter().position(|c| !c.is_whitespace()).unwrap_or(0) + 1;
        return Err(syntax(line, col, format!("malformed key `{key}`")));
    }
    let mut value = String::new();
    let mut i = eq + 1;
    let mut quoted = false;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '#' => break,
            '"' => {
                if quoted || !value.trim().is_empty() {
                    return Err(syntax(line, i + 1, "a quoted string must be the whole value"));
                }
                value.clear();
                quoted = true;
                i += 1;
                let mut closed = false;
                while i < chars.len() {
                    match chars[i] {
                        '\\' if i + 1 < chars.len() && matches!(chars[i + 1], '"' | '\\') => {
                            value.push(chars[i + 1]);
                            i += 2;
                        }
                        '\\' => return Err(syntax(line, i + 1, "unsupported escape")),
                        '"' => {
                            closed = true;
                            i += 1;
                            break;
                        }
                        ch => {
                            value.push(ch);
                            i += 1;
                        }
                    }
                }
                if !closed {
                    return Err(syntax(line, raw.chars().count() + 1, "unterminated string"));
                }
                continue;
            }
            _ if quoted && !c.is_whitespace() => {
                return Err(syntax(line, i + 1, "unexpected text after quoted string"));
            }
            _ => {
                if !quoted {
                    value.push(c);
                }
            }
        }
        i += 1;
    }
    let value = if quoted { value } else { value.trim().to_string() };
    Ok(Some((key, value)))
}

struct Doc {
    entries: BTreeMap<String, Entry>,
}

impl Doc {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let Some((key, value)) = parse_line(raw, line)? else { continue };
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey { key, line });
            }
            if let Some(prev) = entries.insert(key.clone(), Entry { line, value }) {
                return Err(ConfigError::Constraint {
                    key,
                    message: format!("set twice (lines {} and {line})", prev.line),
                });
            }
        }
        Ok(Self { entries })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| constraint(key, format!("cannot parse `{v}` as {}", type_name::<T>()))),
        }
    }
}

fn type_name<T>() -> &'static str {
    let full = std::any::type_name::<T>();
    match full {
        "f64" => "a number",
        "u32" | "u64" | "usize" => "a non-negative integer",
        _ => full,
    }
}

fn constraint(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Constraint { key: key.to_string(), message: message.into() }
}

fn positive_f64(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(constraint(key, format!("must be a finite number > 0, got {v}")))
    }
}

fn unit_f64(key: &str, v: f64) -> Result<f64, ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(constraint(key, format!("must lie in [0, 1], got {v}")))
    }
}

fn at_least<T: PartialOrd + std::fmt::Display>(key: &str, v: T, min: T) -> Result<T, ConfigError> {
    if v >= min {
        Ok(v)
    } else {
        Err(constraint(key, format!("must be at least {min}, got {v}")))
    }
}

fn duty(active_key: &str, period_key: &str, active: u32, period: u32) -> Result<DutyCycle, ConfigError> {
    at_least(period_key, period, 1)?;
    at_least(active_key, active, 1)?;
    DutyCycle::new(active, period).map_err(|e| constraint(active_key, e.to_string()))
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let doc = Doc::parse(text)?;
    let d = ExperimentConfig::default();
    let s0 = &d.scenario;

    let width = positive_f64("arena.width", doc.get("arena.width", s0.arena.width())?)?;
    let height = positive_f64("arena.height", doc.get("arena.height", s0.arena.height())?)?;
    let radius =
        positive_f64("arena.relevance_radius", doc.get("arena.relevance_radius", s0.arena.relevance_radius())?)?;
    let arena = Arena::new(width, height, radius).map_err(|e| constraint("arena", e.to_string()))?;

    let placement_file = doc.raw("arena.placement_file");
    let placement = match doc.raw("arena.placement").unwrap_or("uniform") {
        "uniform" => PlacementSpec::Uniform,
        "grid" => PlacementSpec::Grid,
        "file" => match placement_file {
            Some(p) if !p.is_empty() => PlacementSpec::File(PathBuf::from(p)),
            _ => return Err(constraint("arena.placement_file", "required when arena.placement = file")),
        },
        other => return Err(constraint("arena.placement", format!("expected uniform, grid or file, got `{other}`"))),
    };
    if placement_file.is_some() && !matches!(placement, PlacementSpec::File(_)) {
        return Err(constraint("arena.placement_file", "only allowed with arena.placement = file"));
    }

    let devices = at_least("devices.count", doc.get("devices.count", s0.devices)?, 1)?;
    let wur_fraction = unit_f64("devices.wur_fraction", doc.get("devices.wur_fraction", s0.wur_fraction)?)?;
    let nominal = duty(
        "devices.duty_active_slots",
        "devices.duty_period_slots",
        doc.get("devices.duty_active_slots", s0.duty.active_slots())?,
        doc.get("devices.duty_period_slots", s0.duty.period_slots())?,
    )?;

    let e0 = &s0.energy;
    let capacity = at_least("energy.capacity", doc.get("energy.capacity", e0.capacity())?, 1)?;
    let harvest = unit_f64("energy.harvest_prob", doc.get("energy.harvest_prob", e0.harvest_prob())?)?;
    let cost_sense = doc.get("energy.cost_sense", e0.cost_sense())?;
    let cost_tx = doc.get("energy.cost_tx", e0.cost_tx())?;
    let cost_rx = doc.get("energy.cost_wakeup_rx", e0.cost_wakeup_rx())?;
    let energy = EnergyModel::new(capacity, harvest, cost_sense, cost_tx, cost_rx)
        .map_err(|e| constraint("energy.capacity", e.to_string()))?;

    let t0 = &s0.timing;
    let slot_ms = positive_f64("timing.slot_ms", doc.get("timing.slot_ms", t0.slot_ms())?)?;
    let deadline_ms = positive_f64("timing.deadline_ms", doc.get("timing.deadline_ms", t0.deadline_ms())?)?;
    let initial =
        at_least("timing.initial_report_slots", doc.get("timing.initial_report_slots", t0.initial_report_slots())?, 1)?;
    let round =
        at_least("timing.wakeup_round_slots", doc.get("timing.wakeup_round_slots", t0.wakeup_round_slots())?, 1)?;
    let max_rounds = doc.get("timing.max_rounds", t0.max_rounds())?;
    let timing = TimingConstants::new(slot_ms, deadline_ms, initial, round, max_rounds)
        .map_err(|e| constraint("timing.deadline_ms", e.to_string()))?;

    let policy = match doc.raw("policy.kind").unwrap_or(s0.policy.as_str()) {
        "benchmark" => PolicyKind::Benchmark,
        "intelligent" => PolicyKind::Intelligent,
        other => return Err(constraint("policy.kind", format!("expected benchmark or intelligent, got `{other}`"))),
    };
    let k_req = at_least("policy.k_req", doc.get("policy.k_req", s0.k_req)?, 1)?;
    let knn_k = at_least("policy.knn_k", doc.get("policy.knn_k", s0.knn_k)?, 1)?;
    let knn_window = at_least("policy.knn_window", doc.get("policy.knn_window", s0.knn_window)?, knn_k)?;
    let candidate_factor =
        at_least("policy.candidate_factor", doc.get("policy.candidate_factor", s0.candidate_factor)?, 1)?;
    let conserve = duty(
        "policy.conserve_active_slots",
        "policy.conserve_period_slots",
        doc.get("policy.conserve_active_slots", s0.conserve_duty.active_slots())?,
        doc.get("policy.conserve_period_slots", s0.conserve_duty.period_slots())?,
    )?;
    let conserve_below: f64 = doc.get("policy.conserve_below", s0.conserve_below)?;
    let resume_above: f64 = doc.get("policy.resume_above", s0.resume_above)?;
    if !conserve_below.is_finite() {
        return Err(constraint("policy.conserve_below", "must be finite"));
    }
    if !(resume_above.is_finite() && resume_above >= conserve_below) {
        return Err(constraint(
            "policy.resume_above",
            format!("must be finite and >= policy.conserve_below ({conserve_below}), got {resume_above}"),
        ));
    }
    let control_interval =
        at_least("policy.control_interval", doc.get("policy.control_interval", s0.control_interval)?, 1)?;

    let wus_mode = match doc.raw("wus.mode").unwrap_or(s0.wus_mode.as_str()) {
        "group" => WusMode::Group,
        "dedicated" => WusMode::Dedicated,
        other => return Err(constraint("wus.mode", format!("expected group or dedicated, got `{other}`"))),
    };
    let group_size = match doc.raw("wus.group_size") {
        None | Some("auto") => None,
        Some(_) => Some(at_least("wus.group_size", doc.get::<usize>("wus.group_size", 0)?, 1)?),
    };

    let p_event = unit_f64("event.p_event", doc.get("event.p_event", s0.p_event)?)?;
    let epicenter = match doc.raw("event.epicenter") {
        None | Some("random") => None,
        Some(v) => {
            let parts: Vec<&str> = v.split(',').map(str::trim).collect();
            let xy: Option<Vec<f64>> = parts.iter().map(|p| p.parse().ok()).collect();
            match xy.as_deref() {
                Some(&[x, y]) if arena.contains(&Point::new(x, y)) => Some(Point::new(x, y)),
                Some(&[_, _]) => return Err(constraint("event.epicenter", format!("`{v}` lies outside the arena"))),
                _ => return Err(constraint("event.epicenter", format!("expected `random` or `x, y`, got `{v}`"))),
            }
        }
    };

    let horizon = doc.get("sim.horizon", s0.horizon)?;
    if horizon <= timing.deadline_slots() {
        return Err(constraint(
            "sim.horizon",
            format!("must exceed the deadline of {} slots, got {horizon}", timing.deadline_slots()),
        ));
    }
    let warmup: u64 = doc.get("sim.warmup", s0.warmup)?;
    if warmup >= horizon {
        return Err(constraint("sim.warmup", format!("must be below sim.horizon ({horizon}), got {warmup}")));
    }
    let seed = doc.get("sim.seed", s0.seed)?;
    let replications = at_least("sim.replications", doc.get("sim.replications", s0.replications)?, 1)?;
    let first_replication = doc.get("sim.first_replication", s0.first_replication)?;

    let n_values = match doc.raw("sweep.n_values") {
        None => d.n_values.clone(),
        Some(v) => parse_n_values(v).map_err(|m| constraint("sweep.n_values", m))?,
    };
    let output_path = doc.raw("output.path").filter(|p| !p.is_empty()).map(PathBuf::from);

    let scenario = Scenario {
        arena,
        placement,
        devices,
        wur_fraction,
        energy,
        duty: nominal,
        timing,
        policy,
        wus_mode,
        group_size,
        k_req,
        knn_k,
        knn_window,
        candidate_factor,
        conserve_duty: conserve,
        conserve_below,
        resume_above,
        control_interval,
        p_event,
        epicenter,
        horizon,
        warmup,
        seed,
        replications,
        first_replication,
    };
    scenario.validate().map_err(|e| constraint("sim.first_replication", e.to_string()))?;
    Ok(ExperimentConfig { scenario, n_values, output_path })
}

/// Parses a comma-separated list of positive device counts.
pub fn parse_n_values(v: &str) -> Result<Vec<usize>, String> {
    let out: Vec<usize> = v
        .split(',')
        .map(|p| match p.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(format!("expected a comma list of positive integers, got `{v}`")),
        })
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Renders `cfg` as a document that [`parse_config`] reads back unchanged.
pub fn render_config(cfg: &ExperimentConfig) -> String {
    let s = &cfg.scenario;
    let mut out = String::new();
    let mut put = |section: &str, lines: Vec<(&str, String)>| {
        let _ = writeln!(out, "# {section}");
        for (k, v) in lines {
            let _ = writeln!(out, "{section}.{k} = {v}");
        }
        out.push('\n');
    };
    let (placement, file) = match &s.placement {
        PlacementSpec::Uniform => ("uniform", None),
        PlacementSpec::Grid => ("grid", None),
        PlacementSpec::File(p) => ("file", Some(p.display().to_string())),
    };
    let mut arena = vec![
        ("width", s.arena.width().to_string()),
        ("height", s.arena.height().to_string()),
        ("relevance_radius", s.arena.relevance_radius().to_string()),
        ("placement", placement.to_string()),
    ];
    if let Some(f) = file {
        arena.push(("placement_file", quote(&f)));
    }
    put("arena", arena);
    put(
        "devices",
        vec![
            ("count", s.devices.to_string()),
            ("wur_fraction", s.wur_fraction.to_string()),
            ("duty_active_slots", s.duty.active_slots().to_string()),
            ("duty_period_slots", s.duty.period_slots().to_string()),
        ],
    );
    put(
        "energy",
        vec![
            ("capacity", s.energy.capacity().to_string()),
            ("harvest_prob", s.energy.harvest_prob().to_string()),
            ("cost_sense", s.energy.cost_sense().to_string()),
            ("cost_tx", s.energy.cost_tx().to_string()),
            ("cost_wakeup_rx", s.energy.cost_wakeup_rx().to_string()),
        ],
    );
    put(
        "timing",
        vec![
            ("slot_ms", s.timing.slot_ms().to_string()),
            ("deadline_ms", s.timing.deadline_ms().to_string()),
            ("initial_report_slots", s.timing.initial_report_slots().to_string()),
            ("wakeup_round_slots", s.timing.wakeup_round_slots().to_string()),
            ("max_rounds", s.timing.max_rounds().to_string()),
        ],
    );
    put(
        "policy",
        vec![
            ("kind", quote(s.policy.as_str())),
            ("k_req", s.k_req.to_string()),
            ("knn_k", s.knn_k.to_string()),
            ("knn_window", s.knn_window.to_string()),
            ("candidate_factor", s.candidate_factor.to_string()),
            ("conserve_active_slots", s.conserve_duty.active_slots().to_string()),
            ("conserve_period_slots", s.conserve_duty.period_slots().to_string()),
            ("conserve_below", s.conserve_below.to_string()),
            ("resume_above", s.resume_above.to_string()),
            ("control_interval", s.control_interval.to_string()),
        ],
    );
    put(
        "wus",
        vec![
            ("mode", quote(s.wus_mode.as_str())),
            ("group_size", s.group_size.map_or("auto".to_string(), |g| g.to_string())),
        ],
    );
    put(
        "event",
        vec![
            ("p_event", s.p_event.to_string()),
            ("epicenter", s.epicenter.map_or("random".to_string(), |p| quote(&format!("{}, {}", p.x, p.y)))),
        ],
    );
    put(
        "sim",
        vec![
            ("horizon", s.horizon.to_string()),
            ("warmup", s.warmup.to_string()),
            ("seed", s.seed.to_string()),
            ("replications", s.replications.to_string()),
            ("first_replication", s.first_replication.to_string()),
        ],
    );
    put("sweep", vec![("n_values", cfg.n_values.iter().map(usize::to_string).collect::<Vec<_>>().join(", "))]);
    put(
        "output",
        vec![("path", quote(&cfg.output_path.as_ref().map(|p| p.display().to_string()).unwrap_or_default()))],
    );
    out.pop();
    out
}

/// The default configuration as a document.
pub fn dump_defaults() -> String {
    render_config(&ExperimentConfig::default())
}
