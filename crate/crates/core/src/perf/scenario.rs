//! Plain-text scenario files.
//!
//! ```text
//! [scenario]
//! name = synthetic
//! clock_mhz = 200
//! stream_len = 10000
//! baseline = single
//! objective = min_power
//! optimize = pipeline
//!
//! [costs]            # cycles per iteration on a bare core, then factors
//! idea = 900
//! idea.mul = 0.5
//!
//! [area]             # mm2: base core, then per feature
//! base = 0.3
//! mul = 0.06
//!
//! [system pipeline]
//! [core]
//! features = mul
//! stage = cipher=idea iterations=10
//! ```
//!
//! `[power]` mirrors `[area]` in mW. A `[system]` may override `cycles`,
//! `area_mm2` and `power_mw`; a `[core]` may override `cycles`. Blank lines
//! and `#` comments are ignored.

use std::fmt::{self, Write as _};

use serde::Serialize;
use thiserror::Error;

use super::cost::{CoreConfig, CostTable, Feature, FeatureCosts, FeatureSet};
use super::metrics::{gain_report, GainReport, RunMetrics, DEFAULT_CLOCK_MHZ};
use super::optimize::{optimize_from, Objective};
use super::simulate::core_cycles;
use super::PerfError;
use crate::product::{CipherId, StageSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ScenarioError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError {
        line,
        message: message.into(),
    })
}

/// Featureless cycles per iteration and per-feature speed factors.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    pub base: [u64; 3],
    pub factors: [[f64; 3]; 3],
    pub area: FeatureCosts,
    pub power: FeatureCosts,
}

impl CostSpec {
    pub fn table(&self) -> Result<CostTable, PerfError> {
        CostTable::from_factors(self.base, self.factors, self.area, self.power)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoreSpec {
    pub features: FeatureSet,
    pub stages: Vec<StageSpec>,
    pub cycles: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub name: String,
    pub cycles: Option<u64>,
    pub area_mm2: Option<f64>,
    pub power_mw: Option<f64>,
    pub cores: Vec<CoreSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub clock_mhz: f64,
    pub stream_len: u64,
    pub baseline: Option<String>,
    pub objective: Objective,
    pub optimize: Option<String>,
    pub costs: Option<CostSpec>,
    pub systems: Vec<SystemSpec>,
}

/// One evaluated system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemResult {
    pub name: String,
    pub per_core_cycles: Vec<u64>,
    pub metrics: RunMetrics,
    pub gain: GainReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub stream_len: u64,
    pub baseline: String,
    pub systems: Vec<SystemResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeOutcome {
    pub system: String,
    pub objective: Objective,
    pub passes: usize,
    pub before: Vec<FeatureSet>,
    pub after: Vec<FeatureSet>,
    pub report: ScenarioReport,
    #[serde(skip)]
    pub scenario: Scenario,
}

pub const BUILTIN: [(&str, &str); 2] = [
    ("recorded", include_str!("../../scenarios/recorded.scn")),
    ("synthetic", include_str!("../../scenarios/synthetic.scn")),
];

enum Section {
    None,
    Scenario,
    Costs,
    Area,
    Power,
    System,
    Core,
}

fn number<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, ScenarioError> {
    value
        .parse()
        .or_else(|_| err(line, format!("{key}: cannot parse {value:?}")))
}

fn feature_costs_key(costs: &mut FeatureCosts, line: usize, key: &str, value: &str) -> Result<(), ScenarioError> {
    let v: f64 = number(line, key, value)?;
    if key == "base" {
        costs.base = v;
    } else {
        let f: Feature = key.parse().or_else(|e: PerfError| err(line, e.to_string()))?;
        costs.per_feature[f as usize] = v;
    }
    Ok(())
}

impl Scenario {
    /// A bundled scenario by name.
    pub fn builtin(name: &str) -> Option<Scenario> {
        BUILTIN
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Scenario::parse(text).expect("bundled scenario parses"))
    }

    pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        let mut sc = Scenario {
            name: String::from("scenario"),
            clock_mhz: DEFAULT_CLOCK_MHZ,
            stream_len: 22,
            baseline: None,
            objective: Objective::MinPower,
            optimize: None,
            costs: None,
            systems: Vec::new(),
        };
        let mut section = Section::None;
        let mut costs_line = 0;
        let mut references: Vec<(usize, String)> = Vec::new();
        let mut base: [Option<u64>; 3] = [None; 3];
        let mut factors = [[1.0f64; 3]; 3];
        let mut area: Option<FeatureCosts> = None;
        let mut power: Option<FeatureCosts> = None;
        let blank = FeatureCosts {
            base: 0.0,
            per_feature: [0.0; 3],
        };

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(header) = content.strip_prefix('[') {
                let Some(header) = header.strip_suffix(']') else {
                    return err(line, "unterminated section header");
                };
                let mut words = header.split_whitespace();
                section = match (words.next(), words.next(), words.next()) {
                    (Some("scenario"), None, _) => Section::Scenario,
                    (Some("costs"), None, _) => {
                        costs_line = line;
                        Section::Costs
                    }
                    (Some("area"), None, _) => {
                        area.get_or_insert(blank);
                        Section::Area
                    }
                    (Some("power"), None, _) => {
                        power.get_or_insert(blank);
                        Section::Power
                    }
                    (Some("system"), Some(name), None) => {
                        if sc.systems.iter().any(|s| s.name == name) {
                            return err(line, format!("duplicate system {name:?}"));
                        }
                        sc.systems.push(SystemSpec {
                            name: name.to_string(),
                            cycles: None,
                            area_mm2: None,
                            power_mw: None,
                            cores: Vec::new(),
                        });
                        Section::System
                    }
                    (Some("core"), None, _) => {
                        let Some(sys) = sc.systems.last_mut() else {
                            return err(line, "[core] outside a [system]");
                        };
                        sys.cores.push(CoreSpec {
                            features: FeatureSet::NONE,
                            stages: Vec::new(),
                            cycles: None,
                        });
                        Section::Core
                    }
                    _ => return err(line, format!("unknown section [{header}]")),
                };
                continue;
            }

            let Some((key, value)) = content.split_once('=') else {
                return err(line, "expected key = value");
            };
            let (key, value) = (key.trim(), value.trim());
            match section {
                Section::None => return err(line, "key outside any section"),
                Section::Scenario => match key {
                    "name" => sc.name = value.to_string(),
                    "clock_mhz" => {
                        sc.clock_mhz = number(line, key, value)?;
                        if !(sc.clock_mhz > 0.0 && sc.clock_mhz.is_finite()) {
                            return err(line, "clock_mhz must be positive");
                        }
                    }
                    "stream_len" => {
                        sc.stream_len = number(line, key, value)?;
                        if sc.stream_len == 0 {
                            return err(line, "stream_len must be at least 1");
                        }
                    }
                    "baseline" => {
                        sc.baseline = Some(value.to_string());
                        references.push((line, value.to_string()));
                    }
                    "objective" => sc.objective = value.parse().or_else(|e: PerfError| err(line, e.to_string()))?,
                    "optimize" => {
                        sc.optimize = Some(value.to_string());
                        references.push((line, value.to_string()));
                    }
                    _ => return err(line, format!("unknown key {key:?} in [scenario]")),
                },
                Section::Costs => {
                    let (cipher, feature) = match key.split_once('.') {
                        Some((c, f)) => (c, Some(f)),
                        None => (key, None),
                    };
                    let cipher: CipherId = cipher.parse().or_else(|e: crate::product::SpecError| err(line, e.to_string()))?;
                    match feature {
                        None => {
                            let v: u64 = number(line, key, value)?;
                            if v == 0 {
                                return err(line, "cycles must be positive");
                            }
                            base[cipher.index()] = Some(v);
                        }
                        Some(f) => {
                            let f: Feature = f.parse().or_else(|e: PerfError| err(line, e.to_string()))?;
                            let v: f64 = number(line, key, value)?;
                            if !(v > 0.0 && v.is_finite()) {
                                return err(line, "factor must be positive");
                            }
                            factors[cipher.index()][f as usize] = v;
                        }
                    }
                }
                Section::Area => feature_costs_key(area.as_mut().expect("set by header"), line, key, value)?,
                Section::Power => feature_costs_key(power.as_mut().expect("set by header"), line, key, value)?,
                Section::System => {
                    let sys = sc.systems.last_mut().expect("set by header");
                    match key {
                        "cycles" => sys.cycles = Some(number(line, key, value)?),
                        "area_mm2" => sys.area_mm2 = Some(number(line, key, value)?),
                        "power_mw" => sys.power_mw = Some(number(line, key, value)?),
                        _ => return err(line, format!("unknown key {key:?} in [system]")),
                    }
                }
                Section::Core => {
                    let core = sc
                        .systems
                        .last_mut()
                        .and_then(|s| s.cores.last_mut())
                        .expect("set by header");
                    match key {
                        "features" => {
                            core.features = value.parse().or_else(|e: PerfError| err(line, e.to_string()))?
                        }
                        "stage" => core.stages.push(
                            value
                                .parse()
                                .or_else(|e: crate::product::SpecError| err(line, e.to_string()))?,
                        ),
                        "cycles" => core.cycles = Some(number(line, key, value)?),
                        _ => return err(line, format!("unknown key {key:?} in [core]")),
                    }
                }
            }
        }

        if costs_line > 0 {
            let mut b = [0u64; 3];
            for c in CipherId::ALL {
                match base[c.index()] {
                    Some(v) => b[c.index()] = v,
                    None => return err(costs_line, format!("[costs] is missing {c}")),
                }
            }
            let (Some(area), Some(power)) = (area, power) else {
                return err(costs_line, "[costs] needs [area] and [power] sections");
            };
            let spec = CostSpec {
                base: b,
                factors,
                area,
                power,
            };
            spec.table().or_else(|e| err(costs_line, e.to_string()))?;
            sc.costs = Some(spec);
        }
        if sc.systems.is_empty() {
            return err(text.lines().count().max(1), "no [system] sections");
        }
        for (line, name) in references {
            if !sc.systems.iter().any(|s| s.name == name) {
                return err(line, format!("no system named {name:?}"));
            }
        }
        Ok(sc)
    }

    pub fn table(&self) -> Result<Option<CostTable>, PerfError> {
        self.costs.as_ref().map(CostSpec::table).transpose()
    }

    pub fn system(&self, name: &str) -> Option<&SystemSpec> {
        self.systems.iter().find(|s| s.name == name)
    }

    pub fn baseline_name(&self) -> &str {
        self.baseline.as_deref().unwrap_or(&self.systems[0].name)
    }

    /// Per-core cycles and totals for one system.
    pub fn evaluate(&self, sys: &SystemSpec) -> Result<(Vec<u64>, RunMetrics), PerfError> {
        let table = self.table()?;
        let need_table = |what: &str| PerfError::Scenario(format!("system {:?}: {what} needs a [costs] table", sys.name));

        let per_core = if sys.cores.is_empty() {
            Vec::new()
        } else if sys.cores.iter().all(|c| c.cycles.is_some()) {
            sys.cores.iter().map(|c| c.cycles.unwrap_or(0)).collect()
        } else {
            let table = table.as_ref().ok_or_else(|| need_table("cycles"))?;
            let parts: Vec<Vec<StageSpec>> = sys.cores.iter().map(|c| c.stages.clone()).collect();
            let cores: Vec<CoreConfig> = sys.cores.iter().map(|c| CoreConfig::new(c.features, table)).collect();
            if parts.iter().any(Vec::is_empty) {
                return Err(PerfError::Scenario(format!("system {:?}: a core has no stages", sys.name)));
            }
            let (_, simulated) = core_cycles(&parts, &cores, table, self.stream_len)?;
            sys.cores.iter().zip(simulated).map(|(c, s)| c.cycles.unwrap_or(s)).collect()
        };

        let cycles = match (sys.cycles, per_core.iter().max()) {
            (Some(c), _) => c,
            (None, Some(&m)) => m,
            (None, None) => {
                return Err(PerfError::Scenario(format!("system {:?}: no cycles and no cores", sys.name)))
            }
        };
        let summed = |costs: fn(&CostTable) -> &FeatureCosts, what: &str| -> Result<f64, PerfError> {
            if sys.cores.is_empty() {
                return Err(PerfError::Scenario(format!("system {:?}: no {what}", sys.name)));
            }
            let table = table.as_ref().ok_or_else(|| need_table(what))?;
            Ok(sys.cores.iter().map(|c| costs(table).total(c.features)).sum())
        };
        let area = match sys.area_mm2 {
            Some(a) => a,
            None => summed(|t| &t.area, "area_mm2")?,
        };
        let power = match sys.power_mw {
            Some(p) => p,
            None => summed(|t| &t.power, "power_mw")?,
        };
        Ok((per_core, RunMetrics::new(cycles, self.clock_mhz, area, power)?))
    }

    /// Every system, with gains against the baseline.
    pub fn simulate(&self) -> Result<ScenarioReport, PerfError> {
        let base_sys = self.system(self.baseline_name()).expect("checked at parse time");
        let (_, base) = self.evaluate(base_sys)?;
        let systems = self
            .systems
            .iter()
            .map(|sys| {
                let (per_core_cycles, metrics) = self.evaluate(sys)?;
                Ok(SystemResult {
                    name: sys.name.clone(),
                    per_core_cycles,
                    gain: gain_report(&metrics, &base)?,
                    metrics,
                })
            })
            .collect::<Result<_, PerfError>>()?;
        Ok(ScenarioReport {
            scenario: self.name.clone(),
            stream_len: self.stream_len,
            baseline: self.baseline_name().to_string(),
            systems,
        })
    }

    /// Name of the system `optimize` works on: the `optimize` key, else the
    /// first system with more than one core.
    pub fn optimize_target(&self) -> Option<&str> {
        self.optimize
            .as_deref()
            .or_else(|| self.systems.iter().find(|s| s.cores.len() > 1).map(|s| s.name.as_str()))
    }

    /// Run the strengthen/prune search on the target system, starting from
    /// the features it already lists, and return the rewritten scenario.
    pub fn optimize(&self, objective: Option<Objective>) -> Result<OptimizeOutcome, PerfError> {
        let objective = objective.unwrap_or(self.objective);
        let table = self
            .table()?
            .ok_or_else(|| PerfError::Scenario("optimize needs a [costs] table".into()))?;
        let target = self
            .optimize_target()
            .ok_or_else(|| PerfError::Scenario("no multi-core system to optimize".into()))?
            .to_string();
        let sys = self.system(&target).expect("target exists");
        if sys.cores.iter().any(|c| c.cycles.is_some()) || sys.cycles.is_some() {
            return Err(PerfError::Scenario(format!(
                "system {target:?} has cycle overrides; optimize needs simulated cores"
            )));
        }
        let parts: Vec<Vec<StageSpec>> = sys.cores.iter().map(|c| c.stages.clone()).collect();
        let initial: Vec<CoreConfig> = sys
            .cores
            .iter()
            .map(|c| CoreConfig::with_clock(c.features, &table, self.clock_mhz))
            .collect();
        let result = optimize_from(&parts, &initial, &table, objective, self.stream_len)?;

        let mut scenario = self.clone();
        let out = scenario.systems.iter_mut().find(|s| s.name == target).expect("target exists");
        for (core, cfg) in out.cores.iter_mut().zip(&result.cores) {
            core.features = cfg.features;
        }
        Ok(OptimizeOutcome {
            system: target,
            objective,
            passes: result.passes,
            before: initial.iter().map(|c| c.features).collect(),
            after: result.cores.iter().map(|c| c.features).collect(),
            report: scenario.simulate()?,
            scenario,
        })
    }
}

fn write_feature_costs(out: &mut String, title: &str, c: &FeatureCosts) {
    let _ = writeln!(out, "\n[{title}]");
    let _ = writeln!(out, "base = {}", c.base);
    for f in Feature::ALL {
        let _ = writeln!(out, "{f} = {}", c.of(f));
    }
}

impl fmt::Display for Scenario {
    /// Canonical text form; parsing it gives back an equal scenario.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let _ = writeln!(out, "[scenario]");
        let _ = writeln!(out, "name = {}", self.name);
        let _ = writeln!(out, "clock_mhz = {}", self.clock_mhz);
        let _ = writeln!(out, "stream_len = {}", self.stream_len);
        if let Some(b) = &self.baseline {
            let _ = writeln!(out, "baseline = {b}");
        }
        let _ = writeln!(out, "objective = {}", self.objective);
        if let Some(o) = &self.optimize {
            let _ = writeln!(out, "optimize = {o}");
        }
        if let Some(c) = &self.costs {
            let _ = writeln!(out, "\n[costs]");
            for cipher in CipherId::ALL {
                let _ = writeln!(out, "{cipher} = {}", c.base[cipher.index()]);
                for feat in Feature::ALL {
                    let v = c.factors[cipher.index()][feat as usize];
                    if v != 1.0 {
                        let _ = writeln!(out, "{cipher}.{feat} = {v}");
                    }
                }
            }
            write_feature_costs(&mut out, "area", &c.area);
            write_feature_costs(&mut out, "power", &c.power);
        }
        for sys in &self.systems {
            let _ = writeln!(out, "\n[system {}]", sys.name);
            if let Some(v) = sys.cycles {
                let _ = writeln!(out, "cycles = {v}");
            }
            if let Some(v) = sys.area_mm2 {
                let _ = writeln!(out, "area_mm2 = {v}");
            }
            if let Some(v) = sys.power_mw {
                let _ = writeln!(out, "power_mw = {v}");
            }
            for core in &sys.cores {
                let _ = writeln!(out, "[core]");
                let _ = writeln!(out, "features = {}", core.features);
                for s in &core.stages {
                    let _ = writeln!(out, "stage = {s}");
                }
                if let Some(v) = core.cycles {
                    let _ = writeln!(out, "cycles = {v}");
                }
            }
        }
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse_and_round_trip() {
        for (name, _) in BUILTIN {
            let sc = Scenario::builtin(name).unwrap();
            let again = Scenario::parse(&sc.to_string()).unwrap();
            assert_eq!(sc, again, "{name}");
        }
    }

    #[test]
    fn recorded_gains() {
        let report = Scenario::builtin("recorded").unwrap().simulate().unwrap();
        let row = |n: &str| report.systems.iter().find(|s| s.name == n).unwrap().clone();
        let power = row("power_focused");
        assert!((power.gain.performance_gain - 4.448).abs() <= 1e-3);
        assert!((power.gain.gain_per_power_overhead - 1.664).abs() <= 1e-3);
        let area = row("area_focused");
        assert!((area.gain.gain_per_area_overhead - 0.996).abs() <= 1e-3);
        assert!((row("single").metrics.running_time_us - 33_292.78).abs() < 1e-6);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("[scenario]\nname = x\nbogus = 1\n", 3),
            ("[system a]\ncycles = 10\n[core]\nfeatures = fpu\n", 4),
            ("\n\n[wat]\n", 3),
            ("[scenario]\nclock_mhz = 0\n", 2),
            ("[system a]\ncycles = ten\n", 2),
            ("[core]\n", 1),
            ("[system a]\n[core]\nstage = cipher=des iterations=1\n", 3),
            ("[costs]\nidea = 1\n[system a]\ncycles = 1\n", 1),
            ("name = x\n", 1),
            ("[scenario]\nbaseline = b\n[system a]\ncycles = 1\n", 2),
        ];
        for (text, line) in cases {
            let e = Scenario::parse(text).unwrap_err();
            assert_eq!(e.line, line, "{text:?}: {e}");
        }
    }

    #[test]
    fn single_core_against_itself() {
        let sc = Scenario::parse("[system only]\ncycles = 5000\narea_mm2 = 1\npower_mw = 2\n").unwrap();
        let r = sc.simulate().unwrap();
        let g = r.systems[0].gain;
        assert_eq!(
            (g.performance_gain, g.gain_per_area_overhead, g.gain_per_power_overhead),
            (1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn synthetic_optimize_is_a_fixed_point() {
        let sc = Scenario::builtin("synthetic").unwrap();
        let first = sc.optimize(None).unwrap();
        let second = first.scenario.optimize(None).unwrap();
        assert_eq!(first.after, second.after);
        assert_eq!(second.before, second.after);
        assert_eq!(first.scenario, second.scenario);
        let shape: Vec<String> = first.after.iter().map(ToString::to_string).collect();
        assert_eq!(shape, ["mul", "mul", "icache8 dcache8", "icache8 dcache8", "none"]);
    }
}
