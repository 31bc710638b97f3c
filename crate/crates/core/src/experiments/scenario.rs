use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chains::{compose_chain, TemplateSet, DEFAULT_CONTROL_FRACTION};
use crate::error::{ExperimentError, ModelError, SolveError};
use crate::model::{AppCatalog, Direction, NasProcedure, NodeKind, Topology, TrafficFlow, VnfCatalog, VnfId};
use crate::problem::{ModelOptions, PlacementProblem};
use crate::solve::{Engine, ExternalSolver, SolverConfig};

/// Every random draw in this crate comes from ChaCha8 seeded with a `u64`.
pub type ScenarioRng = ChaCha8Rng;

/// Flows per NAS procedure, plus flows without signaling (`None`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowCounts(pub Vec<(Option<NasProcedure>, u32)>);

impl FlowCounts {
    /// 10 attach, 45 dedicated bearer, 5 X2 and 10 S1 handovers, 50 without signaling.
    pub fn metro_default() -> Self {
        FlowCounts(vec![
            (Some(NasProcedure::Attach), 10),
            (Some(NasProcedure::DedicatedBearer), 45),
            (Some(NasProcedure::X2Handover), 5),
            (Some(NasProcedure::S1Handover), 10),
            (None, 50),
        ])
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|(_, n)| n).sum()
    }

    fn from_map(map: &BTreeMap<String, u32>) -> Result<Self, ExperimentError> {
        let mut out = Vec::new();
        for p in NasProcedure::ALL {
            if let Some(&n) = map.get(p.as_str()) {
                out.push((Some(p), n));
            }
        }
        if let Some(&n) = map.get("none") {
            out.push((None, n));
        }
        if let Some(k) = map.keys().find(|k| k.as_str() != "none" && k.parse::<NasProcedure>().is_err()) {
            return Err(ExperimentError::Invalid(format!("unknown flow class {k}")));
        }
        Ok(FlowCounts(out))
    }

    fn to_map(&self) -> BTreeMap<String, u32> {
        self.0
            .iter()
            .map(|(p, n)| (p.map_or("none".to_owned(), |p| p.as_str().to_owned()), *n))
            .collect()
    }
}

/// Per-function replica limits; functions not listed take `default`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReplicaLimits {
    pub default: u32,
    pub per_function: BTreeMap<VnfId, u32>,
}

impl ReplicaLimits {
    pub fn uniform(r: u32) -> Self {
        ReplicaLimits { default: r, per_function: BTreeMap::new() }
    }

    pub fn with(mut self, f: VnfId, r: u32) -> Self {
        self.per_function.insert(f, r);
        self
    }

    pub fn get(&self, f: VnfId) -> u32 {
        self.per_function.get(&f).copied().unwrap_or(self.default)
    }

    pub fn apply(&self, catalog: &mut VnfCatalog) {
        for f in VnfId::REAL {
            catalog.set_replicas(f, self.get(f));
        }
    }
}

impl fmt::Display for ReplicaLimits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut by_value: BTreeMap<u32, Vec<&str>> = BTreeMap::new();
        for func in VnfId::REAL {
            let r = self.get(func);
            if r != self.default {
                by_value.entry(r).or_default().push(func.as_str());
            }
        }
        if by_value.is_empty() {
            return write!(f, "all={}", self.default);
        }
        let mut parts: Vec<String> = by_value.iter().map(|(r, fs)| format!("{}={r}", fs.join("+"))).collect();
        parts.push(format!("rest={}", self.default));
        f.write_str(&parts.join(","))
    }
}

/// Accepts `all=2`, `MME=1,rest=2`, `SGW+PGW=2,rest=1` or a bare number.
impl FromStr for ReplicaLimits {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(r) = s.trim().parse::<u32>() {
            return Ok(Self::uniform(r));
        }
        let mut default = None;
        let mut per_function = BTreeMap::new();
        for part in s.split(',') {
            let (keys, value) = part.split_once('=').ok_or_else(|| format!("expected NAME=N in {part:?}"))?;
            let r: u32 = value.trim().parse().map_err(|_| format!("bad replica count {value:?}"))?;
            for key in keys.split('+') {
                match key.trim().to_ascii_lowercase().as_str() {
                    "all" | "rest" | "others" => default = Some(r),
                    name => {
                        let f: VnfId = name.parse()?;
                        if f.is_pseudo() {
                            return Err(format!("{f} has no replicas"));
                        }
                        per_function.insert(f, r);
                    }
                }
            }
        }
        let default = match default {
            Some(d) => d,
            None if per_function.len() == VnfId::REAL.len() => 0,
            None => return Err(format!("{s:?} leaves some functions without a limit; add rest=N")),
        };
        Ok(ReplicaLimits { default, per_function })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub engine: Engine,
    /// Command template for the external engine; CBC when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver_cmd: Option<String>,
    #[serde(default = "default_time_limit")]
    pub time_limit_s: f64,
}

fn default_time_limit() -> f64 {
    crate::solve::external::DEFAULT_TIME_LIMIT_S
}

impl SolverSettings {
    /// Engine configuration; the external engine resolves its solver here.
    pub fn solver_config(&self) -> Result<SolverConfig, SolveError> {
        let mut config = SolverConfig::new(self.engine);
        if self.engine == Engine::External {
            config.external = Some(match &self.solver_cmd {
                Some(cmd) => ExternalSolver::from_template(cmd, self.time_limit_s),
                None => ExternalSolver::detect(self.time_limit_s)?,
            });
        }
        Ok(config)
    }
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { engine: Engine::External, solver_cmd: None, time_limit_s: default_time_limit() }
    }
}

/// On-disk scenario description; paths are relative to the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDoc {
    pub topology: PathBuf,
    pub templates: PathBuf,
    pub applications: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vnfs: Option<PathBuf>,
    pub total_traffic_gbps: f64,
    #[serde(default = "default_upload_share")]
    pub upload_share: f64,
    #[serde(default = "default_control_fraction")]
    pub control_fraction: f64,
    pub nas_flows: BTreeMap<String, u32>,
    #[serde(default)]
    pub replicas: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub options: ModelOptions,
}

fn default_upload_share() -> f64 {
    0.2
}

fn default_control_fraction() -> f64 {
    DEFAULT_CONTROL_FRACTION
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub topology: Topology,
    pub templates: TemplateSet,
    pub apps: AppCatalog,
    pub vnfs: VnfCatalog,
    pub total_traffic_gbps: f64,
    /// Upload share of total demand; 0.2 gives the 1:4 upload:download ratio.
    pub upload_share: f64,
    pub control_fraction: f64,
    pub flow_counts: FlowCounts,
    pub seed: u64,
    pub solver: SolverSettings,
    pub options: ModelOptions,
}

impl Scenario {
    /// The bundled 19-node metro scenario.
    pub fn metro_default() -> Self {
        let apps: AppCatalog = serde_json::from_str(include_str!("../../data/applications.json")).expect("bundled catalog");
        let vnfs: VnfCatalog = serde_json::from_str(include_str!("../../data/vnfs.json")).expect("bundled VNF specs");
        Scenario {
            topology: crate::model::default_topology(),
            templates: TemplateSet::default(),
            apps,
            vnfs,
            total_traffic_gbps: 224.0,
            upload_share: 0.2,
            control_fraction: DEFAULT_CONTROL_FRACTION,
            flow_counts: FlowCounts::metro_default(),
            seed: 1,
            solver: SolverSettings::default(),
            options: ModelOptions::default(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io { path: path.to_owned(), source })?;
        let doc: ScenarioDoc = serde_json::from_str(&text).map_err(ModelError::from)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_doc(doc, base)
    }

    pub fn from_doc(doc: ScenarioDoc, base: &Path) -> Result<Self, ExperimentError> {
        let topology = Topology::load(base.join(&doc.topology))?;
        let templates = TemplateSet::load(base.join(&doc.templates))?;
        let apps = AppCatalog::load(base.join(&doc.applications))?;
        let mut vnfs = match &doc.vnfs {
            Some(p) => VnfCatalog::load(base.join(p))?,
            None => VnfCatalog::default(),
        };
        if let Some(spec) = &doc.replicas {
            let limits: ReplicaLimits = spec.parse().map_err(ExperimentError::Invalid)?;
            limits.apply(&mut vnfs);
        }
        let scenario = Scenario {
            topology,
            templates,
            apps,
            vnfs,
            total_traffic_gbps: doc.total_traffic_gbps,
            upload_share: doc.upload_share,
            control_fraction: doc.control_fraction,
            flow_counts: FlowCounts::from_map(&doc.nas_flows)?,
            seed: doc.seed,
            solver: doc.solver,
            options: doc.options,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Scenario file referencing sibling data files with the given names.
    pub fn to_doc(&self, topology: &str, templates: &str, applications: &str, vnfs: &str) -> ScenarioDoc {
        ScenarioDoc {
            topology: topology.into(),
            templates: templates.into(),
            applications: applications.into(),
            vnfs: Some(vnfs.into()),
            total_traffic_gbps: self.total_traffic_gbps,
            upload_share: self.upload_share,
            control_fraction: self.control_fraction,
            nas_flows: self.flow_counts.to_map(),
            replicas: None,
            seed: self.seed,
            solver: self.solver.clone(),
            options: self.options.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.apps.validate(&self.topology)?;
        if !(self.control_fraction > 0.0 && self.control_fraction <= 1.0) {
            return Err(ExperimentError::Invalid(format!("control fraction {} outside (0, 1]", self.control_fraction)));
        }
        if self.topology.nodes_of_kind(NodeKind::Tap).next().is_none() {
            return Err(ExperimentError::Invalid("topology has no TAP".into()));
        }
        for (p, _) in &self.flow_counts.0 {
            self.templates.build_csc(*p)?;
        }
        Ok(())
    }

    /// Same network and catalog with one fifth of the flows (at least one per
    /// non-empty class) and total traffic scaled by the same factor, so the
    /// average flow is as large as in the full scenario.
    pub fn quick(&self) -> Self {
        let mut s = self.clone();
        s.flow_counts = FlowCounts(
            self.flow_counts
                .0
                .iter()
                .map(|&(p, n)| (p, if n == 0 { 0 } else { ((n as f64 / 5.0).round() as u32).max(1) }))
                .collect(),
        );
        s.total_traffic_gbps = self.total_traffic_gbps * s.flow_counts.total() as f64 / self.flow_counts.total().max(1) as f64;
        s
    }

    pub fn with_replicas(&self, limits: &ReplicaLimits) -> Self {
        let mut s = self.clone();
        limits.apply(&mut s.vnfs);
        s
    }

    pub fn generate_flows(&self, seed: u64) -> Result<Vec<TrafficFlow>, ExperimentError> {
        generate_flows(&self.topology, &self.apps, &self.flow_counts, self.total_traffic_gbps, self.upload_share, seed)
    }

    /// Flows for `seed` composed into chains over this scenario's network.
    pub fn instantiate(&self, seed: u64) -> Result<PlacementProblem, ExperimentError> {
        let flows = self.generate_flows(seed)?;
        self.problem_for(&flows)
    }

    pub fn problem_for(&self, flows: &[TrafficFlow]) -> Result<PlacementProblem, ExperimentError> {
        let chains = flows
            .iter()
            .map(|f| compose_chain(f, &self.apps, &self.templates, &self.topology, self.control_fraction))
            .collect::<Result<Vec<_>, _>>()?;
        let mut problem = PlacementProblem::new(self.topology.clone(), chains, self.vnfs.clone());
        problem.options = self.options.clone();
        Ok(problem)
    }
}

/// Number of flows per application: proportional to traffic share by largest
/// remainder, at least two per application with traffic so both directions exist.
fn flows_per_app(shares: &[f64], n: u32) -> Result<Vec<u32>, ExperimentError> {
    let active = shares.iter().filter(|&&s| s > 0.0).count() as u32;
    if n < 2 * active {
        return Err(ExperimentError::Invalid(format!(
            "{n} flows cannot carry {active} applications in both directions"
        )));
    }
    let quota: Vec<f64> = shares.iter().map(|s| s * n as f64).collect();
    let mut counts: Vec<u32> = shares
        .iter()
        .zip(&quota)
        .map(|(&s, &q)| if s > 0.0 { (q.floor() as u32).max(2) } else { 0 })
        .collect();
    let mut total: u32 = counts.iter().sum();
    while total > n {
        // shrink whichever application is furthest above its quota
        let k = (0..counts.len())
            .filter(|&k| counts[k] > 2)
            .max_by(|&a, &b| (counts[a] as f64 - quota[a]).total_cmp(&(counts[b] as f64 - quota[b])).then(b.cmp(&a)))
            .expect("at least one application above the minimum");
        counts[k] -= 1;
        total -= 1;
    }
    while total < n {
        let k = (0..counts.len())
            .filter(|&k| shares[k] > 0.0)
            .max_by(|&a, &b| (quota[a] - counts[a] as f64).total_cmp(&(quota[b] - counts[b] as f64)).then(b.cmp(&a)))
            .expect("at least one application");
        counts[k] += 1;
        total += 1;
    }
    Ok(counts)
}

/// Draws the traffic flows of one iteration.
///
/// Flow classes come from `counts` in order; applications are spread over
/// flows in proportion to their share and shuffled, each application's
/// traffic is split `upload_share : 1 − upload_share` between its upload and
/// download flows and divided equally within each direction, and every flow
/// starts at a uniformly drawn TAP.
pub fn generate_flows(
    topology: &Topology,
    apps: &AppCatalog,
    counts: &FlowCounts,
    total_traffic_gbps: f64,
    upload_share: f64,
    seed: u64,
) -> Result<Vec<TrafficFlow>, ExperimentError> {
    if !(total_traffic_gbps.is_finite() && total_traffic_gbps > 0.0) {
        return Err(ExperimentError::Invalid(format!("total traffic {total_traffic_gbps} must be positive")));
    }
    if !(0.0..=1.0).contains(&upload_share) {
        return Err(ExperimentError::Invalid(format!("upload share {upload_share} outside [0, 1]")));
    }
    let n = counts.total();
    if n == 0 {
        return Err(ExperimentError::Invalid("no flows requested".into()));
    }
    let taps: Vec<_> = topology.nodes_of_kind(NodeKind::Tap).collect();
    if taps.is_empty() {
        return Err(ExperimentError::Invalid("topology has no TAP".into()));
    }
    let shares: Vec<f64> = apps.apps.iter().map(|a| a.traffic_share).collect();
    let per_app = flows_per_app(&shares, n)?;

    let mut rng = ScenarioRng::seed_from_u64(seed);
    let mut app_of_slot: Vec<usize> = per_app.iter().enumerate().flat_map(|(a, &k)| std::iter::repeat_n(a, k as usize)).collect();
    app_of_slot.shuffle(&mut rng);

    let mut direction = vec![Direction::Download; n as usize];
    let mut demand = vec![0.0; n as usize];
    for (a, app) in apps.apps.iter().enumerate() {
        let mut slots: Vec<usize> = (0..n as usize).filter(|&s| app_of_slot[s] == a).collect();
        let k = slots.len();
        if k == 0 {
            continue;
        }
        let k_up = if upload_share == 0.0 {
            0
        } else if upload_share == 1.0 {
            k
        } else {
            ((k as f64 * upload_share).round() as usize).clamp(1, k - 1)
        };
        slots.shuffle(&mut rng);
        let traffic = app.traffic_share * total_traffic_gbps;
        for (rank, &s) in slots.iter().enumerate() {
            if rank < k_up {
                direction[s] = Direction::Upload;
                demand[s] = traffic * upload_share / k_up as f64;
            } else {
                demand[s] = traffic * (1.0 - upload_share) / (k - k_up) as f64;
            }
        }
    }

    let procedures = counts.0.iter().flat_map(|&(p, k)| std::iter::repeat_n(p, k as usize));
    let flows = procedures
        .enumerate()
        .map(|(s, nas)| TrafficFlow {
            id: s as u32 + 1,
            source_tap: taps[rng.gen_range(0..taps.len())],
            application: apps.apps[app_of_slot[s]].name.clone(),
            direction: direction[s],
            nas_procedure: nas,
            demand_gbps: demand[s],
            control_latency_budget_ms: nas.map_or(0.0, NasProcedure::control_latency_ms),
        })
        .collect();
    Ok(flows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn app_flow_counts_follow_shares() {
        let shares = [0.7119, 0.0456, 0.0150, 0.1330, 0.0945];
        let c = flows_per_app(&shares, 120).unwrap();
        assert_eq!(c.iter().sum::<u32>(), 120);
        assert!(c.iter().all(|&k| k >= 2));
        assert_eq!(c, vec![85, 6, 2, 16, 11]);
        assert!(flows_per_app(&shares, 9).is_err());
    }

    #[test]
    fn replica_specs_parse_and_print() {
        let r: ReplicaLimits = "MME=1,rest=2".parse().unwrap();
        assert_eq!(r.get(VnfId::Mme), 1);
        assert_eq!(r.get(VnfId::Sgw), 2);
        assert_eq!(r.to_string(), "MME=1,rest=2");
        let r: ReplicaLimits = "SGW+PGW=2,others=1".parse().unwrap();
        assert_eq!(r.get(VnfId::Pgw), 2);
        assert_eq!(r.get(VnfId::Hss), 1);
        assert_eq!(r.to_string(), "SGW+PGW=2,rest=1");
        assert_eq!("3".parse::<ReplicaLimits>().unwrap(), ReplicaLimits::uniform(3));
        assert_eq!(ReplicaLimits::uniform(2).to_string(), "all=2");
        assert!("MME=1".parse::<ReplicaLimits>().is_err());
        assert!("SRC=1,rest=2".parse::<ReplicaLimits>().is_err());
    }

    #[test]
    fn quick_scenario_keeps_flow_size() {
        let s = Scenario::metro_default().quick();
        assert_eq!(s.flow_counts.total(), 24);
        let flows = s.generate_flows(3).unwrap();
        let total: f64 = flows.iter().map(|f| f.demand_gbps).sum();
        assert!((total - 224.0 / 5.0).abs() < 1e-9);
    }
}
