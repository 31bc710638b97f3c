use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Mobile-core functions plus the two pseudo-functions pinning a chain to its
/// source and destination nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum VnfId {
    Mme,
    Hss,
    Pcrf,
    Sgw,
    Pgw,
    Src,
    Dst,
}

impl VnfId {
    pub const REAL: [VnfId; 5] = [VnfId::Mme, VnfId::Hss, VnfId::Pcrf, VnfId::Sgw, VnfId::Pgw];

    pub fn is_pseudo(self) -> bool {
        matches!(self, VnfId::Src | VnfId::Dst)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VnfId::Mme => "MME",
            VnfId::Hss => "HSS",
            VnfId::Pcrf => "PCRF",
            VnfId::Sgw => "SGW",
            VnfId::Pgw => "PGW",
            VnfId::Src => "SRC",
            VnfId::Dst => "DST",
        }
    }
}

impl fmt::Display for VnfId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VnfId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "MME" => Ok(VnfId::Mme),
            "HSS" => Ok(VnfId::Hss),
            "PCRF" => Ok(VnfId::Pcrf),
            "SGW" => Ok(VnfId::Sgw),
            "PGW" => Ok(VnfId::Pgw),
            "SRC" => Ok(VnfId::Src),
            "DST" => Ok(VnfId::Dst),
            other => Err(format!("unknown function {other}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VnfSpec {
    pub id: VnfId,
    pub cores_per_gbps: f64,
    pub proc_latency_ms_per_gbps: f64,
    pub max_replicas: u32,
}

/// 2 cores per Gbps and 132 µs per Gbps for every real function.
pub const DEFAULT_CORES_PER_GBPS: f64 = 2.0;
pub const DEFAULT_PROC_MS_PER_GBPS: f64 = 0.132;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<VnfSpec>", try_from = "Vec<VnfSpec>")]
pub struct VnfCatalog {
    specs: BTreeMap<VnfId, VnfSpec>,
}

impl VnfCatalog {
    pub fn uniform(cores_per_gbps: f64, proc_ms_per_gbps: f64, replicas: u32) -> Self {
        let specs = VnfId::REAL
            .iter()
            .map(|&id| {
                (
                    id,
                    VnfSpec {
                        id,
                        cores_per_gbps,
                        proc_latency_ms_per_gbps: proc_ms_per_gbps,
                        max_replicas: replicas,
                    },
                )
            })
            .collect();
        VnfCatalog { specs }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.to_owned(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Pseudo-functions always resolve to a zero-cost spec.
    pub fn spec(&self, id: VnfId) -> VnfSpec {
        if id.is_pseudo() {
            return VnfSpec { id, cores_per_gbps: 0.0, proc_latency_ms_per_gbps: 0.0, max_replicas: u32::MAX };
        }
        self.specs.get(&id).cloned().unwrap_or(VnfSpec {
            id,
            cores_per_gbps: 0.0,
            proc_latency_ms_per_gbps: 0.0,
            max_replicas: 0,
        })
    }

    pub fn max_replicas(&self, id: VnfId) -> u32 {
        self.spec(id).max_replicas
    }

    pub fn set_replicas(&mut self, id: VnfId, replicas: u32) {
        if let Some(spec) = self.specs.get_mut(&id) {
            spec.max_replicas = replicas;
        }
    }

    pub fn set_all_replicas(&mut self, replicas: u32) {
        for spec in self.specs.values_mut() {
            spec.max_replicas = replicas;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &VnfSpec> {
        self.specs.values()
    }
}

impl Default for VnfCatalog {
    fn default() -> Self {
        Self::uniform(DEFAULT_CORES_PER_GBPS, DEFAULT_PROC_MS_PER_GBPS, 2)
    }
}

impl From<VnfCatalog> for Vec<VnfSpec> {
    fn from(c: VnfCatalog) -> Self {
        c.specs.into_values().collect()
    }
}

impl TryFrom<Vec<VnfSpec>> for VnfCatalog {
    type Error = ModelError;

    fn try_from(list: Vec<VnfSpec>) -> Result<Self, Self::Error> {
        let mut specs = BTreeMap::new();
        for spec in list {
            if spec.id.is_pseudo() {
                return Err(ModelError::Vnf(format!("{} is a pseudo-function", spec.id)));
            }
            if spec.cores_per_gbps < 0.0 || spec.proc_latency_ms_per_gbps < 0.0 {
                return Err(ModelError::Vnf(format!("{} has negative resource figures", spec.id)));
            }
            if specs.insert(spec.id, spec.clone()).is_some() {
                return Err(ModelError::Vnf(format!("{} listed twice", spec.id)));
            }
        }
        Ok(VnfCatalog { specs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pseudo_functions_are_free() {
        let cat = VnfCatalog::default();
        for id in [VnfId::Src, VnfId::Dst] {
            let s = cat.spec(id);
            assert_eq!(s.cores_per_gbps, 0.0);
            assert_eq!(s.proc_latency_ms_per_gbps, 0.0);
        }
        assert_eq!(cat.spec(VnfId::Sgw).cores_per_gbps, 2.0);
        assert_eq!(cat.spec(VnfId::Sgw).proc_latency_ms_per_gbps, 0.132);
    }

    #[test]
    fn catalog_json_rejects_duplicates() {
        let text = r#"[{"id":"MME","cores_per_gbps":2,"proc_latency_ms_per_gbps":0.1,"max_replicas":1},
                       {"id":"MME","cores_per_gbps":2,"proc_latency_ms_per_gbps":0.1,"max_replicas":1}]"#;
        assert!(serde_json::from_str::<VnfCatalog>(text).is_err());
        let text = r#"[{"id":"SRC","cores_per_gbps":0,"proc_latency_ms_per_gbps":0,"max_replicas":1}]"#;
        assert!(serde_json::from_str::<VnfCatalog>(text).is_err());
    }

    #[test]
    fn parses_names_case_insensitively() {
        assert_eq!("pcrf".parse::<VnfId>().unwrap(), VnfId::Pcrf);
        assert!("AMF".parse::<VnfId>().is_err());
    }
}
