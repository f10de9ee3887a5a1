use super::RegionError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BusType {
    #[serde(rename = "slack")]
    Slack,
    #[serde(rename = "PV")]
    Pv,
    #[serde(rename = "PQ")]
    Pq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: usize,
    #[serde(rename = "type")]
    pub bus_type: BusType,
    pub p_load: f64,
    pub q_load: f64,
    pub v_min: f64,
    pub v_max: f64,
}

/// π-model line. Missing flow limits mean the direction is unconstrained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x_series: f64,
    #[serde(default)]
    pub b_charging: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp_up: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp_dn: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_last: Option<f64>,
}

/// Network data in per-unit on `base_mva`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkCase {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
}

impl NetworkCase {
    pub fn validate(&self) -> Result<(), RegionError> {
        let bad = |msg: String| Err(RegionError::Validation(msg));
        if !(self.base_mva.is_finite() && self.base_mva > 0.0) {
            return bad(format!("base_mva must be positive, got {}", self.base_mva));
        }
        if self.buses.is_empty() {
            return bad("case has no buses".into());
        }
        let mut ids = BTreeSet::new();
        for (k, b) in self.buses.iter().enumerate() {
            if !ids.insert(b.id) {
                return bad(format!("buses[{k}]: duplicate bus id {}", b.id));
            }
            if ![b.p_load, b.q_load, b.v_min, b.v_max].iter().all(|v| v.is_finite()) {
                return bad(format!("buses[{k}]: non-finite value"));
            }
            if b.v_min > b.v_max {
                return bad(format!("buses[{k}]: v_min {} > v_max {}", b.v_min, b.v_max));
            }
        }
        let slacks = self.buses.iter().filter(|b| b.bus_type == BusType::Slack).count();
        if slacks != 1 {
            return bad(format!("expected exactly one slack bus, found {slacks}"));
        }
        for (k, br) in self.branches.iter().enumerate() {
            for end in [br.from, br.to] {
                if !ids.contains(&end) {
                    return bad(format!("branches[{k}]: bus {end} does not exist"));
                }
            }
            if br.from == br.to {
                return bad(format!("branches[{k}]: from and to are both bus {}", br.from));
            }
            if ![br.r, br.x_series, br.b_charging].iter().all(|v| v.is_finite()) {
                return bad(format!("branches[{k}]: non-finite impedance"));
            }
            if br.r == 0.0 && br.x_series == 0.0 {
                return bad(format!("branches[{k}]: zero series impedance"));
            }
            if let (Some(lo), Some(hi)) = (br.p_min, br.p_max) {
                if lo > hi {
                    return bad(format!("branches[{k}]: p_min {lo} > p_max {hi}"));
                }
            }
        }
        for (k, g) in self.generators.iter().enumerate() {
            if !ids.contains(&g.bus) {
                return bad(format!("generators[{k}]: bus {} does not exist", g.bus));
            }
            if ![g.p_min, g.p_max, g.q_min, g.q_max].iter().all(|v| v.is_finite()) {
                return bad(format!("generators[{k}]: non-finite limit"));
            }
            if g.p_min > g.p_max {
                return bad(format!("generators[{k}]: p_min {} > p_max {}", g.p_min, g.p_max));
            }
            if g.q_min > g.q_max {
                return bad(format!("generators[{k}]: q_min {} > q_max {}", g.q_min, g.q_max));
            }
        }
        Ok(())
    }

    pub fn bus_position(&self, id: usize) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }
}

/// Parses and validates the canonical JSON case document.
pub fn parse_case_json(text: &str) -> Result<NetworkCase, RegionError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let case: NetworkCase = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        RegionError::Parse { location: path, message: e.into_inner().to_string() }
    })?;
    case.validate()?;
    Ok(case)
}
