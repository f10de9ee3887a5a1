//! Projection methods behind one interface, looked up by name.

use crate::projector::{phi_run, PhgConfig, PhiStats, Polytope, ProjectorError, Provenance};
use crate::region::LinearRegion;
use crate::verify::{fme_project, VerifyError};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MethodError {
    #[error("unknown projection method {name:?} (available: {available})")]
    Unknown { name: String, available: String },
    #[error(transparent)]
    Projector(#[from] ProjectorError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

pub trait ProjectionMethod: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    /// Projects `region` onto its `w` columns within the capacity box.
    fn project(&self, region: &LinearRegion, config: &PhgConfig) -> Result<Polytope, MethodError>;
}

pub struct Phg;

impl ProjectionMethod for Phg {
    fn name(&self) -> &'static str {
        "phg"
    }

    fn description(&self) -> &'static str {
        "point-hyperplane geometry iteration"
    }

    fn project(&self, region: &LinearRegion, config: &PhgConfig) -> Result<Polytope, MethodError> {
        Ok(phi_run(region, config)?.0)
    }
}

pub struct Fme;

impl ProjectionMethod for Fme {
    fn name(&self) -> &'static str {
        "fme"
    }

    fn description(&self) -> &'static str {
        "Fourier-Motzkin elimination (small regions only)"
    }

    fn project(&self, region: &LinearRegion, _config: &PhgConfig) -> Result<Polytope, MethodError> {
        let mut p = fme_project(region)?;
        p.stats =
            Some(PhiStats { n_all: p.facets.len(), n_new: p.count(Provenance::Discovered), ..PhiStats::default() });
        Ok(p)
    }
}

pub struct MethodRegistry {
    methods: BTreeMap<&'static str, Box<dyn ProjectionMethod>>,
}

impl MethodRegistry {
    pub fn empty() -> Self {
        MethodRegistry { methods: BTreeMap::new() }
    }

    pub fn register(&mut self, method: Box<dyn ProjectionMethod>) {
        self.methods.insert(method.name(), method);
    }

    pub fn get(&self, name: &str) -> Result<&dyn ProjectionMethod, MethodError> {
        self.methods
            .get(name)
            .map(|m| m.as_ref())
            .ok_or_else(|| MethodError::Unknown { name: name.to_string(), available: self.names().join(", ") })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.methods.keys().copied().collect()
    }
}

impl Default for MethodRegistry {
    fn default() -> Self {
        let mut r = MethodRegistry::empty();
        r.register(Box::new(Phg));
        r.register(Box::new(Fme));
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::fixtures::toy_region;
    use crate::verify::regions_equivalent;

    #[test]
    fn registered_methods_agree_on_toy_region() {
        let reg = MethodRegistry::default();
        assert_eq!(reg.names(), vec!["fme", "phg"]);
        let cfg = PhgConfig::default();
        let a = reg.get("phg").unwrap().project(&toy_region(), &cfg).unwrap();
        let b = reg.get("fme").unwrap().project(&toy_region(), &cfg).unwrap();
        assert!(regions_equivalent(&a, &b, 1e-6).unwrap().equal);
        assert_eq!(b.stats.unwrap().n_new, 1);
    }

    #[test]
    fn unknown_name_lists_choices() {
        let err = MethodRegistry::default().get("simplex").err().unwrap();
        assert!(err.to_string().contains("fme, phg"), "{err}");
    }
}
