//! Name-keyed constructors for every primitive family.
//!
//! Scenario files name a family by `kind` and pass its parameters alongside.
//! [`Registry::builtin`] knows the shipped families; callers can register more
//! before loading a scenario.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::distributions::{
    DiscreteTypes, ExponentialNoise, GumbelNoise, NoiseFamily, NormalNoise, TruncatedNormalTypes,
    TypeDistribution, UniformTypes,
};
use super::forms::{
    CostForm, LinearCost, LinearMechanization, LinearProduction, MechanizationForm,
    PowerMechanization, PowerProduction, ProductionForm, QuadraticCost, SaturatingProduction,
};
use super::ModelError;

/// A family name plus its parameters, e.g. `{"kind": "power", "alpha": 0.5}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormSpec {
    pub kind: String,
    #[serde(flatten)]
    pub params: Map<String, Value>,
}

impl FormSpec {
    pub fn new(kind: &str) -> Self {
        Self {
            kind: kind.to_string(),
            params: Map::new(),
        }
    }

    pub fn with(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.params.insert(name.to_string(), value.into());
        self
    }
}

/// Parameter reader that rejects unknown or malformed fields.
pub struct Params<'a> {
    field: &'a str,
    map: &'a Map<String, Value>,
    seen: Vec<&'static str>,
}

impl<'a> Params<'a> {
    fn new(field: &'a str, map: &'a Map<String, Value>) -> Self {
        Self {
            field,
            map,
            seen: Vec::new(),
        }
    }

    fn err(&self, name: &str, detail: String) -> ModelError {
        ModelError::Field {
            field: format!("{}.{name}", self.field),
            detail,
        }
    }

    pub fn number(&mut self, name: &'static str, default: Option<f64>) -> Result<f64, ModelError> {
        self.seen.push(name);
        match self.map.get(name) {
            Some(v) => v
                .as_f64()
                .ok_or_else(|| self.err(name, format!("expected a number, got {v}"))),
            None => default.ok_or_else(|| self.err(name, "missing required parameter".into())),
        }
    }

    pub fn value(&mut self, name: &'static str) -> Result<&'a Value, ModelError> {
        self.seen.push(name);
        self.map
            .get(name)
            .ok_or_else(|| self.err(name, "missing required parameter".into()))
    }

    fn finish(self) -> Result<(), ModelError> {
        if let Some(extra) = self.map.keys().find(|k| !self.seen.contains(&k.as_str())) {
            return Err(self.err(extra, "unknown parameter".into()));
        }
        Ok(())
    }
}

type Ctor<T> = fn(&mut Params) -> Result<Arc<T>, ModelError>;

struct Family<T: ?Sized> {
    name: &'static str,
    ctors: BTreeMap<String, Ctor<T>>,
}

impl<T: ?Sized> Family<T> {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            ctors: BTreeMap::new(),
        }
    }

    fn build(&self, field: &str, spec: &FormSpec) -> Result<Arc<T>, ModelError> {
        let ctor = self.ctors.get(&spec.kind).ok_or_else(|| ModelError::UnknownKind {
            family: self.name,
            kind: spec.kind.clone(),
            known: self.ctors.keys().cloned().collect::<Vec<_>>().join(", "),
        })?;
        let mut params = Params::new(field, &spec.params);
        let built = ctor(&mut params).map_err(|e| match e {
            ModelError::InvalidParameter { detail, .. } => ModelError::Field {
                field: field.to_string(),
                detail,
            },
            other => other,
        })?;
        params.finish()?;
        Ok(built)
    }
}

pub struct Registry {
    production: Family<dyn ProductionForm>,
    mechanization: Family<dyn MechanizationForm>,
    cost: Family<dyn CostForm>,
    types: Family<dyn TypeDistribution>,
    noise: Family<dyn NoiseFamily>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            production: Family::new("production"),
            mechanization: Family::new("mechanization"),
            cost: Family::new("cost"),
            types: Family::new("type distribution"),
            noise: Family::new("noise"),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register_production("linear", |_| Ok(Arc::new(LinearProduction)));
        r.register_production("power", |p| {
            Ok(Arc::new(PowerProduction::new(p.number("alpha", None)?)?))
        });
        r.register_production("saturating", |_| Ok(Arc::new(SaturatingProduction)));

        r.register_mechanization("linear", |_| Ok(Arc::new(LinearMechanization)));
        r.register_mechanization("power", |p| {
            Ok(Arc::new(PowerMechanization::new(p.number("alpha", None)?)?))
        });

        r.register_cost("linear", |p| {
            Ok(Arc::new(LinearCost::new(p.number("kappa", Some(1.0))?)?))
        });
        r.register_cost("quadratic", |p| {
            Ok(Arc::new(QuadraticCost::new(p.number("kappa", Some(0.5))?)?))
        });

        r.register_types("uniform", |p| {
            let lower = p.number("lower", Some(0.0))?;
            let upper = p.number("upper", Some(super::DEFAULT_TYPE_UPPER))?;
            Ok(Arc::new(UniformTypes::new(lower, upper)?))
        });
        r.register_types("truncated-normal", |p| {
            let mean = p.number("mean", None)?;
            let sd = p.number("sd", None)?;
            let lower = p.number("lower", Some(0.0))?;
            let upper = p.number("upper", Some(super::DEFAULT_TYPE_UPPER))?;
            Ok(Arc::new(TruncatedNormalTypes::new(mean, sd, lower, upper)?))
        });
        r.register_types("discrete", |p| {
            let raw = p.value("atoms")?;
            let atoms = serde_json::from_value::<Vec<(f64, f64)>>(raw.clone()).map_err(|e| {
                ModelError::InvalidParameter {
                    form: "types/discrete",
                    detail: format!("atoms must be [type, mass] pairs: {e}"),
                }
            })?;
            Ok(Arc::new(DiscreteTypes::new(atoms)?))
        });

        r.register_noise("normal", |p| {
            Ok(Arc::new(NormalNoise::new(p.number("sigma", Some(1.0))?)?))
        });
        r.register_noise("gumbel", |p| {
            Ok(Arc::new(GumbelNoise::new(p.number("scale", Some(1.0))?)?))
        });
        r.register_noise("exponential", |_| Ok(Arc::new(ExponentialNoise)));
        r
    }

    pub fn register_production(&mut self, kind: &str, ctor: Ctor<dyn ProductionForm>) {
        self.production.ctors.insert(kind.to_string(), ctor);
    }

    pub fn register_mechanization(&mut self, kind: &str, ctor: Ctor<dyn MechanizationForm>) {
        self.mechanization.ctors.insert(kind.to_string(), ctor);
    }

    pub fn register_cost(&mut self, kind: &str, ctor: Ctor<dyn CostForm>) {
        self.cost.ctors.insert(kind.to_string(), ctor);
    }

    pub fn register_types(&mut self, kind: &str, ctor: Ctor<dyn TypeDistribution>) {
        self.types.ctors.insert(kind.to_string(), ctor);
    }

    pub fn register_noise(&mut self, kind: &str, ctor: Ctor<dyn NoiseFamily>) {
        self.noise.ctors.insert(kind.to_string(), ctor);
    }

    pub fn production(&self, spec: &FormSpec) -> Result<Arc<dyn ProductionForm>, ModelError> {
        self.production.build("nu", spec)
    }

    pub fn mechanization(&self, spec: &FormSpec) -> Result<Arc<dyn MechanizationForm>, ModelError> {
        self.mechanization.build("xi", spec)
    }

    pub fn cost(&self, spec: &FormSpec) -> Result<Arc<dyn CostForm>, ModelError> {
        self.cost.build("cost", spec)
    }

    pub fn types(&self, spec: &FormSpec) -> Result<Arc<dyn TypeDistribution>, ModelError> {
        self.types.build("types", spec)
    }

    pub fn noise(&self, spec: &FormSpec) -> Result<Arc<dyn NoiseFamily>, ModelError> {
        self.noise.build("noise", spec)
    }

    /// Registered kinds per family, for usage text and schema checks.
    pub fn kinds(&self) -> Vec<(&'static str, Vec<String>)> {
        fn names<T: ?Sized>(f: &Family<T>) -> (&'static str, Vec<String>) {
            (f.name, f.ctors.keys().cloned().collect())
        }
        vec![
            names(&self.production),
            names(&self.mechanization),
            names(&self.cost),
            names(&self.types),
            names(&self.noise),
        ]
    }
}
