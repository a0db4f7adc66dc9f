//! Game primitives: functional forms, distributions, prizes and scenarios.

mod distributions;
mod forms;
mod registry;
mod scenario;
mod validate;

pub use distributions::{
    DiscreteTypes, ExponentialNoise, GumbelNoise, NoiseFamily, NormalNoise, TruncatedNormalTypes,
    TypeDistribution, UniformTypes, MIN_EXPONENTIAL_MEAN,
};
pub use forms::{
    CostForm, LinearCost, LinearMechanization, LinearProduction, MechanizationForm,
    PowerMechanization, PowerProduction, ProductionForm, QuadraticCost, SaturatingProduction,
};
pub use registry::{FormSpec, Registry};
pub use scenario::{
    evaluate_primitive, Example, Primitive, PrimitiveValue, PrizeVector, Scenario, ScenarioConfig,
    DEFAULT_TYPE_UPPER,
};
pub use validate::{validate_assumptions, AssumptionCheck, CheckStatus, ValidationReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter for {form}: {detail}")]
    InvalidParameter { form: &'static str, detail: String },

    #[error("unknown {family} kind `{kind}` (known: {known})")]
    UnknownKind {
        family: &'static str,
        kind: String,
        known: String,
    },

    #[error("field `{field}`: {detail}")]
    Field { field: String, detail: String },

    #[error("scenario parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid prize vector: {0}")]
    Prizes(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
