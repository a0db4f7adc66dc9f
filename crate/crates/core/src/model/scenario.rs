//! Scenario configuration, the prize vector, and the four worked examples.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::distributions::{NoiseFamily, TypeDistribution};
use super::forms::{CostForm, MechanizationForm, ProductionForm};
use super::registry::{FormSpec, Registry};
use super::ModelError;

/// Upper end of the type support when a scenario does not state one.
pub const DEFAULT_TYPE_UPPER: f64 = 10.0;

/// Prizes by rank, `R_1 ≥ R_2 ≥ … ≥ R_I ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PrizeVector(Vec<f64>);

impl PrizeVector {
    pub fn new(prizes: Vec<f64>) -> Result<Self, ModelError> {
        if prizes.is_empty() {
            return Err(ModelError::Prizes("at least one rank is required".into()));
        }
        if let Some(p) = prizes.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(ModelError::Prizes(format!("prizes must be finite and non-negative, got {p}")));
        }
        if let Some(k) = prizes.windows(2).position(|w| w[0] < w[1]) {
            return Err(ModelError::Prizes(format!(
                "prizes must be non-increasing in rank, but R_{} = {} < R_{} = {}",
                k + 1,
                prizes[k],
                k + 2,
                prizes[k + 1]
            )));
        }
        Ok(Self(prizes))
    }

    pub fn zeros(players: usize) -> Self {
        Self(vec![0.0; players.max(1)])
    }

    /// Winner-take-all vector `(r, 0, …, 0)`.
    pub fn winner_take_all(players: usize, r: f64) -> Result<Self, ModelError> {
        let mut v = vec![0.0; players.max(1)];
        v[0] = r;
        Self::new(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&r| r == 0.0)
    }

    pub fn top(&self) -> f64 {
        self.0[0]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Consecutive gaps `R_k − R_{k+1}` for `k = 1, …, I − 1`.
    pub fn gaps(&self) -> Vec<f64> {
        self.0.windows(2).map(|w| w[0] - w[1]).collect()
    }

    pub fn positive_prizes(&self) -> usize {
        self.0.iter().filter(|&&r| r > 0.0).count()
    }
}

impl TryFrom<Vec<f64>> for PrizeVector {
    type Error = ModelError;

    fn try_from(v: Vec<f64>) -> Result<Self, ModelError> {
        Self::new(v)
    }
}

impl From<PrizeVector> for Vec<f64> {
    fn from(p: PrizeVector) -> Self {
        p.0
    }
}

impl fmt::Display for PrizeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|r| format!("{r}")).collect();
        write!(f, "({})", parts.join(", "))
    }
}

fn default_types() -> FormSpec {
    FormSpec::new("uniform")
        .with("lower", 0.0)
        .with("upper", DEFAULT_TYPE_UPPER)
}

fn default_noise() -> FormSpec {
    FormSpec::new("normal").with("sigma", 1.0)
}

fn default_players() -> usize {
    2
}

/// The JSON form of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub nu: FormSpec,
    pub xi: FormSpec,
    pub cost: FormSpec,
    #[serde(default = "default_types")]
    pub types: FormSpec,
    #[serde(default = "default_noise")]
    pub noise: FormSpec,
    #[serde(default = "default_players")]
    pub players: usize,
    /// Defaults to the zero vector, i.e. the single-agent baseline.
    #[serde(default)]
    pub prizes: Option<Vec<f64>>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    /// Fills in every default so the serialized form is fully explicit.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        if c.prizes.is_none() {
            c.prizes = Some(vec![0.0; c.players.max(1)]);
        }
        c
    }
}

/// A fully built game: primitives, player count and prizes.
#[derive(Clone)]
pub struct Scenario {
    config: ScenarioConfig,
    nu: Arc<dyn ProductionForm>,
    xi: Arc<dyn MechanizationForm>,
    cost: Arc<dyn CostForm>,
    types: Arc<dyn TypeDistribution>,
    noise: Arc<dyn NoiseFamily>,
    prizes: PrizeVector,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario").field("config", &self.config).finish()
    }
}

impl Scenario {
    pub fn from_config(config: &ScenarioConfig, registry: &Registry) -> Result<Self, ModelError> {
        let config = config.resolved();
        if config.players == 0 {
            return Err(ModelError::Field {
                field: "players".into(),
                detail: "at least one player is required".into(),
            });
        }
        let raw = config.prizes.clone().unwrap_or_default();
        if raw.len() != config.players {
            return Err(ModelError::Field {
                field: "prizes".into(),
                detail: format!("expected {} prizes (one per player), got {}", config.players, raw.len()),
            });
        }
        let prizes = PrizeVector::new(raw).map_err(|e| ModelError::Field {
            field: "prizes".into(),
            detail: e.to_string(),
        })?;
        let nu = registry.production(&config.nu)?;
        let xi = registry.mechanization(&config.xi)?;
        let cost = registry.cost(&config.cost)?;
        let types = registry.types(&config.types)?;
        let noise = registry.noise(&config.noise)?;
        let (lo, _) = types.support();
        if lo < nu.min_type() {
            return Err(ModelError::Field {
                field: "types".into(),
                detail: format!("support starts at {lo}, below the production form's domain"),
            });
        }
        Ok(Self {
            config,
            nu,
            xi,
            cost,
            types,
            noise,
            prizes,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Self::from_config(&ScenarioConfig::from_json(text)?, &Registry::builtin())
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Same primitives with a different prize vector; the player count follows
    /// the vector's length.
    pub fn with_prizes(&self, prizes: PrizeVector) -> Self {
        let mut s = self.clone();
        s.config.players = prizes.len();
        s.config.prizes = Some(prizes.as_slice().to_vec());
        s.prizes = prizes;
        s
    }

    pub fn with_types(&self, spec: FormSpec, registry: &Registry) -> Result<Self, ModelError> {
        let mut config = self.config.clone();
        config.types = spec;
        Self::from_config(&config, registry)
    }

    pub fn with_noise(&self, spec: FormSpec, registry: &Registry) -> Result<Self, ModelError> {
        let mut config = self.config.clone();
        config.noise = spec;
        Self::from_config(&config, registry)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn name(&self) -> &str {
        self.config.name.as_deref().unwrap_or("scenario")
    }

    pub fn nu(&self) -> &dyn ProductionForm {
        self.nu.as_ref()
    }

    pub fn xi(&self) -> &dyn MechanizationForm {
        self.xi.as_ref()
    }

    pub fn cost(&self) -> &dyn CostForm {
        self.cost.as_ref()
    }

    pub fn types(&self) -> &dyn TypeDistribution {
        self.types.as_ref()
    }

    pub fn noise(&self) -> &dyn NoiseFamily {
        self.noise.as_ref()
    }

    pub fn players(&self) -> usize {
        self.prizes.len()
    }

    pub fn prizes(&self) -> &PrizeVector {
        &self.prizes
    }

    pub fn type_support(&self) -> (f64, f64) {
        self.types.support()
    }

    /// Fitness `ν(a, θ) + ξ(b)`.
    pub fn fitness(&self, a: f64, b: f64, theta: f64) -> f64 {
        self.nu.value(a, theta) + self.xi.value(b)
    }
}

/// Which primitive to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Primitive {
    Production,
    Mechanization,
    Cost,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrimitiveValue {
    pub value: f64,
    pub derivative: f64,
    /// The derivative is `+∞` at this point (e.g. `ξ = √b` at zero).
    pub unbounded_derivative: bool,
}

/// Value and first derivative of `ν(·, θ)`, `ξ` or `c` at `x`.
pub fn evaluate_primitive(
    scenario: &Scenario,
    which: Primitive,
    x: f64,
    theta: Option<f64>,
) -> Result<PrimitiveValue, ModelError> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(ModelError::Domain(format!("effort must be finite and non-negative, got {x}")));
    }
    let (value, derivative) = match (which, theta) {
        (Primitive::Production, Some(t)) => {
            let (lo, hi) = scenario.type_support();
            if !(t >= lo && t <= hi) {
                return Err(ModelError::Domain(format!("type {t} outside the support [{lo}, {hi}]")));
            }
            (scenario.nu().value(x, t), scenario.nu().marginal(x, t))
        }
        (Primitive::Production, None) => {
            return Err(ModelError::Domain("the production form needs a type".into()))
        }
        (_, Some(_)) => {
            return Err(ModelError::Domain("only the production form takes a type".into()))
        }
        (Primitive::Mechanization, None) => (scenario.xi().value(x), scenario.xi().marginal(x)),
        (Primitive::Cost, None) => (scenario.cost().value(x), scenario.cost().marginal(x)),
    };
    Ok(PrimitiveValue {
        value,
        derivative,
        unbounded_derivative: derivative == f64::INFINITY,
    })
}

/// The four worked examples with closed-form solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Example {
    /// `μ = θa + b`, `c = ½e²`, `Θ = [0, 3]`.
    PerfectSubstitutes,
    /// `μ = θ√a + √b`, `c = e`, `Θ = [0, ∞)` truncated at the default upper bound.
    CobbDouglas,
    /// `μ = θa + √b`, `c = ½e²`, `Θ = [0, 3]`.
    ConcaveMechanization,
    /// `μ = θ(1 − e^{−a}) + b`, `c = ¼e²`, `Θ = [0, 9]`.
    Saturating,
}

impl Example {
    pub const ALL: [Example; 4] = [
        Example::PerfectSubstitutes,
        Example::CobbDouglas,
        Example::ConcaveMechanization,
        Example::Saturating,
    ];

    pub fn number(self) -> usize {
        match self {
            Example::PerfectSubstitutes => 1,
            Example::CobbDouglas => 2,
            Example::ConcaveMechanization => 3,
            Example::Saturating => 4,
        }
    }

    pub fn from_number(n: usize) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.number() == n)
    }

    /// Two players competing for a single unit prize.
    pub fn config(self) -> ScenarioConfig {
        let (nu, xi, cost, upper) = match self {
            Example::PerfectSubstitutes => (
                FormSpec::new("linear"),
                FormSpec::new("linear"),
                FormSpec::new("quadratic").with("kappa", 0.5),
                3.0,
            ),
            Example::CobbDouglas => (
                FormSpec::new("power").with("alpha", 0.5),
                FormSpec::new("power").with("alpha", 0.5),
                FormSpec::new("linear").with("kappa", 1.0),
                DEFAULT_TYPE_UPPER,
            ),
            Example::ConcaveMechanization => (
                FormSpec::new("linear"),
                FormSpec::new("power").with("alpha", 0.5),
                FormSpec::new("quadratic").with("kappa", 0.5),
                3.0,
            ),
            Example::Saturating => (
                FormSpec::new("saturating"),
                FormSpec::new("linear"),
                FormSpec::new("quadratic").with("kappa", 0.25),
                9.0,
            ),
        };
        ScenarioConfig {
            name: Some(format!("example{}", self.number())),
            nu,
            xi,
            cost,
            types: FormSpec::new("uniform").with("lower", 0.0).with("upper", upper),
            noise: default_noise(),
            players: 2,
            prizes: Some(vec![1.0, 0.0]),
        }
    }

    pub fn scenario(self) -> Scenario {
        Scenario::from_config(&self.config(), &Registry::builtin())
            .expect("built-in example configurations are valid")
    }
}
