//! Performance-noise families `H_μ` and type distributions `F`.

use std::fmt;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde_json::{json, Value};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use super::ModelError;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Smallest mean the exponential family accepts; lower fitness is floored here.
pub const MIN_EXPONENTIAL_MEAN: f64 = 1e-9;

pub(crate) fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

pub(crate) fn std_normal_quantile(u: f64) -> f64 {
    if u <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if u >= 1.0 {
        return f64::INFINITY;
    }
    Normal::standard().inverse_cdf(u)
}

/// Uniform draw on the open interval (0, 1).
pub(crate) fn open_unit(rng: &mut dyn RngCore) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// A location-indexed family of performance distributions with mean `μ`.
pub trait NoiseFamily: fmt::Debug + Send + Sync {
    fn kind(&self) -> &'static str;

    fn cdf(&self, s: f64, mean: f64) -> f64;

    fn pdf(&self, s: f64, mean: f64) -> f64;

    fn quantile(&self, u: f64, mean: f64) -> f64;

    fn sample(&self, rng: &mut dyn RngCore, mean: f64) -> f64 {
        self.quantile(open_unit(rng), mean)
    }

    /// `sup_s |∂H_μ(s)/∂μ|`; bounds the slope of the contest gain.
    fn mean_sensitivity(&self, mean: f64) -> f64;

    /// `∂Q_μ(u)/∂μ` for the quantile function `Q_μ = H_μ⁻¹`.
    fn quantile_mean_derivative(&self, u: f64, mean: f64) -> f64 {
        let h = 1e-6 * mean.abs().max(1.0);
        (self.quantile(u, mean + h) - self.quantile(u, mean - h)) / (2.0 * h)
    }

    /// Whether the support is the whole real line rather than `ℝ₊`.
    fn full_line_support(&self) -> bool;

    fn params(&self) -> Value;
}

#[derive(Debug, Clone, Copy)]
pub struct NormalNoise {
    sigma: f64,
}

impl NormalNoise {
    pub fn new(sigma: f64) -> Result<Self, ModelError> {
        positive("noise/normal", "sigma", sigma)?;
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl NoiseFamily for NormalNoise {
    fn kind(&self) -> &'static str {
        "normal"
    }

    fn cdf(&self, s: f64, mean: f64) -> f64 {
        std_normal_cdf((s - mean) / self.sigma)
    }

    fn pdf(&self, s: f64, mean: f64) -> f64 {
        let z = (s - mean) / self.sigma;
        INV_SQRT_2PI * (-0.5 * z * z).exp() / self.sigma
    }

    fn quantile(&self, u: f64, mean: f64) -> f64 {
        mean + self.sigma * std_normal_quantile(u)
    }

    fn sample(&self, rng: &mut dyn RngCore, mean: f64) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        mean + self.sigma * z
    }

    fn mean_sensitivity(&self, _mean: f64) -> f64 {
        INV_SQRT_2PI / self.sigma
    }

    fn quantile_mean_derivative(&self, _u: f64, _mean: f64) -> f64 {
        1.0
    }

    fn full_line_support(&self) -> bool {
        true
    }

    fn params(&self) -> Value {
        json!({ "kind": "normal", "sigma": self.sigma })
    }
}

/// Gumbel (maximum) family shifted so that its mean is `μ`.
#[derive(Debug, Clone, Copy)]
pub struct GumbelNoise {
    scale: f64,
}

impl GumbelNoise {
    pub fn new(scale: f64) -> Result<Self, ModelError> {
        positive("noise/gumbel", "scale", scale)?;
        Ok(Self { scale })
    }

    fn location(&self, mean: f64) -> f64 {
        mean - EULER_GAMMA * self.scale
    }
}

impl NoiseFamily for GumbelNoise {
    fn kind(&self) -> &'static str {
        "gumbel"
    }

    fn cdf(&self, s: f64, mean: f64) -> f64 {
        let z = (s - self.location(mean)) / self.scale;
        (-(-z).exp()).exp()
    }

    fn pdf(&self, s: f64, mean: f64) -> f64 {
        let z = (s - self.location(mean)) / self.scale;
        let t = (-z).exp();
        if !t.is_finite() {
            return 0.0;
        }
        t * (-t).exp() / self.scale
    }

    fn quantile(&self, u: f64, mean: f64) -> f64 {
        if u <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if u >= 1.0 {
            return f64::INFINITY;
        }
        self.location(mean) - self.scale * (-u.ln()).ln()
    }

    fn mean_sensitivity(&self, _mean: f64) -> f64 {
        (-1.0f64).exp() / self.scale
    }

    fn quantile_mean_derivative(&self, _u: f64, _mean: f64) -> f64 {
        1.0
    }

    fn full_line_support(&self) -> bool {
        true
    }

    fn params(&self) -> Value {
        json!({ "kind": "gumbel", "scale": self.scale })
    }
}

/// Exponential family with mean `μ` (scale family on `ℝ₊`).
#[derive(Debug, Clone, Copy, Default)]
pub struct ExponentialNoise;

impl ExponentialNoise {
    fn scale(mean: f64) -> f64 {
        mean.max(MIN_EXPONENTIAL_MEAN)
    }
}

impl NoiseFamily for ExponentialNoise {
    fn kind(&self) -> &'static str {
        "exponential"
    }

    fn cdf(&self, s: f64, mean: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else {
            -(-s / Self::scale(mean)).exp_m1()
        }
    }

    fn pdf(&self, s: f64, mean: f64) -> f64 {
        if s < 0.0 {
            0.0
        } else {
            let m = Self::scale(mean);
            (-s / m).exp() / m
        }
    }

    fn quantile(&self, u: f64, mean: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return f64::INFINITY;
        }
        -Self::scale(mean) * (-u).ln_1p()
    }

    fn mean_sensitivity(&self, mean: f64) -> f64 {
        (-1.0f64).exp() / Self::scale(mean)
    }

    fn quantile_mean_derivative(&self, u: f64, mean: f64) -> f64 {
        if mean < MIN_EXPONENTIAL_MEAN || u <= 0.0 {
            0.0
        } else {
            -(-u).ln_1p()
        }
    }

    fn full_line_support(&self) -> bool {
        false
    }

    fn params(&self) -> Value {
        json!({ "kind": "exponential" })
    }
}

/// Distribution `F` of private types.
pub trait TypeDistribution: fmt::Debug + Send + Sync {
    fn kind(&self) -> &'static str;

    /// `[θ̲, θ̄]`.
    fn support(&self) -> (f64, f64);

    fn cdf(&self, theta: f64) -> f64;

    /// Density; zero for purely atomic distributions.
    fn pdf(&self, theta: f64) -> f64;

    fn sample(&self, rng: &mut dyn RngCore) -> f64;

    /// Atoms and their masses for discrete distributions, `None` otherwise.
    fn atoms(&self) -> Option<&[(f64, f64)]> {
        None
    }

    fn params(&self) -> Value;
}

#[derive(Debug, Clone, Copy)]
pub struct UniformTypes {
    lower: f64,
    upper: f64,
}

impl UniformTypes {
    pub fn new(lower: f64, upper: f64) -> Result<Self, ModelError> {
        check_interval("types/uniform", lower, upper)?;
        Ok(Self { lower, upper })
    }
}

impl TypeDistribution for UniformTypes {
    fn kind(&self) -> &'static str {
        "uniform"
    }

    fn support(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    fn cdf(&self, theta: f64) -> f64 {
        ((theta - self.lower) / (self.upper - self.lower)).clamp(0.0, 1.0)
    }

    fn pdf(&self, theta: f64) -> f64 {
        if theta < self.lower || theta > self.upper {
            0.0
        } else {
            1.0 / (self.upper - self.lower)
        }
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.random();
        self.lower + u * (self.upper - self.lower)
    }

    fn params(&self) -> Value {
        json!({ "kind": "uniform", "lower": self.lower, "upper": self.upper })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TruncatedNormalTypes {
    mean: f64,
    sd: f64,
    lower: f64,
    upper: f64,
    cdf_lower: f64,
    mass: f64,
}

impl TruncatedNormalTypes {
    pub fn new(mean: f64, sd: f64, lower: f64, upper: f64) -> Result<Self, ModelError> {
        positive("types/truncated-normal", "sd", sd)?;
        check_interval("types/truncated-normal", lower, upper)?;
        let cdf_lower = std_normal_cdf((lower - mean) / sd);
        let mass = std_normal_cdf((upper - mean) / sd) - cdf_lower;
        if !(mass > 1e-12) {
            return Err(ModelError::InvalidParameter {
                form: "types/truncated-normal",
                detail: "truncation interval carries no probability mass".into(),
            });
        }
        Ok(Self { mean, sd, lower, upper, cdf_lower, mass })
    }
}

impl TypeDistribution for TruncatedNormalTypes {
    fn kind(&self) -> &'static str {
        "truncated-normal"
    }

    fn support(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    fn cdf(&self, theta: f64) -> f64 {
        if theta <= self.lower {
            return 0.0;
        }
        if theta >= self.upper {
            return 1.0;
        }
        ((std_normal_cdf((theta - self.mean) / self.sd) - self.cdf_lower) / self.mass).clamp(0.0, 1.0)
    }

    fn pdf(&self, theta: f64) -> f64 {
        if theta < self.lower || theta > self.upper {
            return 0.0;
        }
        let z = (theta - self.mean) / self.sd;
        INV_SQRT_2PI * (-0.5 * z * z).exp() / (self.sd * self.mass)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let u = open_unit(rng);
        let z = std_normal_quantile(self.cdf_lower + u * self.mass);
        (self.mean + self.sd * z).clamp(self.lower, self.upper)
    }

    fn params(&self) -> Value {
        json!({
            "kind": "truncated-normal",
            "mean": self.mean,
            "sd": self.sd,
            "lower": self.lower,
            "upper": self.upper,
        })
    }
}

/// Finitely many types with given masses. Violates the atomless-density
/// requirement; useful for brute-force checks against finite games.
#[derive(Debug, Clone)]
pub struct DiscreteTypes {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteTypes {
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self, ModelError> {
        let bad = |detail: &str| ModelError::InvalidParameter {
            form: "types/discrete",
            detail: detail.to_string(),
        };
        if atoms.is_empty() {
            return Err(bad("at least one atom is required"));
        }
        if atoms.iter().any(|&(t, p)| !t.is_finite() || !(p > 0.0) || !p.is_finite()) {
            return Err(bad("atoms need finite types and positive masses"));
        }
        atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
        if atoms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(bad("duplicate atom"));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        for atom in &mut atoms {
            atom.1 /= total;
        }
        Ok(Self { atoms })
    }
}

impl TypeDistribution for DiscreteTypes {
    fn kind(&self) -> &'static str {
        "discrete"
    }

    fn support(&self) -> (f64, f64) {
        (self.atoms[0].0, self.atoms[self.atoms.len() - 1].0)
    }

    fn cdf(&self, theta: f64) -> f64 {
        self.atoms.iter().filter(|a| a.0 <= theta).map(|a| a.1).sum()
    }

    fn pdf(&self, _theta: f64) -> f64 {
        0.0
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &(t, p) in &self.atoms {
            acc += p;
            if u < acc {
                return t;
            }
        }
        self.atoms[self.atoms.len() - 1].0
    }

    fn atoms(&self) -> Option<&[(f64, f64)]> {
        Some(&self.atoms)
    }

    fn params(&self) -> Value {
        let atoms: Vec<Value> = self.atoms.iter().map(|&(t, p)| json!([t, p])).collect();
        json!({ "kind": "discrete", "atoms": atoms })
    }
}

fn positive(form: &'static str, name: &str, value: f64) -> Result<(), ModelError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            form,
            detail: format!("{name} must be positive and finite, got {value}"),
        })
    }
}

fn check_interval(form: &'static str, lower: f64, upper: f64) -> Result<(), ModelError> {
    if lower.is_finite() && upper.is_finite() && lower < upper {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            form,
            detail: format!("support [{lower}, {upper}] must be a finite, non-empty interval"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn families() -> Vec<Box<dyn NoiseFamily>> {
        vec![
            Box::new(NormalNoise::new(1.0).unwrap()),
            Box::new(GumbelNoise::new(0.8).unwrap()),
            Box::new(ExponentialNoise),
        ]
    }

    #[test]
    fn sample_means_match_the_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for h in families() {
            for mean in [0.5, 2.0] {
                let n = 200_000;
                let avg = (0..n).map(|_| h.sample(&mut rng, mean)).sum::<f64>() / n as f64;
                assert!((avg - mean).abs() < 0.02, "{} mean {mean}: {avg}", h.kind());
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for h in families() {
            for u in [0.01, 0.3, 0.5, 0.9, 0.999] {
                let s = h.quantile(u, 1.5);
                assert!((h.cdf(s, 1.5) - u).abs() < 1e-9, "{}", h.kind());
            }
        }
    }

    #[test]
    fn quantile_mean_derivatives() {
        for h in families() {
            for u in [0.05, 0.5, 0.95] {
                let d = 1e-6;
                let fd = (h.quantile(u, 1.5 + d) - h.quantile(u, 1.5 - d)) / (2.0 * d);
                assert!((fd - h.quantile_mean_derivative(u, 1.5)).abs() < 1e-6, "{}", h.kind());
            }
        }
    }

    #[test]
    fn density_is_derivative_of_cdf() {
        for h in families() {
            for s in [0.4, 1.0, 2.7] {
                let d = 1e-6;
                let fd = (h.cdf(s + d, 1.2) - h.cdf(s - d, 1.2)) / (2.0 * d);
                assert!((fd - h.pdf(s, 1.2)).abs() < 1e-6, "{}", h.kind());
            }
        }
    }

    // Empirical CDFs from seeded draws respect first-order dominance in the mean.
    #[test]
    fn empirical_cdfs_are_fosd_ordered() {
        let n = 100_000;
        for h in families() {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let mut hi: Vec<f64> = (0..n).map(|_| h.sample(&mut rng, 2.0)).collect();
            let mut lo: Vec<f64> = (0..n).map(|_| h.sample(&mut rng, 1.0)).collect();
            hi.sort_by(f64::total_cmp);
            lo.sort_by(f64::total_cmp);
            for i in 0..=60 {
                let s = -3.0 + 0.25 * i as f64;
                let ecdf = |v: &[f64]| v.partition_point(|&x| x <= s) as f64 / n as f64;
                assert!(ecdf(&hi) <= ecdf(&lo) + 0.01, "{} at {s}", h.kind());
            }
        }
    }

    #[test]
    fn type_distributions_cover_their_support() {
        let dists: Vec<Box<dyn TypeDistribution>> = vec![
            Box::new(UniformTypes::new(0.0, 3.0).unwrap()),
            Box::new(TruncatedNormalTypes::new(1.0, 0.7, 0.0, 3.0).unwrap()),
            Box::new(DiscreteTypes::new(vec![(2.0, 1.0), (0.5, 3.0)]).unwrap()),
        ];
        for f in &dists {
            let (lo, hi) = f.support();
            assert_eq!(f.cdf(lo - 1e-9), 0.0);
            assert!((f.cdf(hi) - 1.0).abs() < 1e-12);
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..1000 {
                let t = f.sample(&mut rng);
                assert!((lo..=hi).contains(&t));
            }
        }
        let tn = TruncatedNormalTypes::new(1.0, 0.7, 0.0, 3.0).unwrap();
        let steps = 30_000;
        let h = 3.0 / steps as f64;
        let mass: f64 = (0..steps).map(|i| tn.pdf((i as f64 + 0.5) * h) * h).sum();
        assert!((mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(NormalNoise::new(0.0).is_err());
        assert!(UniformTypes::new(2.0, 1.0).is_err());
        assert!(DiscreteTypes::new(vec![]).is_err());
        assert!(DiscreteTypes::new(vec![(1.0, 0.5), (1.0, 0.5)]).is_err());
    }
}
