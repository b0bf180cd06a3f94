//! JSON configuration for solver runs and benchmarks. Unknown keys are
//! rejected and every value is validated before any computation starts.

use serde::{Deserialize, Serialize};

use crate::als::SolveConfig;
use crate::benchmarks::default_solver;
use crate::error::{Error, Result};
use crate::galerkin::Weights;

/// Optional solver overrides; unset fields keep the caller's defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    pub d_a: Option<usize>,
    pub d_a_scaled: Option<usize>,
    pub s: Option<u32>,
    pub tol: Option<f64>,
    pub tol_rescale: Option<f64>,
    pub max_sweeps: Option<usize>,
    pub rank: Option<usize>,
    pub lambda: Option<f64>,
    pub lambda_p: Option<f64>,
    pub seed: Option<u64>,
    pub round_operator: Option<f64>,
    pub max_rank: Option<usize>,
    pub rank_cap: Option<usize>,
}

impl SolverSettings {
    /// `base` with every set field replaced.
    pub fn apply(&self, base: &SolveConfig) -> Result<SolveConfig> {
        let c = SolveConfig {
            d_a: self.d_a.unwrap_or(base.d_a),
            d_a_scaled: self.d_a_scaled.or(base.d_a_scaled),
            s: self.s.unwrap_or(base.s),
            tol: self.tol.unwrap_or(base.tol),
            tol_rescale: self.tol_rescale.unwrap_or(base.tol_rescale),
            max_sweeps: self.max_sweeps.unwrap_or(base.max_sweeps),
            rank: self.rank.or(base.rank),
            weights: Weights {
                lambda: self.lambda.unwrap_or(base.weights.lambda),
                lambda_p: self.lambda_p.unwrap_or(base.weights.lambda_p),
            },
            seed: self.seed.unwrap_or(base.seed),
            round_operator: self.round_operator.or(base.round_operator),
            max_rank: self.max_rank.or(base.max_rank),
            rank_cap: self.rank_cap.unwrap_or(base.rank_cap),
        };
        if c.s > 30 {
            return Err(Error::InvalidArgument("s must be at most 30".into()));
        }
        c.validate()?;
        Ok(c)
    }
}

/// Input of the `exp` command.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// TT file with the exponent.
    pub input: Option<String>,
    /// Destination of the result TT.
    pub output: Option<String>,
    /// Destination of the JSON report (stdout when unset).
    pub report: Option<String>,
    /// Whether mode 0 of the exponent indexes spatial points.
    #[serde(default)]
    pub spatial: bool,
    pub y0: Option<Vec<f64>>,
    #[serde(default)]
    pub solver: SolverSettings,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(y) = &self.y0 {
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("y0 must be finite".into()));
            }
        }
        self.solver.apply(&SolveConfig::default()).map(|_| ())
    }
}

pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    let c: RunConfig = serde_json::from_str(text)?;
    c.validate()?;
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkName {
    KlFourier,
    KlGaussian,
    GaussianDensity,
    Bayes,
}

impl BenchmarkName {
    pub const ALL: [&'static str; 4] = ["kl_fourier", "kl_gaussian", "gaussian_density", "bayes"];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkName::KlFourier => "kl_fourier",
            BenchmarkName::KlGaussian => "kl_gaussian",
            BenchmarkName::GaussianDensity => "gaussian_density",
            BenchmarkName::Bayes => "bayes",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    #[default]
    Square,
    LShape,
}

/// Benchmark description. Parameters that do not apply to the chosen
/// benchmark are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub benchmark: BenchmarkName,
    /// Number of stochastic parameters.
    pub m: Option<usize>,
    /// Decay of the Fourier modes.
    pub sigma: Option<f64>,
    /// Grid cells per side.
    pub grid: Option<usize>,
    pub domain: Option<Domain>,
    /// Kernel scale.
    pub c: Option<f64>,
    /// Squared covariance length.
    pub ell2: Option<f64>,
    /// Reference number of modes for the truncation error.
    pub m_hat: Option<usize>,
    /// Correlation scale.
    pub mu: Option<f64>,
    pub observations: Option<usize>,
    pub noise: Option<f64>,
    pub forward_scale: Option<f64>,
    pub forward_seed: Option<u64>,
    #[serde(default)]
    pub solver: SolverSettings,
    pub n_mc: Option<usize>,
    pub seed: Option<u64>,
}

impl BenchmarkConfig {
    pub fn new(benchmark: BenchmarkName) -> Self {
        BenchmarkConfig {
            benchmark,
            m: None,
            sigma: None,
            grid: None,
            domain: None,
            c: None,
            ell2: None,
            m_hat: None,
            mu: None,
            observations: None,
            noise: None,
            forward_scale: None,
            forward_seed: None,
            solver: SolverSettings::default(),
            n_mc: None,
            seed: None,
        }
    }

    fn set_keys(&self) -> Vec<&'static str> {
        let mut k = Vec::new();
        let pairs: [(&'static str, bool); 12] = [
            ("m", self.m.is_some()),
            ("sigma", self.sigma.is_some()),
            ("grid", self.grid.is_some()),
            ("domain", self.domain.is_some()),
            ("c", self.c.is_some()),
            ("ell2", self.ell2.is_some()),
            ("m_hat", self.m_hat.is_some()),
            ("mu", self.mu.is_some()),
            ("observations", self.observations.is_some()),
            ("noise", self.noise.is_some()),
            ("forward_scale", self.forward_scale.is_some()),
            ("forward_seed", self.forward_seed.is_some()),
        ];
        for (name, set) in pairs {
            if set {
                k.push(name);
            }
        }
        k
    }

    fn allowed(&self) -> &'static [&'static str] {
        match self.benchmark {
            BenchmarkName::KlFourier => &["m", "sigma", "grid", "domain"],
            BenchmarkName::KlGaussian => &["m", "grid", "domain", "c", "ell2", "m_hat"],
            BenchmarkName::GaussianDensity => &["m", "mu"],
            BenchmarkName::Bayes => &["m", "observations", "noise", "forward_scale", "forward_seed"],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for key in self.set_keys() {
            if !self.allowed().contains(&key) {
                return Err(Error::InvalidArgument(format!(
                    "`{key}` does not apply to benchmark `{}`",
                    self.benchmark.as_str()
                )));
            }
        }
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => {
                Err(Error::InvalidArgument(format!("`{name}` must be positive and finite")))
            }
            _ => Ok(()),
        };
        positive("c", self.c)?;
        positive("ell2", self.ell2)?;
        positive("noise", self.noise)?;
        positive("forward_scale", self.forward_scale)?;
        if let Some(s) = self.sigma {
            if !(s > 1.0 && s.is_finite()) {
                return Err(Error::InvalidArgument("`sigma` must exceed 1".into()));
            }
        }
        if let Some(mu) = self.mu {
            if !(mu > 0.0 && mu <= 1.0) {
                return Err(Error::InvalidArgument("`mu` must lie in (0, 1]".into()));
            }
        }
        let nonzero = |name: &str, v: Option<usize>, max: usize| match v {
            Some(x) if x == 0 || x > max => Err(Error::InvalidArgument(format!("`{name}` must lie in 1..={max}"))),
            _ => Ok(()),
        };
        nonzero("m", self.m, 200)?;
        nonzero("grid", self.grid, 200)?;
        nonzero("m_hat", self.m_hat, 10_000)?;
        nonzero("observations", self.observations, 10_000)?;
        nonzero("n_mc", self.n_mc, 10_000_000)?;
        self.solver.apply(&default_solver(self.benchmark)).map(|_| ())
    }
}

pub fn parse_benchmark_config(text: &str) -> Result<BenchmarkConfig> {
    let c: BenchmarkConfig = serde_json::from_str(text)?;
    c.validate()?;
    Ok(c)
}
