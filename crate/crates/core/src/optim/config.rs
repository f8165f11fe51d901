use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::linesearch::WolfeParams;
use crate::numdiff::FdSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum OptimizerFamily {
    #[serde(rename = "VECHGRAD")]
    VecHGrad,
    #[serde(rename = "SGD")]
    Sgd,
    #[serde(rename = "NAG")]
    Nag,
    #[serde(rename = "ADAM")]
    Adam,
    #[serde(rename = "RMSPROP")]
    RmsProp,
    #[serde(rename = "SAGA")]
    Saga,
    #[serde(rename = "ADAGRAD")]
    AdaGrad,
    #[serde(rename = "NCG")]
    Ncg,
    #[serde(rename = "LBFGS")]
    Lbfgs,
    #[serde(rename = "ALS")]
    Als,
}

impl OptimizerFamily {
    pub const ALL: [OptimizerFamily; 10] = [
        OptimizerFamily::Als,
        OptimizerFamily::Sgd,
        OptimizerFamily::Nag,
        OptimizerFamily::Adam,
        OptimizerFamily::RmsProp,
        OptimizerFamily::Saga,
        OptimizerFamily::AdaGrad,
        OptimizerFamily::Ncg,
        OptimizerFamily::Lbfgs,
        OptimizerFamily::VecHGrad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerFamily::VecHGrad => "VecHGrad",
            OptimizerFamily::Sgd => "SGD",
            OptimizerFamily::Nag => "NAG",
            OptimizerFamily::Adam => "Adam",
            OptimizerFamily::RmsProp => "RMSProp",
            OptimizerFamily::Saga => "SAGA",
            OptimizerFamily::AdaGrad => "AdaGrad",
            OptimizerFamily::Ncg => "NCG",
            OptimizerFamily::Lbfgs => "L-BFGS",
            OptimizerFamily::Als => "ALS",
        }
    }

    /// First-order update rules driven by a fixed learning rate.
    pub fn is_first_order(self) -> bool {
        matches!(
            self,
            OptimizerFamily::Sgd
                | OptimizerFamily::Nag
                | OptimizerFamily::Adam
                | OptimizerFamily::RmsProp
                | OptimizerFamily::Saga
                | OptimizerFamily::AdaGrad
        )
    }

    /// Methods that step along a line-searched descent direction.
    pub fn uses_line_search(self) -> bool {
        matches!(
            self,
            OptimizerFamily::VecHGrad | OptimizerFamily::Ncg | OptimizerFamily::Lbfgs
        )
    }
}

impl fmt::Display for OptimizerFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_uppercase();
        Ok(match key.as_str() {
            "VECHGRAD" => OptimizerFamily::VecHGrad,
            "SGD" => OptimizerFamily::Sgd,
            "NAG" => OptimizerFamily::Nag,
            "ADAM" => OptimizerFamily::Adam,
            "RMSPROP" => OptimizerFamily::RmsProp,
            "SAGA" => OptimizerFamily::Saga,
            "ADAGRAD" => OptimizerFamily::AdaGrad,
            "NCG" => OptimizerFamily::Ncg,
            "LBFGS" => OptimizerFamily::Lbfgs,
            "ALS" => OptimizerFamily::Als,
            _ => return Err(Error::Config(format!("unknown optimizer '{s}'"))),
        })
    }
}

impl<'de> Deserialize<'de> for OptimizerFamily {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Optimizer family plus every hyperparameter any family reads.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub family: OptimizerFamily,
    /// Learning rate of the first-order rules.
    pub lr: f64,
    /// NAG momentum and RMSProp decay.
    pub momentum: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Denominator guard of Adam, RMSProp and AdaGrad.
    pub epsilon: f64,
    /// L-BFGS memory.
    pub history: usize,
    pub cg_max_iter: usize,
    pub cg_sigma: f64,
    /// Stop once the loss is at or below this value.
    pub eps1: f64,
    /// Stop once the gradient norm is at or below this value (line-search methods).
    pub eps2: f64,
    pub max_iter: usize,
    /// Stop when a step decreases the loss by no more than this; negative disables.
    pub decrease_tol: f64,
    pub wolfe: WolfeParams,
    pub fd: FdSettings,
    /// Seed for SAGA's component sampling.
    pub seed: u64,
}

pub const GRADIENT_MAX_ITER: usize = 10_000;
pub const HESSIAN_MAX_ITER: usize = 1_000;
pub const GRADIENT_FREE_MAX_ITER: usize = 100_000;

impl OptimizerConfig {
    pub fn new(family: OptimizerFamily) -> Self {
        use OptimizerFamily::*;
        let mut cfg = Self {
            family,
            lr: 1e-4,
            momentum: 0.9,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            history: 10,
            cg_max_iter: 20,
            cg_sigma: 0.5,
            eps1: 1.0,
            eps2: 1e-6,
            max_iter: GRADIENT_MAX_ITER,
            decrease_tol: 1e-3,
            wolfe: WolfeParams::newton(),
            fd: FdSettings::default(),
            seed: 0,
        };
        match family {
            Sgd | Nag | Saga => cfg.lr = 1e-4,
            Adam | RmsProp => cfg.lr = 1e-3,
            AdaGrad => cfg.lr = 1e-2,
            Ncg => cfg.wolfe = WolfeParams::ncg(),
            VecHGrad | Lbfgs => cfg.max_iter = HESSIAN_MAX_ITER,
            Als => cfg.max_iter = GRADIENT_FREE_MAX_ITER,
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("{}: {what}", self.family)));
        if !(self.lr > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum)
            || !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
        {
            return bad("momentum and betas must lie in [0, 1)");
        }
        if !(self.epsilon >= 0.0) || !(self.cg_sigma > 0.0) || self.eps2.is_nan() || self.eps1.is_nan() {
            return bad("tolerances must be non-negative");
        }
        if self.family == OptimizerFamily::Lbfgs && self.history == 0 {
            return bad("L-BFGS history must be positive");
        }
        if self.family.uses_line_search() {
            self.wolfe.validate()?;
        }
        if !(self.fd.grad_scale > 0.0 && self.fd.hv_scale > 0.0) {
            return bad("finite-difference scales must be positive");
        }
        Ok(())
    }
}

/// JSON form of an optimizer: either a bare name or a name plus overrides.
#[derive(Deserialize)]
#[serde(untagged)]
enum ConfigRepr {
    Name(OptimizerFamily),
    Full(Overrides),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Overrides {
    family: OptimizerFamily,
    lr: Option<f64>,
    momentum: Option<f64>,
    beta1: Option<f64>,
    beta2: Option<f64>,
    epsilon: Option<f64>,
    history: Option<usize>,
    cg_max_iter: Option<usize>,
    cg_sigma: Option<f64>,
    eps1: Option<f64>,
    eps2: Option<f64>,
    max_iter: Option<usize>,
    decrease_tol: Option<f64>,
    wolfe: Option<WolfeParams>,
    fd: Option<FdSettings>,
    seed: Option<u64>,
}

impl<'de> Deserialize<'de> for OptimizerConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match ConfigRepr::deserialize(d)? {
            ConfigRepr::Name(f) => OptimizerConfig::new(f),
            ConfigRepr::Full(o) => {
                let mut c = OptimizerConfig::new(o.family);
                macro_rules! set {
                    ($($field:ident),*) => { $(if let Some(v) = o.$field { c.$field = v; })* };
                }
                set!(lr, momentum, beta1, beta2, epsilon, history, cg_max_iter, cg_sigma, eps1, eps2, max_iter, decrease_tol, wolfe, fd, seed);
                c
            }
        })
    }
}
