//! Named kernels and synthetic distributions with known means.

use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail, ensure, Context, Result};
use rand_distr::{Distribution, Normal};
use upriv::applications::{collision_kernel, collision_theta, sample_multinomial, CollisionSource, PerturbedUniform};
use upriv::boosting::{median_of_means, BoostPlan};
use upriv::coinpress::{all_tuples_estimator, naive_estimator, subsampled_estimator, CoinPressConfig};
use upriv::dp::PrivacyBudget;
use upriv::hajek::{
    degenerate_xi, private_mean_local_hajek, subgaussian_pipeline, HajekParams, MaterializedSource, PipelineConfig,
};
use upriv::ustat::{all_tuples, Dataset, FnKernel, Kernel};
use upriv::{EstimateReport, Outcome, StdStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Iterative clipping on disjoint chunks.
    Naive,
    /// Iterative clipping over every k-subset.
    All,
    /// Iterative clipping over sampled k-subsets.
    Subsampled,
    /// Local Hájek reweighting with smooth-sensitivity noise.
    Hajek,
}

impl FromStr for Method {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "naive" => Method::Naive,
            "all" => Method::All,
            "subsampled" => Method::Subsampled,
            "hajek" => Method::Hajek,
            _ => bail!("unknown method {s:?} (naive, all, subsampled, hajek)"),
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Naive => "naive",
            Method::All => "all",
            Method::Subsampled => "subsampled",
            Method::Hajek => "hajek",
        })
    }
}

/// A kernel paired with a data distribution whose parameter is known.
#[derive(Debug, Clone, PartialEq)]
pub enum Workload {
    /// `h(x) = x` on `N(mean, 1)`.
    GaussianIdentity { mean: f64 },
    /// `h(x, y) = (x + y) / 2` on `N(mean, 1)`.
    GaussianPairMean { mean: f64 },
    /// `h(x, y) = value` on `N(mean, 1)`.
    Constant { mean: f64, value: f64 },
    /// `h(x, y) = 1(x = y)` on a perturbed uniform distribution.
    Collision { dist: PerturbedUniform },
}

/// Parameters shared by every estimator call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Knobs {
    pub eps: f64,
    pub alpha: f64,
    /// A priori bound `|theta| <= r` for the iterative estimators.
    pub r: f64,
    /// Number of sampled subsets; `None` picks `(n/k) ln n` rounded up, times 4.
    pub subsets: Option<usize>,
    pub noise_multiplier: f64,
}

/// Data drawn for one trial.
#[derive(Debug, Clone, PartialEq)]
pub enum Sample {
    Real(Dataset<f64>),
    Label(Dataset<u32>),
}

impl Workload {
    /// Parse a kernel id (`identity`, `mean`, `constant[:v]`, `collision`) and a
    /// distribution id (`gaussian:MU`, `uniform:M`, `alternating:M:S`,
    /// `perturbed:A1,A2,...`).
    pub fn parse(kernel: &str, distribution: &str) -> Result<Self> {
        let (dname, dargs) = distribution.split_once(':').unwrap_or((distribution, ""));
        let gaussian = || -> Result<f64> {
            ensure!(dname == "gaussian", "kernel {kernel:?} needs a gaussian distribution, got {distribution:?}");
            if dargs.is_empty() {
                Ok(0.0)
            } else {
                dargs.parse().with_context(|| format!("bad gaussian mean {dargs:?}"))
            }
        };
        let (kname, kargs) = kernel.split_once(':').unwrap_or((kernel, ""));
        Ok(match kname {
            "identity" => Workload::GaussianIdentity { mean: gaussian()? },
            "mean" => Workload::GaussianPairMean { mean: gaussian()? },
            "constant" => {
                let value = if kargs.is_empty() { 1.0 } else { kargs.parse().context("bad constant")? };
                Workload::Constant { mean: gaussian()?, value }
            }
            "collision" => Workload::Collision { dist: parse_categorical(dname, dargs)? },
            _ => bail!("unknown kernel {kernel:?} (identity, mean, constant[:v], collision)"),
        })
    }

    pub fn theta(&self) -> f64 {
        match self {
            Workload::GaussianIdentity { mean } | Workload::GaussianPairMean { mean } => *mean,
            Workload::Constant { value, .. } => *value,
            Workload::Collision { dist } => collision_theta(dist),
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            Workload::GaussianIdentity { .. } => 1,
            _ => 2,
        }
    }

    pub fn sample(&self, n: usize, rng: &mut StdStream) -> Sample {
        match self {
            Workload::GaussianIdentity { mean }
            | Workload::GaussianPairMean { mean }
            | Workload::Constant { mean, .. } => {
                let normal = Normal::new(*mean, 1.0).expect("unit variance");
                Sample::Real(Dataset::new((0..n).map(|_| normal.sample(rng)).collect()))
            }
            Workload::Collision { dist } => Sample::Label(sample_multinomial(dist, n, rng)),
        }
    }

    /// Run `method` on `sample`, optionally boosted by the median of chunk
    /// estimates at confidence `1 - alpha`.
    pub fn estimate(
        &self,
        method: Method,
        sample: &Sample,
        knobs: &Knobs,
        boost: bool,
        budget: &mut PrivacyBudget,
        rng: &mut StdStream,
    ) -> Result<Outcome<EstimateReport<f64>>> {
        if !boost {
            return self.estimate_once(method, sample, knobs, budget, rng);
        }
        let seed: u64 = rand::Rng::random(rng);
        let k = self.degree();
        Ok(match sample {
            Sample::Real(d) => {
                let plan = BoostPlan::new(knobs.alpha, d.len(), k)?;
                median_of_means(d, &plan, seed, budget, |c, b, r| {
                    self.estimate_once(method, &Sample::Real(c.clone()), knobs, b, r)
                        .map_err(|e| upriv::Error::InvalidArgument(e.to_string()))
                })?
            }
            Sample::Label(d) => {
                let plan = BoostPlan::new(knobs.alpha, d.len(), k)?;
                median_of_means(d, &plan, seed, budget, |c, b, r| {
                    self.estimate_once(method, &Sample::Label(c.clone()), knobs, b, r)
                        .map_err(|e| upriv::Error::InvalidArgument(e.to_string()))
                })?
            }
        })
    }

    fn estimate_once(
        &self,
        method: Method,
        sample: &Sample,
        knobs: &Knobs,
        budget: &mut PrivacyBudget,
        rng: &mut StdStream,
    ) -> Result<Outcome<EstimateReport<f64>>> {
        match (self, sample) {
            (Workload::GaussianIdentity { .. }, Sample::Real(d)) => {
                let h = FnKernel::sub_gaussian(1, 1.0, |a: &[&f64]| *a[0]);
                real_estimate(&h, 1.0, d, method, knobs, budget, rng)
            }
            (Workload::GaussianPairMean { .. }, Sample::Real(d)) => {
                let h = FnKernel::sub_gaussian(2, 0.5, |a: &[&f64]| (a[0] + a[1]) / 2.0);
                real_estimate(&h, 0.5, d, method, knobs, budget, rng)
            }
            (Workload::Constant { value, .. }, Sample::Real(d)) => {
                let v = *value;
                let h = FnKernel::bounded(2, 0.0, move |_: &[&f64]| v);
                if method == Method::Hajek {
                    let f = all_tuples(d.len(), 2)?;
                    let src = MaterializedSource::new(&h, d, &f)?;
                    let params = hajek_params(knobs, 0.0, 0.0);
                    return Ok(private_mean_local_hajek(&src, &params, budget, rng)?);
                }
                real_estimate(&h, 0.0, d, method, knobs, budget, rng)
            }
            (Workload::Collision { .. }, Sample::Label(d)) => {
                let n = d.len();
                if method == Method::Hajek {
                    let src = CollisionSource::<f64>::new(d)?;
                    let params = hajek_params(knobs, 1.0, degenerate_xi(1.0, 2, n, knobs.alpha));
                    return Ok(private_mean_local_hajek(&src, &params, budget, rng)?);
                }
                // A [0, 1] variable is sub-Gaussian with proxy 1/4.
                let h = collision_kernel::<f64>();
                coinpress(&h, 0.25, d, method, knobs, budget, rng).map(Outcome::Value)
            }
            _ => Err(anyhow!("sample does not match the workload")),
        }
    }
}

fn hajek_params(knobs: &Knobs, c: f64, xi: f64) -> HajekParams<f64> {
    let mut p = HajekParams::new(knobs.eps, c, xi);
    p.noise_multiplier = knobs.noise_multiplier;
    p
}

fn real_estimate<K: Kernel<f64, f64>>(
    h: &K,
    tau: f64,
    d: &Dataset<f64>,
    method: Method,
    knobs: &Knobs,
    budget: &mut PrivacyBudget,
    rng: &mut StdStream,
) -> Result<Outcome<EstimateReport<f64>>> {
    if method == Method::Hajek {
        let cfg = PipelineConfig { noise_multiplier: knobs.noise_multiplier, ..Default::default() };
        return Ok(subgaussian_pipeline(h, d, knobs.r, tau, knobs.eps, knobs.alpha, &cfg, budget, rng)?);
    }
    coinpress(h, tau, d, method, knobs, budget, rng).map(Outcome::Value)
}

fn coinpress<X: Sync, K: Kernel<X, f64>>(
    h: &K,
    tau: f64,
    d: &Dataset<X>,
    method: Method,
    knobs: &Knobs,
    budget: &mut PrivacyBudget,
    rng: &mut StdStream,
) -> Result<EstimateReport<f64>> {
    let cfg = CoinPressConfig::default();
    let (r, eps) = (knobs.r, knobs.eps);
    Ok(match method {
        Method::Naive => naive_estimator(h, d, r, tau, eps, &cfg, budget, rng)?,
        Method::All => all_tuples_estimator(h, d, r, tau, eps, &cfg, budget, rng)?,
        Method::Subsampled => {
            let m = knobs.subsets.unwrap_or_else(|| default_subsets(d.len(), h.degree()));
            subsampled_estimator(h, d, r, tau, eps, m, &cfg, budget, rng)?
        }
        Method::Hajek => unreachable!("handled by the caller"),
    })
}

/// `4 (n/k) ln n`, rounded up.
pub fn default_subsets(n: usize, k: usize) -> usize {
    (4.0 * n as f64 / k as f64 * (n as f64).ln().max(1.0)).ceil() as usize
}

/// `uniform:M`, `alternating:M:S` or `perturbed:A1,A2,...`.
pub fn parse_categorical(name: &str, args: &str) -> Result<PerturbedUniform> {
    match name {
        "uniform" => Ok(PerturbedUniform::uniform(args.parse().context("uniform:M needs a count")?)),
        "alternating" => {
            let (m, s) = args.split_once(':').ok_or_else(|| anyhow!("alternating:M:S"))?;
            Ok(PerturbedUniform::alternating(m.parse()?, s.parse()?)?)
        }
        "perturbed" => {
            let a = args.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>()?;
            Ok(PerturbedUniform::new(a)?)
        }
        _ => bail!("unknown categorical distribution {name:?} (uniform, alternating, perturbed)"),
    }
}
