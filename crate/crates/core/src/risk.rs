//! Linear-regression testbed.
//!
//! With squared loss `½(y − xᵀθ)²` both the empirical and the population risk
//! are exactly quadratic in `θ`, so the SGD stationary law is exactly the
//! Gaussian of [`crate::gaussian::stationary_from_dynamics`] and risks of a
//! Gaussian posterior have closed forms. Generalization gaps measured here are
//! compared against the PAC-Bayes bound.
//!
//! The bound formally needs a loss bounded in `[0, 1]`; squared loss is not,
//! which every experiment result records in its notes.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{mcallester_bound, SampleSpec};
use crate::error::{Error, Result};
use crate::gaussian::{kl_divergence, stationary_from_dynamics, GaussianMeasure};
use crate::linalg::{SpdMatrix, Strictness};
use crate::seed::{derive_seed, rng_from_seed};
use crate::sgd::{
    default_burn_in, estimate_stationary, simulate_chain, stability_check, ChainConfig, QuadraticLoss, SgdDynamics,
};

pub const UNBOUNDED_LOSS_NOTE: &str =
    "squared loss is unbounded; the McAllester bound assumes losses in [0,1], so violations are an empirical check only";

/// `y = xᵀw* + noise_std·ε`, `x ~ N(0, feature_cov)`, `ε ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTask {
    true_weights: DVector<f64>,
    feature_cov: SpdMatrix,
    noise_std: f64,
    sample_size: usize,
}

impl RegressionTask {
    pub fn new(true_weights: DVector<f64>, feature_cov: SpdMatrix, noise_std: f64, sample_size: usize) -> Result<Self> {
        if true_weights.len() != feature_cov.dim() {
            return Err(Error::DimensionMismatch {
                context: "RegressionTask",
                expected: feature_cov.dim(),
                found: true_weights.len(),
            });
        }
        if !feature_cov.is_strict() {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: feature_cov.min_eigenvalue(),
            });
        }
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise_std must be non-negative, got {noise_std}")));
        }
        if sample_size == 0 {
            return Err(Error::InvalidArgument("sample size must be positive".into()));
        }
        Ok(RegressionTask {
            true_weights,
            feature_cov,
            noise_std,
            sample_size,
        })
    }

    pub fn dim(&self) -> usize {
        self.true_weights.len()
    }

    pub fn true_weights(&self) -> &DVector<f64> {
        &self.true_weights
    }

    pub fn feature_cov(&self) -> &SpdMatrix {
        &self.feature_cov
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn with_sample_size(&self, sample_size: usize) -> Result<Self> {
        RegressionTask::new(self.true_weights.clone(), self.feature_cov.clone(), self.noise_std, sample_size)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `N × d`, one example per row.
    pub features: DMatrix<f64>,
    pub targets: DVector<f64>,
    pub seed: u64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Each example draws `d` normals for `x = L z` then one for the noise.
pub fn generate_dataset(task: &RegressionTask, seed: u64) -> Dataset {
    let d = task.dim();
    let n = task.sample_size;
    let l = task.feature_cov.cholesky_factor().expect("strict by construction");
    let mut rng = rng_from_seed(seed);
    let mut features = DMatrix::zeros(n, d);
    let mut targets = DVector::zeros(n);
    let mut z = vec![0.0; d];
    for r in 0..n {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        let mut y = 0.0;
        for i in 0..d {
            let mut x = 0.0;
            for (k, zk) in z.iter().enumerate().take(i + 1) {
                x += l[(i, k)] * zk;
            }
            features[(r, i)] = x;
            y += x * task.true_weights[i];
        }
        let eps: f64 = StandardNormal.sample(&mut rng);
        targets[r] = y + task.noise_std * eps;
    }
    Dataset { features, targets, seed }
}

/// `(1/N) Σ ½(y_i − x_iᵀθ)²` by direct summation.
pub fn empirical_risk_direct(data: &Dataset, theta: &DVector<f64>) -> Result<f64> {
    if theta.len() != data.features.ncols() {
        return Err(Error::DimensionMismatch {
            context: "empirical_risk_direct",
            expected: data.features.ncols(),
            found: theta.len(),
        });
    }
    let residuals = &data.targets - &data.features * theta;
    Ok(0.5 * residuals.norm_squared() / data.len() as f64)
}

/// Exact quadratic form of the empirical squared-loss risk: Hessian
/// `XᵀX/N`, least-squares minimizer and minimum risk as offset.
pub fn empirical_quadratic(data: &Dataset) -> Result<QuadraticLoss> {
    let n = data.len();
    if n == 0 {
        return Err(Error::TooFewSamples { required: 1, found: 0 });
    }
    let x = &data.features;
    let gram = x.transpose() * x / n as f64;
    let hessian = match SpdMatrix::new(crate::linalg::SymmetricMatrix::new(gram)?, Strictness::Strict) {
        Ok(h) => h,
        Err(Error::NotPositiveDefinite { min_eigenvalue }) => return Err(Error::SingularDesign { min_eigenvalue }),
        Err(e) => return Err(e),
    };
    let moment = x.transpose() * &data.targets / n as f64;
    let minimizer = hessian.solve_vector(&moment)?;
    let offset = empirical_risk_direct(data, &minimizer)?;
    QuadraticLoss::new(hessian, minimizer, offset)
}

/// `E_{θ~q} R(θ) = offset + ½(μ−θ*)ᵀA(μ−θ*) + ½ tr(AΣ)`.
pub fn expected_risk_gaussian(loss: &QuadraticLoss, q: &GaussianMeasure) -> Result<f64> {
    if q.dim() != loss.dim() {
        return Err(Error::DimensionMismatch {
            context: "expected_risk_gaussian",
            expected: loss.dim(),
            found: q.dim(),
        });
    }
    let a = loss.hessian().as_matrix();
    let r = q.mean() - loss.minimizer();
    let trace = (a * q.covariance().as_matrix()).trace();
    Ok(loss.offset() + 0.5 * r.dot(&(a * &r)) + 0.5 * trace)
}

/// Population risk `½(θ − w*)ᵀ Σ_x (θ − w*) + ½ noise_std²`.
pub fn population_quadratic(task: &RegressionTask) -> QuadraticLoss {
    QuadraticLoss::new(
        task.feature_cov.clone(),
        task.true_weights.clone(),
        0.5 * task.noise_std * task.noise_std,
    )
    .expect("task dimensions agree")
}

/// Which Gaussian plays the posterior in a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosteriorMode {
    /// Stationary law of the continuous model on the empirical loss.
    Analytic,
    /// Moments of a simulated SGD chain on the empirical loss (half burn-in).
    Simulated { steps: usize, stride: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapTrial {
    pub expected_risk: f64,
    pub empirical_risk: f64,
    /// `expected_risk − empirical_risk`.
    pub gap: f64,
    pub bound_value: f64,
    pub kl: f64,
    /// `gap > bound_value`.
    pub violated: bool,
}

/// One end-to-end check of `R(Q) ≤ R̂(Q) + bound`. Sub-stream 0 of `seed`
/// generates the data, sub-stream 1 drives the chain in simulated mode.
pub fn gap_trial(
    task: &RegressionTask,
    sgd: &SgdDynamics,
    spec: &SampleSpec,
    prior: &GaussianMeasure,
    posterior: PosteriorMode,
    seed: u64,
) -> Result<GapTrial> {
    if spec.sample_size() != task.sample_size as u64 {
        return Err(Error::InvalidSpec(format!(
            "bound sample size {} differs from task sample size {}",
            spec.sample_size(),
            task.sample_size
        )));
    }
    if prior.dim() != task.dim() {
        return Err(Error::DimensionMismatch {
            context: "gap_trial prior",
            expected: task.dim(),
            found: prior.dim(),
        });
    }
    let data = generate_dataset(task, derive_seed(seed, 0));
    let empirical = empirical_quadratic(&data)?;
    let stability = stability_check(&empirical, sgd)?;
    if !stability.stable {
        return Err(Error::UnstableDynamics {
            spectral_radius: stability.spectral_radius,
        });
    }
    let q = match posterior {
        PosteriorMode::Analytic => stationary_from_dynamics(
            empirical.hessian(),
            empirical.minimizer(),
            sgd.noise_cov(),
            sgd.lr(),
            sgd.batch_size(),
        )?,
        PosteriorMode::Simulated { steps, stride } => {
            let traj = simulate_chain(
                empirical.minimizer(),
                &empirical,
                sgd,
                ChainConfig::new(steps, stride, derive_seed(seed, 1)),
            )?;
            let est = estimate_stationary(&traj, default_burn_in(traj.len()))?;
            GaussianMeasure::new(est.mean, SpdMatrix::new(est.covariance, Strictness::Strict)?)?
        }
    };
    let expected_risk = expected_risk_gaussian(&population_quadratic(task), &q)?;
    let empirical_risk = expected_risk_gaussian(&empirical, &q)?;
    let kl = kl_divergence(&q, prior)?;
    let bound_value = mcallester_bound(kl, spec)?;
    let gap = expected_risk - empirical_risk;
    Ok(GapTrial {
        expected_risk,
        empirical_risk,
        gap,
        bound_value,
        kl,
        violated: gap > bound_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Summary {
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRow {
    pub seed: u64,
    pub n: usize,
    #[serde(flatten)]
    pub trial: GapTrial,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityResult {
    pub trials: usize,
    pub delta: f64,
    pub violation_count: usize,
    pub gaps: Summary,
    pub bounds: Summary,
    pub notes: String,
    #[serde(skip)]
    pub rows: Vec<TrialRow>,
}

impl ValidityResult {
    /// Header `seed,N,gap,bound,violated`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,N,gap,bound,violated\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.seed,
                r.n,
                crate::format::sig17(r.trial.gap),
                crate::format::sig17(r.trial.bound_value),
                r.trial.violated
            ));
        }
        out
    }
}

/// Runs `trials` independent [`gap_trial`]s, trial `k` seeded with
/// `derive_seed(master_seed, k)`.
pub fn bound_validity_experiment(
    task: &RegressionTask,
    sgd: &SgdDynamics,
    spec: &SampleSpec,
    prior: &GaussianMeasure,
    posterior: PosteriorMode,
    trials: usize,
    master_seed: u64,
) -> Result<ValidityResult> {
    if trials < 10 {
        return Err(Error::InvalidArgument(format!("need at least 10 trials, got {trials}")));
    }
    let rows: Vec<TrialRow> = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let seed = derive_seed(master_seed, k);
            gap_trial(task, sgd, spec, prior, posterior, seed).map(|trial| TrialRow {
                seed,
                n: task.sample_size,
                trial,
            })
        })
        .collect::<Result<_>>()?;
    let gaps: Vec<f64> = rows.iter().map(|r| r.trial.gap).collect();
    let bounds: Vec<f64> = rows.iter().map(|r| r.trial.bound_value).collect();
    Ok(ValidityResult {
        trials,
        delta: spec.delta(),
        violation_count: rows.iter().filter(|r| r.trial.violated).count(),
        gaps: Summary::of(&gaps),
        bounds: Summary::of(&bounds),
        notes: UNBOUNDED_LOSS_NOTE.to_string(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub mean_bound: f64,
    pub mean_gap: f64,
    /// `mean_bound(4N) / mean_bound(N)` when `4N` is also in the grid.
    pub ratio: Option<f64>,
}

/// Mean bound and gap per sample size. Trial `k` uses the same seed
/// `derive_seed(master_seed, k)` at every `N`.
pub fn scaling_experiment(
    template: &RegressionTask,
    sample_sizes: &[usize],
    sgd: &SgdDynamics,
    delta: f64,
    trials: usize,
    master_seed: u64,
) -> Result<Vec<ScalingRow>> {
    if sample_sizes.is_empty() || sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("sample sizes must be non-empty and strictly increasing".into()));
    }
    if sample_sizes[0] < template.dim() {
        return Err(Error::InvalidArgument(format!(
            "sample sizes must be at least the dimension {}",
            template.dim()
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let prior = GaussianMeasure::standard(template.dim());
    let mut rows = Vec::with_capacity(sample_sizes.len());
    for &n in sample_sizes {
        let task = template.with_sample_size(n)?;
        let spec = SampleSpec::new(n as u64, delta)?;
        let trials: Vec<GapTrial> = (0..trials as u64)
            .into_par_iter()
            .map(|k| gap_trial(&task, sgd, &spec, &prior, PosteriorMode::Analytic, derive_seed(master_seed, k)))
            .collect::<Result<_>>()?;
        let count = trials.len() as f64;
        rows.push(ScalingRow {
            n,
            mean_bound: trials.iter().map(|t| t.bound_value).sum::<f64>() / count,
            mean_gap: trials.iter().map(|t| t.gap).sum::<f64>() / count,
            ratio: None,
        });
    }
    let by_n: Vec<(usize, f64)> = rows.iter().map(|r| (r.n, r.mean_bound)).collect();
    for row in &mut rows {
        if let Some(&(_, b4)) = by_n.iter().find(|(n, _)| *n == 4 * row.n) {
            row.ratio = Some(b4 / row.mean_bound);
        }
    }
    Ok(rows)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
