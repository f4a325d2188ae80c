//! Constant-rate minibatch SGD on a quadratic loss, viewed as a discrete
//! Ornstein–Uhlenbeck chain:
//!
//! `θ' = θ − η A (θ − θ*) + (η/√|S|) B z`, `z ~ N(0, I)`.
//!
//! The chain is stationary iff `ρ(I − ηA) < 1`; its exact stationary
//! covariance solves the Stein equation `Σ = MΣMᵀ + (η²/|S|) C` with
//! `M = I − ηA`, which tends to the continuous Lyapunov solution of
//! `AΣ + ΣA = (η/|S|) C` as `η → 0`.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::sig17;
use crate::gaussian::{check_rate, sample, stationary_covariance, stationary_from_dynamics, MomentEstimate};
use crate::linalg::{make_spd, solve_discrete_stein, SpdMatrix, Strictness, SymmetricMatrix};
use crate::seed::{derive_seed, rng_from_seed};

/// `offset + ½(θ − θ*)ᵀ A (θ − θ*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticLoss {
    hessian: SpdMatrix,
    minimizer: DVector<f64>,
    offset: f64,
}

impl QuadraticLoss {
    pub fn new(hessian: SpdMatrix, minimizer: DVector<f64>, offset: f64) -> Result<Self> {
        if minimizer.len() != hessian.dim() {
            return Err(Error::DimensionMismatch {
                context: "QuadraticLoss::new",
                expected: hessian.dim(),
                found: minimizer.len(),
            });
        }
        if !offset.is_finite() || minimizer.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(QuadraticLoss {
            hessian,
            minimizer,
            offset,
        })
    }

    /// Minimum at the origin with zero offset.
    pub fn centered(hessian: SpdMatrix) -> Self {
        let d = hessian.dim();
        QuadraticLoss {
            hessian,
            minimizer: DVector::zeros(d),
            offset: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.hessian.dim()
    }

    pub fn hessian(&self) -> &SpdMatrix {
        &self.hessian
    }

    pub fn minimizer(&self) -> &DVector<f64> {
        &self.minimizer
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn value(&self, theta: &DVector<f64>) -> Result<f64> {
        self.check_dim(theta.len(), "QuadraticLoss::value")?;
        let r = theta - &self.minimizer;
        Ok(self.offset + 0.5 * r.dot(&(self.hessian.as_matrix() * &r)))
    }

    pub fn gradient(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(theta.len(), "QuadraticLoss::gradient")?;
        Ok(self.hessian.as_matrix() * (theta - &self.minimizer))
    }

    fn check_dim(&self, found: usize, context: &'static str) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }
}

/// Learning rate, batch size and gradient-noise factor `B`.
///
/// The per-example gradient-noise covariance is `C = B Bᵀ`, the covariance of
/// `B z` for standard normal `z`. For the symmetric factors used throughout
/// (`B = C^{1/2}`) this is also `BᵀB`.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdDynamics {
    lr: f64,
    batch_size: usize,
    noise_factor: DMatrix<f64>,
    noise_cov: SpdMatrix,
}

impl SgdDynamics {
    pub fn new(lr: f64, batch_size: usize, noise_factor: DMatrix<f64>) -> Result<Self> {
        check_rate(lr, batch_size)?;
        let c = &noise_factor * noise_factor.transpose();
        let noise_cov = make_spd(c, Strictness::Semidefinite)?;
        Ok(SgdDynamics {
            lr,
            batch_size,
            noise_factor,
            noise_cov,
        })
    }

    /// Uses the symmetric square root of `noise_cov` as the factor.
    pub fn from_noise_cov(lr: f64, batch_size: usize, noise_cov: &SpdMatrix) -> Result<Self> {
        let v = noise_cov.eigenvectors();
        let sqrt_eig = DMatrix::from_diagonal(&noise_cov.eigenvalues().map(|l| l.max(0.0).sqrt()));
        SgdDynamics::new(lr, batch_size, v * sqrt_eig * v.transpose())
    }

    /// `B = scale · I`.
    pub fn isotropic(dim: usize, noise_scale: f64, lr: f64, batch_size: usize) -> Result<Self> {
        SgdDynamics::new(lr, batch_size, DMatrix::identity(dim, dim) * noise_scale)
    }

    pub fn dim(&self) -> usize {
        self.noise_factor.nrows()
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn noise_factor(&self) -> &DMatrix<f64> {
        &self.noise_factor
    }

    pub fn noise_cov(&self) -> &SpdMatrix {
        &self.noise_cov
    }

    /// Multiplier of `B z` in one step: `η / √|S|`.
    pub fn noise_scale(&self) -> f64 {
        self.lr / (self.batch_size as f64).sqrt()
    }

    /// Same dynamics with a different learning rate.
    pub fn with_lr(&self, lr: f64) -> Result<Self> {
        SgdDynamics::new(lr, self.batch_size, self.noise_factor.clone())
    }
}

fn check_compatible(loss: &QuadraticLoss, dynamics: &SgdDynamics) -> Result<()> {
    if dynamics.noise_factor.nrows() != loss.dim() || dynamics.noise_factor.ncols() != loss.dim() {
        return Err(Error::DimensionMismatch {
            context: "SGD dynamics vs loss",
            expected: loss.dim(),
            found: dynamics.noise_factor.nrows(),
        });
    }
    Ok(())
}

/// Flattened step operator shared by [`sgd_step`] and [`simulate_chain`] so both
/// produce bit-identical states.
struct StepKernel {
    dim: usize,
    hessian: Vec<f64>,
    noise: Vec<f64>,
    minimizer: Vec<f64>,
    lr: f64,
    noise_scale: f64,
}

impl StepKernel {
    fn new(loss: &QuadraticLoss, dynamics: &SgdDynamics) -> Self {
        let dim = loss.dim();
        let row_major = |m: &DMatrix<f64>| m.transpose().as_slice().to_vec();
        StepKernel {
            dim,
            hessian: row_major(loss.hessian.as_matrix()),
            noise: row_major(&dynamics.noise_factor),
            minimizer: loss.minimizer.as_slice().to_vec(),
            lr: dynamics.lr,
            noise_scale: dynamics.noise_scale(),
        }
    }

    fn apply(&self, state: &[f64], z: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let a_row = &self.hessian[i * d..(i + 1) * d];
            let b_row = &self.noise[i * d..(i + 1) * d];
            let mut grad = 0.0;
            let mut noise = 0.0;
            for j in 0..d {
                grad += a_row[j] * (state[j] - self.minimizer[j]);
                noise += b_row[j] * z[j];
            }
            out[i] = state[i] - self.lr * grad + self.noise_scale * noise;
        }
    }
}

/// One SGD step: `state − η A (state − θ*) + (η/√|S|) B noise_draw`.
pub fn sgd_step(
    state: &DVector<f64>,
    loss: &QuadraticLoss,
    dynamics: &SgdDynamics,
    noise_draw: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_compatible(loss, dynamics)?;
    for (len, context) in [(state.len(), "sgd_step state"), (noise_draw.len(), "sgd_step noise draw")] {
        if len != loss.dim() {
            return Err(Error::DimensionMismatch {
                context,
                expected: loss.dim(),
                found: len,
            });
        }
    }
    let kernel = StepKernel::new(loss, dynamics);
    let mut out = DVector::zeros(loss.dim());
    kernel.apply(state.as_slice(), noise_draw.as_slice(), out.as_mut_slice());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub stable: bool,
    /// `ρ(I − ηA) = max_i |1 − η λ_i(A)|`.
    pub spectral_radius: f64,
}

/// The chain is stable iff `ρ(I − ηA) < 1` (strict; the boundary is unstable).
pub fn stability_check(loss: &QuadraticLoss, dynamics: &SgdDynamics) -> Result<StabilityReport> {
    check_compatible(loss, dynamics)?;
    let spectral_radius = loss
        .hessian
        .eigenvalues()
        .iter()
        .map(|l| (1.0 - dynamics.lr * l).abs())
        .fold(0.0, f64::max);
    Ok(StabilityReport {
        stable: spectral_radius < 1.0,
        spectral_radius,
    })
}

/// Exact stationary covariance of the discrete chain:
/// `Σ = (I − ηA) Σ (I − ηA)ᵀ + (η²/|S|) C`.
pub fn stein_stationary_covariance(loss: &QuadraticLoss, dynamics: &SgdDynamics) -> Result<SymmetricMatrix> {
    check_compatible(loss, dynamics)?;
    let d = loss.dim();
    let m = DMatrix::identity(d, d) - loss.hessian.as_matrix() * dynamics.lr;
    let q = dynamics
        .noise_cov
        .symmetric()
        .scaled(dynamics.lr * dynamics.lr / dynamics.batch_size as f64);
    solve_discrete_stein(&m, &q)
}

/// Continuous-time stationary covariance: `AΣ + ΣA = (η/|S|) C`.
pub fn lyapunov_stationary_covariance(loss: &QuadraticLoss, dynamics: &SgdDynamics) -> Result<SymmetricMatrix> {
    check_compatible(loss, dynamics)?;
    stationary_covariance(&loss.hessian, &dynamics.noise_cov, dynamics.lr, dynamics.batch_size)
}

/// Recorded states of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    /// Row-major, one recorded state per row; row `k` is step `k * stride`.
    states: Vec<f64>,
    final_state: Vec<f64>,
    pub stride: usize,
    pub total_steps: usize,
    pub seed: u64,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `floor(total_steps / stride) + 1`, the initial state included.
    pub fn len(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, record: usize) -> &[f64] {
        &self.states[record * self.dim..(record + 1) * self.dim]
    }

    /// State after the last step, recorded or not.
    pub fn final_state(&self) -> &[f64] {
        &self.final_state
    }

    pub fn flat_states(&self) -> &[f64] {
        &self.states
    }

    /// CSV with header `step,theta_0,...,theta_{d-1}`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step");
        for i in 0..self.dim {
            out.push_str(&format!(",theta_{i}"));
        }
        out.push('\n');
        for k in 0..self.len() {
            out.push_str(&(k * self.stride).to_string());
            for v in self.state(k) {
                out.push(',');
                out.push_str(&sig17(*v));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainConfig {
    pub total_steps: usize,
    pub stride: usize,
    pub seed: u64,
    /// Run even when [`stability_check`] fails.
    pub allow_unstable: bool,
}

impl ChainConfig {
    pub fn new(total_steps: usize, stride: usize, seed: u64) -> Self {
        ChainConfig {
            total_steps,
            stride,
            seed,
            allow_unstable: false,
        }
    }
}

/// Runs the SGD chain from `init` for `total_steps` steps, recording every
/// `stride`-th state. Noise draws come from a ChaCha8 stream seeded by
/// `config.seed`, `d` standard normals per step.
pub fn simulate_chain(
    init: &DVector<f64>,
    loss: &QuadraticLoss,
    dynamics: &SgdDynamics,
    config: ChainConfig,
) -> Result<Trajectory> {
    check_compatible(loss, dynamics)?;
    if init.len() != loss.dim() {
        return Err(Error::DimensionMismatch {
            context: "simulate_chain init",
            expected: loss.dim(),
            found: init.len(),
        });
    }
    if config.total_steps == 0 || config.stride == 0 {
        return Err(Error::InvalidArgument("total_steps and stride must be positive".into()));
    }
    let stability = stability_check(loss, dynamics)?;
    if !stability.stable && !config.allow_unstable {
        return Err(Error::UnstableDynamics {
            spectral_radius: stability.spectral_radius,
        });
    }

    let d = loss.dim();
    let kernel = StepKernel::new(loss, dynamics);
    let records = config.total_steps / config.stride + 1;
    let mut states = Vec::with_capacity(records * d);
    let mut rng = rng_from_seed(config.seed);
    let mut current = init.as_slice().to_vec();
    let mut next = vec![0.0; d];
    let mut z = vec![0.0; d];
    states.extend_from_slice(&current);
    for step in 1..=config.total_steps {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        kernel.apply(&current, &z, &mut next);
        std::mem::swap(&mut current, &mut next);
        if step % config.stride == 0 {
            states.extend_from_slice(&current);
        }
    }
    Ok(Trajectory {
        dim: d,
        states,
        final_state: current,
        stride: config.stride,
        total_steps: config.total_steps,
        seed: config.seed,
    })
}

/// Half the recorded trajectory.
pub fn default_burn_in(records: usize) -> usize {
    records / 2
}

/// Moments of the records after the first `burn_in_records`.
pub fn estimate_stationary(trajectory: &Trajectory, burn_in_records: usize) -> Result<MomentEstimate> {
    let kept = trajectory.len().saturating_sub(burn_in_records);
    if kept < 2 {
        return Err(Error::TooFewSamples { required: 2, found: kept });
    }
    MomentEstimate::from_flat(&trajectory.states[burn_in_records * trajectory.dim..], trajectory.dim)
}

/// How the fine-tuning chains are initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Draw from the analytic pre-training stationary law.
    AnalyticSample,
    /// Continue from the final pre-training state.
    ChainContinue,
}

#[derive(Debug, Clone, Copy)]
pub struct Stage<'a> {
    pub loss: &'a QuadraticLoss,
    pub dynamics: &'a SgdDynamics,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct TwoStageConfig {
    pub replicas: usize,
    pub stride: usize,
    /// Per-replica burn-in in records; `None` means half of each stage's records.
    pub burn_in: Option<usize>,
    pub master_seed: u64,
    pub init_mode: InitMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageEstimate {
    /// Pooled over every replica's post-burn-in records.
    pub pooled: MomentEstimate,
    pub replica_means: Vec<DVector<f64>>,
}

impl StageEstimate {
    /// Standard error of the pooled mean from the spread of replica means
    /// (batch means), which accounts for within-chain correlation.
    pub fn mean_std_error(&self) -> DVector<f64> {
        let r = self.replica_means.len();
        let d = self.pooled.dim();
        let mut grand = DVector::zeros(d);
        for m in &self.replica_means {
            grand += m;
        }
        grand /= r as f64;
        let mut var = DVector::zeros(d);
        for m in &self.replica_means {
            let c = m - &grand;
            var += c.component_mul(&c);
        }
        var /= (r - 1) as f64;
        var.map(|v| (v / r as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageResult {
    pub pt_estimate: StageEstimate,
    pub ft_estimate: StageEstimate,
}

struct ReplicaOutput {
    pt_records: Vec<f64>,
    ft_records: Vec<f64>,
}

/// Replica `r` draws everything from `derive_seed(master_seed, r)`: sub-stream
/// 0 drives the pre-training chain, 1 the initial draws, 2 the fine-tuning
/// chain. Pre-training starts from a draw of the prior `N(0, I)`.
pub fn two_stage_run(pt: Stage<'_>, ft: Stage<'_>, config: TwoStageConfig) -> Result<TwoStageResult> {
    if config.replicas < 2 {
        return Err(Error::InvalidArgument("two_stage_run needs at least 2 replicas".into()));
    }
    if pt.loss.dim() != ft.loss.dim() {
        return Err(Error::DimensionMismatch {
            context: "two_stage_run stages",
            expected: pt.loss.dim(),
            found: ft.loss.dim(),
        });
    }
    for stage in [&pt, &ft] {
        let s = stability_check(stage.loss, stage.dynamics)?;
        if !s.stable {
            return Err(Error::UnstableDynamics {
                spectral_radius: s.spectral_radius,
            });
        }
    }
    let d = pt.loss.dim();
    let pt_law = match config.init_mode {
        InitMode::AnalyticSample => Some(stationary_from_dynamics(
            pt.loss.hessian(),
            pt.loss.minimizer(),
            pt.dynamics.noise_cov(),
            pt.dynamics.lr(),
            pt.dynamics.batch_size(),
        )?),
        InitMode::ChainContinue => None,
    };
    let prior = crate::gaussian::GaussianMeasure::standard(d);

    let outputs: Vec<Result<ReplicaOutput>> = (0..config.replicas)
        .into_par_iter()
        .map(|r| {
            let replica_seed = derive_seed(config.master_seed, r as u64);
            let init_seed = derive_seed(replica_seed, 1);
            let pt_init = first_row(&sample(&prior, 1, derive_seed(init_seed, 0))?);
            let pt_traj = simulate_chain(
                &pt_init,
                pt.loss,
                pt.dynamics,
                ChainConfig::new(pt.steps, config.stride, derive_seed(replica_seed, 0)),
            )?;
            let ft_init = match &pt_law {
                Some(law) => first_row(&sample(law, 1, derive_seed(init_seed, 1))?),
                None => DVector::from_column_slice(pt_traj.final_state()),
            };
            let ft_traj = simulate_chain(
                &ft_init,
                ft.loss,
                ft.dynamics,
                ChainConfig::new(ft.steps, config.stride, derive_seed(replica_seed, 2)),
            )?;
            Ok(ReplicaOutput {
                pt_records: post_burn_in(&pt_traj, config.burn_in)?,
                ft_records: post_burn_in(&ft_traj, config.burn_in)?,
            })
        })
        .collect();
    let outputs: Vec<ReplicaOutput> = outputs.into_iter().collect::<Result<_>>()?;

    let pool = |pick: fn(&ReplicaOutput) -> &Vec<f64>| -> Result<StageEstimate> {
        let mut all = Vec::new();
        let mut replica_means = Vec::with_capacity(outputs.len());
        for o in &outputs {
            let recs = pick(o);
            replica_means.push(MomentEstimate::from_flat(recs, d)?.mean);
            all.extend_from_slice(recs);
        }
        Ok(StageEstimate {
            pooled: MomentEstimate::from_flat(&all, d)?,
            replica_means,
        })
    };
    Ok(TwoStageResult {
        pt_estimate: pool(|o| &o.pt_records)?,
        ft_estimate: pool(|o| &o.ft_records)?,
    })
}

fn first_row(m: &DMatrix<f64>) -> DVector<f64> {
    m.row(0).transpose()
}

fn post_burn_in(traj: &Trajectory, burn_in: Option<usize>) -> Result<Vec<f64>> {
    let burn = burn_in.unwrap_or_else(|| default_burn_in(traj.len()));
    let kept = traj.len().saturating_sub(burn);
    if kept < 2 {
        return Err(Error::TooFewSamples { required: 2, found: kept });
    }
    Ok(traj.flat_states()[burn * traj.dim()..].to_vec())
}
