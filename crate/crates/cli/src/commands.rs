//! One function per subcommand. Each returns the rendered result document
//! and a one-line summary.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use ou_pacbayes::bounds::{
    dominance_from_terms, dominance_report, finetune_bound, finetune_bound_dimension, lemma2_survey,
    mcallester_bound, pretrain_bound, BoundReport, DomainPair, SampleSpec, SurveyConfig,
};
use ou_pacbayes::format::{sig17, to_json};
use ou_pacbayes::gaussian::{kl_divergence, mc_kl_estimate, stationary_covariance, GaussianMeasure};
use ou_pacbayes::linalg::{make_spd, parse_matrix, parse_vector, SpdMatrix, Strictness, SymmetricMatrix};
use ou_pacbayes::risk::{bound_validity_experiment, scaling_experiment, PosteriorMode, RegressionTask};
use ou_pacbayes::seed::derive_seed;
use ou_pacbayes::sgd::{
    default_burn_in, estimate_stationary, lyapunov_stationary_covariance, simulate_chain, stability_check,
    stein_stationary_covariance, two_stage_run, ChainConfig, InitMode, QuadraticLoss, SgdDynamics, Stage,
    StageEstimate, TwoStageConfig,
};

use crate::config::{Format, RunConfig, Subcommand};
use crate::error::{CliError, ConfigContext, NumericalContext};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub document: String,
    pub summary: String,
}

pub fn execute(config: &RunConfig) -> Result<RunOutput, CliError> {
    let p = Params(config);
    match config.subcommand {
        Subcommand::Lyapunov => lyapunov(&p),
        Subcommand::Simulate => simulate(&p),
        Subcommand::TwoStage => two_stage(&p),
        Subcommand::Kl => kl(&p),
        Subcommand::Bound => bound(&p),
        Subcommand::LemmaSurvey => lemma_survey(&p),
        Subcommand::Dominance => dominance(&p),
        Subcommand::Validity => validity(&p),
        Subcommand::Scaling => scaling(&p),
    }
}

struct Params<'a>(&'a RunConfig);

impl Params<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.parameters.get(key).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, CliError> {
        self.raw(key)
            .map(|s| {
                s.trim()
                    .parse::<T>()
                    .map_err(|_| CliError::Config(format!("--{} must be {what}, got {s:?}", key.replace('_', "-"))))
            })
            .transpose()
    }

    fn f64(&self, key: &str) -> Result<f64, CliError> {
        self.opt_f64(key)?.ok_or_else(|| missing(key))
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.parse(key, "a real number")
    }

    fn usize(&self, key: &str) -> Result<usize, CliError> {
        self.parse(key, "a non-negative integer")?.ok_or_else(|| missing(key))
    }

    fn opt_usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.parse(key, "a non-negative integer")
    }

    fn u64(&self, key: &str) -> Result<u64, CliError> {
        self.parse(key, "a non-negative integer")?.ok_or_else(|| missing(key))
    }

    fn bool(&self, key: &str) -> Result<bool, CliError> {
        Ok(self.parse(key, "true or false")?.unwrap_or(false))
    }

    fn choice<'s>(&self, key: &str, allowed: &[&'s str]) -> Result<&'s str, CliError> {
        let v = self.raw(key).ok_or_else(|| missing(key))?;
        allowed
            .iter()
            .find(|a| **a == v)
            .copied()
            .ok_or_else(|| CliError::Config(format!("--{} must be one of {allowed:?}, got {v:?}", key.replace('_', "-"))))
    }

    fn vector(&self, key: &str, dim: usize) -> Result<Option<DVector<f64>>, CliError> {
        let Some(text) = self.raw(key) else { return Ok(None) };
        let v = parse_vector(text).invalid(key)?;
        if v.len() != dim {
            return Err(CliError::Config(format!("--{key} has {} entries, expected {dim}", v.len())));
        }
        Ok(Some(v))
    }

    fn vector_or(&self, key: &str, dim: usize, fill: f64) -> Result<DVector<f64>, CliError> {
        Ok(self.vector(key, dim)?.unwrap_or_else(|| DVector::from_element(dim, fill)))
    }

    fn matrix(&self, key: &str) -> Result<Option<DMatrix<f64>>, CliError> {
        let Some(path) = self.raw(key) else { return Ok(None) };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {path}: {e}")))?;
        parse_matrix(&text).invalid(path).map(Some)
    }

    fn spd(&self, key: &str, strictness: Strictness) -> Result<Option<SpdMatrix>, CliError> {
        self.matrix(key)?
            .map(|m| make_spd(m, strictness).invalid(&format!("--{}", key.replace('_', "-"))))
            .transpose()
    }

    fn spd_or_identity(&self, key: &str, dim: usize) -> Result<SpdMatrix, CliError> {
        Ok(self.spd(key, Strictness::Strict)?.unwrap_or_else(|| SpdMatrix::identity(dim)))
    }

    fn required_spd(&self, key: &str, strictness: Strictness) -> Result<SpdMatrix, CliError> {
        self.spd(key, strictness)?.ok_or_else(|| missing(key))
    }

    fn seed(&self) -> u64 {
        self.0.seed
    }

    fn format(&self) -> Format {
        self.0.format
    }
}

fn missing(key: &str) -> CliError {
    CliError::Config(format!("--{} is required here", key.replace('_', "-")))
}

fn same_dim(what: &str, expected: usize, found: usize) -> Result<(), CliError> {
    if expected == found {
        Ok(())
    } else {
        Err(CliError::Config(format!("{what} has dimension {found}, expected {expected}")))
    }
}

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = to_json(value).expect("result types serialize");
    s.push('\n');
    s
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn csv_line<I: IntoIterator<Item = String>>(fields: I) -> String {
    let mut line = fields.into_iter().collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}_{i}"))
}

fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = csv_line(indexed("col", m.ncols()));
    for i in 0..m.nrows() {
        out.push_str(&csv_line(m.row(i).iter().map(|v| sig17(*v))));
    }
    out
}

fn vec_text(v: &[f64]) -> String {
    format!("({})", v.iter().map(|x| sig17(*x)).collect::<Vec<_>>().join(", "))
}

fn lyapunov(p: &Params) -> Result<RunOutput, CliError> {
    let a = p.required_spd("a", Strictness::Strict)?;
    let q = p.required_spd("q", Strictness::Semidefinite)?;
    same_dim("--q", a.dim(), q.dim())?;
    let eta = p.f64("eta")?;
    let batch = p.usize("batch")?;
    let method = p.choice("method", &["continuous", "discrete"])?;
    let sigma = match method {
        "continuous" => stationary_covariance(&a, &q, eta, batch).during("solve_continuous_lyapunov")?,
        _ => {
            let loss = QuadraticLoss::centered(a.clone());
            let dynamics = SgdDynamics::from_noise_cov(eta, batch, &q).invalid("dynamics")?;
            let report = stability_check(&loss, &dynamics).during("stability_check")?;
            if !report.stable {
                return Err(CliError::Numerical {
                    operation: "stability_check",
                    source: ou_pacbayes::Error::UnstableDynamics {
                        spectral_radius: report.spectral_radius,
                    },
                });
            }
            stein_stationary_covariance(&loss, &dynamics).during("solve_discrete_stein")?
        }
    };
    #[derive(Serialize)]
    struct Out<'a> {
        method: &'a str,
        eta: f64,
        batch: usize,
        trace: f64,
        sigma: Vec<Vec<f64>>,
    }
    let document = match p.format() {
        Format::Csv => matrix_csv(sigma.as_matrix()),
        Format::Json => json(&Out {
            method,
            eta,
            batch,
            trace: sigma.trace(),
            sigma: rows(sigma.as_matrix()),
        }),
    };
    Ok(RunOutput {
        document,
        summary: format!("lyapunov: method={method} dim={} trace={}", sigma.dim(), sig17(sigma.trace())),
    })
}

fn simulate(p: &Params) -> Result<RunOutput, CliError> {
    let a = p.spd("a", Strictness::Strict)?;
    let dim = a.as_ref().map_or(p.usize("dim")?, SpdMatrix::dim);
    if dim == 0 {
        return Err(CliError::Config("--dim must be positive".into()));
    }
    let a = a.unwrap_or_else(|| SpdMatrix::identity(dim));
    let eta = p.f64("eta")?;
    let batch = p.usize("batch")?;
    let dynamics = match p.matrix("b")? {
        Some(b) => {
            same_dim("--b", dim, b.nrows())?;
            SgdDynamics::new(eta, batch, b).invalid("--b")?
        }
        None => SgdDynamics::isotropic(dim, p.f64("noise_scale")?, eta, batch).invalid("dynamics")?,
    };
    let loss = QuadraticLoss::new(a, p.vector_or("minimizer", dim, 0.0)?, 0.0).invalid("loss")?;
    let init = p.vector_or("init", dim, 0.0)?;
    let allow_unstable = p.bool("allow_unstable")?;
    let stability = stability_check(&loss, &dynamics).during("stability_check")?;
    if !stability.stable && !allow_unstable {
        return Err(CliError::Numerical {
            operation: "stability_check",
            source: ou_pacbayes::Error::UnstableDynamics {
                spectral_radius: stability.spectral_radius,
            },
        });
    }
    let chain = ChainConfig {
        total_steps: p.usize("steps")?,
        stride: p.usize("stride")?,
        seed: derive_seed(p.seed(), 0),
        allow_unstable,
    };
    if chain.total_steps == 0 || chain.stride == 0 {
        return Err(CliError::Config("--steps and --stride must be positive".into()));
    }
    let trajectory = simulate_chain(&init, &loss, &dynamics, chain).during("simulate_chain")?;

    #[derive(Serialize)]
    struct Moments {
        burn_in: usize,
        mean: Vec<f64>,
        covariance: Vec<Vec<f64>>,
        stein_covariance: Vec<Vec<f64>>,
        lyapunov_covariance: Vec<Vec<f64>>,
    }
    #[derive(Serialize)]
    struct Out {
        steps: usize,
        stride: usize,
        records: usize,
        spectral_radius: f64,
        stable: bool,
        final_state: Vec<f64>,
        moments: Option<Moments>,
    }
    let moments = if stability.stable {
        let burn_in = match p.opt_usize("burn_in")? {
            Some(b) => b,
            None => default_burn_in(trajectory.len()),
        };
        let est = estimate_stationary(&trajectory, burn_in).during("estimate_stationary")?;
        Some(Moments {
            burn_in,
            mean: est.mean.iter().copied().collect(),
            covariance: rows(est.covariance.as_matrix()),
            stein_covariance: rows(stein_stationary_covariance(&loss, &dynamics).during("solve_discrete_stein")?.as_matrix()),
            lyapunov_covariance: rows(
                lyapunov_stationary_covariance(&loss, &dynamics).during("solve_continuous_lyapunov")?.as_matrix(),
            ),
        })
    } else {
        None
    };
    let document = match p.format() {
        Format::Csv => trajectory.to_csv(),
        Format::Json => json(&Out {
            steps: chain.total_steps,
            stride: chain.stride,
            records: trajectory.len(),
            spectral_radius: stability.spectral_radius,
            stable: stability.stable,
            final_state: trajectory.final_state().to_vec(),
            moments,
        }),
    };
    Ok(RunOutput {
        document,
        summary: format!(
            "simulate: steps={} records={} spectral_radius={} final_state={}",
            chain.total_steps,
            trajectory.len(),
            sig17(stability.spectral_radius),
            vec_text(trajectory.final_state())
        ),
    })
}

fn two_stage(p: &Params) -> Result<RunOutput, CliError> {
    let pt_a = p.spd("pt_a", Strictness::Strict)?;
    let dim = pt_a.as_ref().map_or(p.usize("dim")?, SpdMatrix::dim);
    if dim == 0 {
        return Err(CliError::Config("--dim must be positive".into()));
    }
    let pt_a = pt_a.unwrap_or_else(|| SpdMatrix::identity(dim));
    let ft_a = p.spd("ft_a", Strictness::Strict)?.unwrap_or_else(|| pt_a.clone());
    same_dim("--ft-a", dim, ft_a.dim())?;
    let pt_min = p.vector_or("pt_minimizer", dim, 0.0)?;
    let ft_min = p.vector("ft_minimizer", dim)?.unwrap_or_else(|| pt_min.clone());
    let eta = p.f64("eta")?;
    let batch = p.usize("batch")?;
    let pt_scale = p.f64("pt_noise_scale")?;
    let ft_scale = p.opt_f64("ft_noise_scale")?.unwrap_or(pt_scale);
    let pt_loss = QuadraticLoss::new(pt_a, pt_min, 0.0).invalid("pre-training loss")?;
    let ft_loss = QuadraticLoss::new(ft_a, ft_min, 0.0).invalid("fine-tuning loss")?;
    let pt_dyn = SgdDynamics::isotropic(dim, pt_scale, eta, batch).invalid("pre-training dynamics")?;
    let ft_dyn = SgdDynamics::isotropic(dim, ft_scale, eta, batch).invalid("fine-tuning dynamics")?;
    let init_mode = match p.choice("init_mode", &["analytic", "continue"])? {
        "analytic" => InitMode::AnalyticSample,
        _ => InitMode::ChainContinue,
    };
    let config = TwoStageConfig {
        replicas: p.usize("replicas")?,
        stride: p.usize("stride")?,
        burn_in: p.opt_usize("burn_in")?,
        master_seed: p.seed(),
        init_mode,
    };
    let result = two_stage_run(
        Stage { loss: &pt_loss, dynamics: &pt_dyn, steps: p.usize("pt_steps")? },
        Stage { loss: &ft_loss, dynamics: &ft_dyn, steps: p.usize("ft_steps")? },
        config,
    )
    .during("two_stage_run")?;
    let pt_stein = stein_stationary_covariance(&pt_loss, &pt_dyn).during("solve_discrete_stein")?;
    let ft_stein = stein_stationary_covariance(&ft_loss, &ft_dyn).during("solve_discrete_stein")?;

    #[derive(Serialize)]
    struct StageOut {
        records: usize,
        mean: Vec<f64>,
        mean_std_error: Vec<f64>,
        covariance: Vec<Vec<f64>>,
        stein_covariance: Vec<Vec<f64>>,
    }
    let stage_out = |e: &StageEstimate, stein: &SymmetricMatrix| StageOut {
        records: e.pooled.sample_count,
        mean: e.pooled.mean.iter().copied().collect(),
        mean_std_error: e.mean_std_error().iter().copied().collect(),
        covariance: rows(e.pooled.covariance.as_matrix()),
        stein_covariance: rows(stein.as_matrix()),
    };
    #[derive(Serialize)]
    struct Out {
        replicas: usize,
        pt: StageOut,
        ft: StageOut,
    }
    let out = Out {
        replicas: config.replicas,
        pt: stage_out(&result.pt_estimate, &pt_stein),
        ft: stage_out(&result.ft_estimate, &ft_stein),
    };
    let document = match p.format() {
        Format::Json => json(&out),
        Format::Csv => {
            let mut header: Vec<String> = vec!["stage".into(), "records".into()];
            header.extend(indexed("mean", dim));
            header.extend(indexed("mean_se", dim));
            for i in 0..dim {
                header.extend((0..dim).map(|j| format!("cov_{i}_{j}")));
            }
            let mut doc = csv_line(header);
            for (name, s) in [("pt", &out.pt), ("ft", &out.ft)] {
                let mut fields = vec![name.to_string(), s.records.to_string()];
                fields.extend(s.mean.iter().chain(&s.mean_std_error).map(|v| sig17(*v)));
                fields.extend(s.covariance.iter().flatten().map(|v| sig17(*v)));
                doc.push_str(&csv_line(fields));
            }
            doc
        }
    };
    Ok(RunOutput {
        document,
        summary: format!(
            "two-stage: replicas={} pt_mean={} ft_mean={}",
            config.replicas,
            vec_text(&out.pt.mean),
            vec_text(&out.ft.mean)
        ),
    })
}

fn kl(p: &Params) -> Result<RunOutput, CliError> {
    let q_cov = p.required_spd("q_cov", Strictness::Strict)?;
    let dim = q_cov.dim();
    let q = GaussianMeasure::new(p.vector_or("q_mean", dim, 0.0)?, q_cov).invalid("q")?;
    let p_cov = p.spd_or_identity("p_cov", dim)?;
    same_dim("--p-cov", dim, p_cov.dim())?;
    let prior = GaussianMeasure::new(p.vector_or("p_mean", dim, 0.0)?, p_cov).invalid("p")?;
    let count = p.usize("count")?;
    let exact = kl_divergence(&q, &prior).during("kl_divergence")?;
    let mc = mc_kl_estimate(&q, &prior, count, derive_seed(p.seed(), 0)).during("mc_kl_estimate")?;
    #[derive(Serialize)]
    struct Out {
        kl: f64,
        mc_estimate: f64,
        mc_std_error: f64,
        count: usize,
    }
    let out = Out {
        kl: exact,
        mc_estimate: mc.estimate,
        mc_std_error: mc.std_error,
        count: mc.count,
    };
    let document = match p.format() {
        Format::Json => json(&out),
        Format::Csv => {
            csv_line(["kl", "mc_estimate", "mc_std_error", "count"].map(String::from))
                + &csv_line([sig17(out.kl), sig17(out.mc_estimate), sig17(out.mc_std_error), out.count.to_string()])
        }
    };
    Ok(RunOutput {
        document,
        summary: format!(
            "kl: closed_form={} mc={} se={}",
            sig17(out.kl),
            sig17(out.mc_estimate),
            sig17(out.mc_std_error)
        ),
    })
}

fn sample_spec(p: &Params, n_key: &str) -> Result<SampleSpec, CliError> {
    SampleSpec::new(p.u64(n_key)?, p.f64("delta")?).invalid("sample spec")
}

fn domain_pair(p: &Params) -> Result<DomainPair, CliError> {
    let sigma_pt = p.required_spd("sigma_pt", Strictness::Strict)?;
    let sigma_ft = p.required_spd("sigma_ft", Strictness::Strict)?;
    let shift = p.vector_or("shift", sigma_pt.dim(), 0.0)?;
    DomainPair::new(sigma_pt, sigma_ft, shift).invalid("domain pair")
}

fn bound(p: &Params) -> Result<RunOutput, CliError> {
    let mode = p.choice("mode", &["mcallester", "pretrain", "finetune", "finetune-dim"])?;
    let spec = sample_spec(p, "n")?;
    let report = match mode {
        "mcallester" => {
            let kl = p.f64("kl")?;
            if !(kl >= 0.0 && kl.is_finite()) {
                return Err(CliError::Config(format!("--kl must be finite and non-negative, got {kl}")));
            }
            BoundReport {
                kl_term: kl,
                complexity_term: mcallester_bound(kl, &spec).during("mcallester_bound")?,
                paper_literal_kl: kl,
                notes: "mcallester: bound assumes a loss bounded in [0,1]".into(),
            }
        }
        "pretrain" => pretrain_bound(&p.required_spd("sigma_pt", Strictness::Strict)?, &spec).during("pretrain_bound")?,
        "finetune" => finetune_bound(&domain_pair(p)?, &spec).during("finetune_bound")?,
        _ => finetune_bound_dimension(&domain_pair(p)?, &spec).during("finetune_bound_dimension")?,
    };
    #[derive(Serialize)]
    struct Out<'a> {
        mode: &'a str,
        n: u64,
        delta: f64,
        #[serde(flatten)]
        report: &'a BoundReport,
    }
    let document = match p.format() {
        Format::Json => json(&Out {
            mode,
            n: spec.sample_size(),
            delta: spec.delta(),
            report: &report,
        }),
        Format::Csv => {
            csv_line(["mode", "N", "delta", "kl_term", "complexity_term", "paper_literal_kl"].map(String::from))
                + &csv_line([
                    mode.to_string(),
                    spec.sample_size().to_string(),
                    sig17(spec.delta()),
                    sig17(report.kl_term),
                    sig17(report.complexity_term),
                    sig17(report.paper_literal_kl),
                ])
        }
    };
    Ok(RunOutput {
        document,
        summary: format!("bound: {mode} complexity_term={}", sig17(report.complexity_term)),
    })
}

fn lemma_survey(p: &Params) -> Result<RunOutput, CliError> {
    let config = SurveyConfig {
        pairs: p.usize("pairs")?,
        dim_min: p.usize("dim_min")?,
        dim_max: p.usize("dim_max")?,
        eigenvalue_low: p.f64("eigen_low")?,
        eigenvalue_high: p.f64("eigen_high")?,
        shift_scale: p.f64("shift_scale")?,
        seed: p.seed(),
    };
    let table = lemma2_survey(&config).invalid("survey")?;
    let holds: usize = table.iter().map(|r| r.holds).sum();
    let total: usize = table.iter().map(|r| r.pairs).sum();
    let document = match p.format() {
        Format::Json => json(&table),
        Format::Csv => {
            let mut doc = csv_line(["dim", "pairs", "holds", "holds_fraction", "min_margin"].map(String::from));
            for r in &table {
                doc.push_str(&csv_line([
                    r.dim.to_string(),
                    r.pairs.to_string(),
                    r.holds.to_string(),
                    sig17(r.holds_fraction),
                    sig17(r.min_margin),
                ]));
            }
            doc
        }
    };
    Ok(RunOutput {
        document,
        summary: format!(
            "lemma-survey: pairs={total} holds={holds} holds_fraction={}",
            sig17(holds as f64 / total as f64)
        ),
    })
}

fn dominance(p: &Params) -> Result<RunOutput, CliError> {
    let pt_spec = sample_spec(p, "n_pt")?;
    let ft_spec = sample_spec(p, "n_ft")?;
    let report = match (p.opt_f64("kl_pt")?, p.opt_f64("kl_ft")?) {
        (Some(pt), Some(ft)) => dominance_from_terms(pt, &pt_spec, ft, &ft_spec).during("dominance_report")?,
        (None, None) => {
            let pair = domain_pair(p)?;
            dominance_report(pair.sigma_pt(), &pt_spec, &pair, &ft_spec).during("dominance_report")?
        }
        _ => return Err(CliError::Config("give both --kl-pt and --kl-ft, or covariance files".into())),
    };
    let document = match p.format() {
        Format::Json => json(&report),
        Format::Csv => {
            csv_line(["pt_term", "ft_term", "ratio"].map(String::from))
                + &csv_line([sig17(report.pt_term), sig17(report.ft_term), sig17(report.ratio)])
        }
    };
    Ok(RunOutput {
        document,
        summary: format!(
            "dominance: pt_term={} ft_term={} ratio={}",
            sig17(report.pt_term),
            sig17(report.ft_term),
            sig17(report.ratio)
        ),
    })
}

fn regression_setup(p: &Params, n: usize) -> Result<(RegressionTask, SgdDynamics), CliError> {
    let feature_cov = p.spd("feature_cov", Strictness::Strict)?;
    let dim = feature_cov.as_ref().map_or(p.usize("dim")?, SpdMatrix::dim);
    if dim == 0 {
        return Err(CliError::Config("--dim must be positive".into()));
    }
    let feature_cov = feature_cov.unwrap_or_else(|| SpdMatrix::identity(dim));
    let weights = p.vector_or("weights", dim, 1.0)?;
    let task = RegressionTask::new(weights, feature_cov, p.f64("noise_std")?, n).invalid("task")?;
    let sgd = SgdDynamics::isotropic(dim, p.f64("noise_scale")?, p.f64("eta")?, p.usize("batch")?).invalid("dynamics")?;
    Ok((task, sgd))
}

fn validity(p: &Params) -> Result<RunOutput, CliError> {
    let n = p.usize("n")?;
    let (task, sgd) = regression_setup(p, n)?;
    let spec = sample_spec(p, "n")?;
    let posterior = match p.choice("posterior", &["analytic", "simulated"])? {
        "analytic" => PosteriorMode::Analytic,
        _ => PosteriorMode::Simulated {
            steps: p.usize("steps")?,
            stride: 1,
        },
    };
    let trials = p.usize("trials")?;
    if trials < 10 {
        return Err(CliError::Config(format!("--trials must be at least 10, got {trials}")));
    }
    let result = bound_validity_experiment(
        &task,
        &sgd,
        &spec,
        &GaussianMeasure::standard(task.dim()),
        posterior,
        trials,
        p.seed(),
    )
    .during("bound_validity_experiment")?;
    let document = match p.format() {
        Format::Json => json(&result),
        Format::Csv => result.to_csv(),
    };
    Ok(RunOutput {
        document,
        summary: format!(
            "validity: violations={}/{} mean_gap={} mean_bound={}",
            result.violation_count,
            result.trials,
            sig17(result.gaps.mean),
            sig17(result.bounds.mean)
        ),
    })
}

fn scaling(p: &Params) -> Result<RunOutput, CliError> {
    let ns: Vec<usize> = p
        .raw("ns")
        .ok_or_else(|| missing("ns"))?
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| CliError::Config(format!("--ns entry {s:?} is not an integer"))))
        .collect::<Result<_, _>>()?;
    let first = *ns.first().ok_or_else(|| missing("ns"))?;
    if first == 0 {
        return Err(CliError::Config("--ns entries must be positive".into()));
    }
    let (task, sgd) = regression_setup(p, first)?;
    if ns.windows(2).any(|w| w[0] >= w[1]) || first < task.dim() {
        return Err(CliError::Config(format!(
            "--ns must be strictly increasing and at least the dimension {}",
            task.dim()
        )));
    }
    let rows = scaling_experiment(&task, &ns, &sgd, p.f64("delta")?, p.usize("trials")?, p.seed())
        .during("scaling_experiment")?;
    let document = match p.format() {
        Format::Json => json(&rows),
        Format::Csv => {
            let mut doc = csv_line(["N", "mean_bound", "mean_gap", "ratio"].map(String::from));
            for r in &rows {
                doc.push_str(&csv_line([
                    r.n.to_string(),
                    sig17(r.mean_bound),
                    sig17(r.mean_gap),
                    r.ratio.map(sig17).unwrap_or_default(),
                ]));
            }
            doc
        }
    };
    let last = rows.last().expect("non-empty grid");
    Ok(RunOutput {
        document,
        summary: format!(
            "scaling: sizes={} mean_bound_at_{}={}",
            rows.len(),
            last.n,
            sig17(last.mean_bound)
        ),
    })
}
