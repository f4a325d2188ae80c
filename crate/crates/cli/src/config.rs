//! Run configuration: subcommand schema, command-line parsing and TOML
//! config files. Values are merged as defaults < config file < flags.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches, Command};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Lyapunov,
    Simulate,
    TwoStage,
    Kl,
    Bound,
    LemmaSurvey,
    Dominance,
    Validity,
    Scaling,
}

impl Subcommand {
    pub const ALL: [Subcommand; 9] = [
        Subcommand::Lyapunov,
        Subcommand::Simulate,
        Subcommand::TwoStage,
        Subcommand::Kl,
        Subcommand::Bound,
        Subcommand::LemmaSurvey,
        Subcommand::Dominance,
        Subcommand::Validity,
        Subcommand::Scaling,
    ];

    pub fn name(self) -> &'static str {
        self.spec().name
    }

    pub fn from_name(name: &str) -> Option<Subcommand> {
        Subcommand::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn spec(self) -> &'static SubcommandSpec {
        &SCHEMA[self as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn parse(s: &str) -> Result<Format, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::Config(format!("format must be csv or json, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Required,
    Optional,
    Default(&'static str),
    /// Boolean switch, `false` unless given.
    Switch,
}

#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    /// Config-file key; the flag is the same name with `-` for `_`.
    pub key: &'static str,
    pub kind: ParamKind,
    pub help: &'static str,
}

#[derive(Debug)]
pub struct SubcommandSpec {
    pub name: &'static str,
    pub about: &'static str,
    pub params: &'static [ParamSpec],
}

const fn req(key: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { key, kind: ParamKind::Required, help }
}

const fn opt(key: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { key, kind: ParamKind::Optional, help }
}

const fn def(key: &'static str, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { key, kind: ParamKind::Default(default), help }
}

const fn switch(key: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { key, kind: ParamKind::Switch, help }
}

/// Indexed by `Subcommand as usize`.
pub static SCHEMA: [SubcommandSpec; 9] = [
    SubcommandSpec {
        name: "lyapunov",
        about: "Stationary covariance of the SGD dynamics for a Hessian A and noise covariance Q",
        params: &[
            req("a", "Hessian matrix file"),
            req("q", "gradient-noise covariance matrix file"),
            def("eta", "1", "learning rate"),
            def("batch", "1", "batch size"),
            def("method", "continuous", "continuous (AΣ + ΣA = (η/|S|)Q) or discrete (exact Stein equation of the chain)"),
        ],
    },
    SubcommandSpec {
        name: "simulate",
        about: "Simulate one SGD chain on a quadratic loss",
        params: &[
            opt("a", "Hessian matrix file [default: identity of size --dim]"),
            opt("b", "noise factor matrix file [default: noise-scale times identity]"),
            def("dim", "2", "dimension when no matrix file is given"),
            opt("minimizer", "minimizer vector, comma separated [default: zeros]"),
            opt("init", "initial state, comma separated [default: zeros]"),
            def("eta", "0.1", "learning rate"),
            def("batch", "1", "batch size"),
            def("noise_scale", "1", "isotropic noise scale when --b is absent"),
            def("steps", "10000", "number of SGD steps"),
            def("stride", "1", "record every stride-th state"),
            opt("burn_in", "records discarded before moment estimation [default: half]"),
            switch("allow_unstable", "run even when the spectral radius of I - ηA is at least 1"),
        ],
    },
    SubcommandSpec {
        name: "two-stage",
        about: "Pre-training then fine-tuning chains pooled over independent replicas",
        params: &[
            def("dim", "2", "dimension when no matrix file is given"),
            opt("pt_a", "pre-training Hessian file [default: identity]"),
            opt("pt_minimizer", "pre-training minimizer [default: zeros]"),
            def("pt_noise_scale", "1", "pre-training isotropic noise scale"),
            opt("ft_a", "fine-tuning Hessian file [default: the pre-training Hessian]"),
            opt("ft_minimizer", "fine-tuning minimizer [default: the pre-training minimizer]"),
            opt("ft_noise_scale", "fine-tuning noise scale [default: the pre-training scale]"),
            def("eta", "0.1", "learning rate of both stages"),
            def("batch", "1", "batch size of both stages"),
            def("pt_steps", "20000", "pre-training steps per replica"),
            def("ft_steps", "20000", "fine-tuning steps per replica"),
            def("replicas", "8", "independent replicas"),
            def("stride", "1", "record every stride-th state"),
            opt("burn_in", "records discarded per replica and stage [default: half]"),
            def("init_mode", "analytic", "fine-tuning initialization: analytic or continue"),
        ],
    },
    SubcommandSpec {
        name: "kl",
        about: "Closed-form KL(q || p) between Gaussians next to a Monte-Carlo estimate",
        params: &[
            req("q_cov", "covariance file of q"),
            opt("q_mean", "mean of q [default: zeros]"),
            opt("p_cov", "covariance file of p [default: identity]"),
            opt("p_mean", "mean of p [default: zeros]"),
            def("count", "100000", "Monte-Carlo draws"),
        ],
    },
    SubcommandSpec {
        name: "bound",
        about: "PAC-Bayes complexity terms",
        params: &[
            def("mode", "mcallester", "mcallester, pretrain, finetune or finetune-dim"),
            opt("kl", "KL divergence (mcallester mode)"),
            req("n", "sample size N"),
            def("delta", "0.05", "confidence parameter in (0, 1]"),
            opt("sigma_pt", "pre-training stationary covariance file"),
            opt("sigma_ft", "fine-tuning stationary covariance file"),
            opt("shift", "shift between minimizers [default: zeros]"),
        ],
    },
    SubcommandSpec {
        name: "lemma-survey",
        about: "Tabulate how often the dimension-based discrepancy dominates the exact one",
        params: &[
            def("pairs", "1000", "random domain pairs"),
            def("dim_min", "1", "smallest dimension"),
            def("dim_max", "10", "largest dimension"),
            def("eigen_low", "0.1", "lower end of covariance spectra"),
            def("eigen_high", "10", "upper end of covariance spectra"),
            def("shift_scale", "1", "standard deviation of shift coordinates"),
        ],
    },
    SubcommandSpec {
        name: "dominance",
        about: "Compare pre-training and fine-tuning complexity terms",
        params: &[
            opt("kl_pt", "pre-training divergence term"),
            opt("kl_ft", "fine-tuning divergence term"),
            opt("sigma_pt", "pre-training covariance file (matrix mode)"),
            opt("sigma_ft", "fine-tuning covariance file (matrix mode)"),
            opt("shift", "shift between minimizers (matrix mode) [default: zeros]"),
            def("n_pt", "1000000", "pre-training sample size"),
            def("n_ft", "1000", "fine-tuning sample size"),
            def("delta", "0.05", "confidence parameter"),
        ],
    },
    SubcommandSpec {
        name: "validity",
        about: "Count violations of the PAC-Bayes bound over independent regression trials",
        params: &[
            def("dim", "2", "feature dimension"),
            def("n", "100", "training sample size"),
            def("noise_std", "1", "label noise standard deviation"),
            opt("weights", "true weights [default: ones]"),
            opt("feature_cov", "feature covariance file [default: identity]"),
            def("delta", "0.05", "confidence parameter"),
            def("trials", "200", "independent trials"),
            def("eta", "0.1", "learning rate"),
            def("batch", "1", "batch size"),
            def("noise_scale", "1", "isotropic gradient-noise scale"),
            def("posterior", "analytic", "analytic or simulated"),
            def("steps", "100000", "chain length in simulated mode"),
        ],
    },
    SubcommandSpec {
        name: "scaling",
        about: "Mean bound and mean gap across sample sizes",
        params: &[
            def("ns", "100,400,1600,6400", "strictly increasing sample sizes"),
            def("trials", "20", "trials per sample size"),
            def("dim", "2", "feature dimension"),
            def("noise_std", "1", "label noise standard deviation"),
            opt("weights", "true weights [default: ones]"),
            opt("feature_cov", "feature covariance file [default: identity]"),
            def("delta", "0.05", "confidence parameter"),
            def("eta", "0.1", "learning rate"),
            def("batch", "1", "batch size"),
            def("noise_scale", "1", "isotropic gradient-noise scale"),
        ],
    },
];

const COMMON_KEYS: [&str; 3] = ["seed", "output", "format"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    /// Every schema key with a value, after merging defaults.
    pub parameters: BTreeMap<String, String>,
    pub seed: u64,
    /// Results go to stdout when absent.
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    /// Builds a config from explicit values, applying schema defaults and
    /// rejecting unknown or missing keys.
    pub fn new(
        subcommand: Subcommand,
        values: BTreeMap<String, String>,
        seed: u64,
        output_path: Option<PathBuf>,
        format: Format,
    ) -> Result<RunConfig, CliError> {
        let spec = subcommand.spec();
        for key in values.keys() {
            if !spec.params.iter().any(|p| p.key == key) {
                return Err(CliError::Config(format!("unknown key {key:?} for {}", spec.name)));
            }
        }
        let mut parameters = BTreeMap::new();
        for p in spec.params {
            match (values.get(p.key), p.kind) {
                (Some(v), _) => {
                    parameters.insert(p.key.to_string(), v.clone());
                }
                (None, ParamKind::Default(d)) => {
                    parameters.insert(p.key.to_string(), d.to_string());
                }
                (None, ParamKind::Switch) => {
                    parameters.insert(p.key.to_string(), "false".to_string());
                }
                (None, ParamKind::Required) => {
                    return Err(CliError::Config(format!("{} requires --{}", spec.name, flag_name(p.key))));
                }
                (None, ParamKind::Optional) => {}
            }
        }
        Ok(RunConfig {
            subcommand,
            parameters,
            seed,
            output_path,
            format,
        })
    }
}

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

fn describe(p: &ParamSpec) -> String {
    match p.kind {
        ParamKind::Required => format!("{} (required)", p.help),
        ParamKind::Default(d) => format!("{} [default: {d}]", p.help),
        _ => p.help.to_string(),
    }
}

pub fn command() -> Command {
    let common = [
        Arg::new("seed")
            .long("seed")
            .value_name("SEED")
            .help("master seed for all randomness [default: 0]"),
        Arg::new("output")
            .long("output")
            .value_name("PATH")
            .help("output file [default: stdout, summary on stderr]"),
        Arg::new("format")
            .long("format")
            .value_name("FORMAT")
            .help("csv or json [default: csv]"),
        Arg::new("config")
            .long("config")
            .value_name("PATH")
            .help("TOML file with flat key = value pairs; flags override its values"),
    ];
    let mut cmd = Command::new("ou-pacbayes")
        .about("PAC-Bayes bounds for SGD modeled as an Ornstein-Uhlenbeck process")
        .version(env!("CARGO_PKG_VERSION"))
        .after_help(
            "Values come from schema defaults, then the --config file, then flags; flags win.\n\
             Every random stream is derived from --seed with splitmix64(seed + (k+1)*0x9E3779B97F4A7C15).\n\
             Exit codes: 0 ok, 1 write failure, 2 invalid configuration, 3 numerical failure.",
        )
        .subcommand_required(true)
        .arg_required_else_help(true);
    for spec in &SCHEMA {
        let mut sub = Command::new(spec.name)
            .about(spec.about)
            .after_help("Flags override values from --config.")
            .args(common.clone());
        for p in spec.params {
            let arg = Arg::new(p.key)
                .long(flag_name(p.key))
                .value_name(p.key.to_uppercase())
                .help(describe(p));
            let arg = if p.kind == ParamKind::Switch {
                arg.action(ArgAction::SetTrue)
            } else {
                arg.allow_negative_numbers(true)
            };
            sub = sub.arg(arg);
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

/// Parses a full argument list (program name first). Clap's own errors,
/// including help and version requests, are returned untouched.
pub fn parse_args<I, T>(args: I) -> Result<Result<RunConfig, CliError>, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = command().try_get_matches_from(args)?;
    let (name, sub) = matches.subcommand().expect("subcommand required");
    Ok(from_matches(name, sub))
}

fn from_matches(name: &str, m: &ArgMatches) -> Result<RunConfig, CliError> {
    let subcommand = Subcommand::from_name(name).expect("registered subcommand");
    let mut values = match m.get_one::<String>("config") {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config {path}: {e}")))?;
            read_toml(&text, subcommand)?
        }
        None => BTreeMap::new(),
    };
    for key in COMMON_KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            values.insert(key.to_string(), v.clone());
        }
    }
    for p in subcommand.spec().params {
        if m.value_source(p.key) != Some(ValueSource::CommandLine) {
            continue;
        }
        let value = if p.kind == ParamKind::Switch {
            "true".to_string()
        } else {
            m.get_one::<String>(p.key).expect("value present").clone()
        };
        values.insert(p.key.to_string(), value);
    }
    let seed = match values.remove("seed") {
        Some(s) => s
            .parse()
            .map_err(|_| CliError::Config(format!("seed must be a non-negative integer, got {s:?}")))?,
        None => 0,
    };
    let output_path = values.remove("output").map(PathBuf::from);
    let format = Format::parse(values.remove("format").as_deref().unwrap_or("csv"))?;
    RunConfig::new(subcommand, values, seed, output_path, format)
}

/// Reads a flat TOML table. Arrays become comma-joined lists.
pub fn read_toml(text: &str, subcommand: Subcommand) -> Result<BTreeMap<String, String>, CliError> {
    let table: toml::Table = text.parse().map_err(|e| CliError::Config(format!("config file: {e}")))?;
    let spec = subcommand.spec();
    let mut out = BTreeMap::new();
    for (key, value) in table {
        if !COMMON_KEYS.contains(&key.as_str()) && !spec.params.iter().any(|p| p.key == key) {
            return Err(CliError::Config(format!("unknown config key {key:?} for {}", spec.name)));
        }
        out.insert(key.clone(), scalar_string(&key, &value)?);
    }
    Ok(out)
}

fn scalar_string(key: &str, value: &toml::Value) -> Result<String, CliError> {
    match value {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(format!("{f:?}")),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        toml::Value::Array(items) => items
            .iter()
            .map(|v| scalar_string(key, v))
            .collect::<Result<Vec<_>, _>>()
            .map(|parts| parts.join(",")),
        _ => Err(CliError::Config(format!("config key {key:?} must be a scalar or array"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_order_matches_enum() {
        for s in Subcommand::ALL {
            assert_eq!(Subcommand::from_name(s.name()), Some(s));
        }
    }

    #[test]
    fn defaults_and_flags() {
        let cfg = parse_args(["x", "bound", "--kl", "0", "--n", "100"]).unwrap().unwrap();
        assert_eq!(cfg.subcommand, Subcommand::Bound);
        assert_eq!(cfg.parameters["delta"], "0.05");
        assert_eq!(cfg.parameters["kl"], "0");
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.format, Format::Csv);
    }

    #[test]
    fn missing_required_key() {
        let err = parse_args(["x", "bound", "--kl", "0"]).unwrap().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_flag_is_clap_error() {
        assert!(parse_args(["x", "bound", "--bogus", "1"]).is_err());
    }

    #[test]
    fn toml_values_and_rejection() {
        let v = read_toml("n = 100\nkl = 0.5\nns = [1, 2]\nseed = 3\n", Subcommand::Bound);
        assert!(v.is_err());
        let v = read_toml("n = 100\nkl = 0.5\nseed = 3\n", Subcommand::Bound).unwrap();
        assert_eq!(v["n"], "100");
        assert_eq!(v["kl"], "0.5");
        let v = read_toml("ns = [100, 400]\n", Subcommand::Scaling).unwrap();
        assert_eq!(v["ns"], "100,400");
    }

    #[test]
    fn negative_numbers_accepted() {
        let cfg = parse_args(["x", "bound", "--kl", "-1", "--n", "10"]).unwrap().unwrap();
        assert_eq!(cfg.parameters["kl"], "-1");
    }

    #[test]
    fn switch_parameter() {
        let cfg = parse_args(["x", "simulate", "--allow-unstable"]).unwrap().unwrap();
        assert_eq!(cfg.parameters["allow_unstable"], "true");
        let cfg = parse_args(["x", "simulate"]).unwrap().unwrap();
        assert_eq!(cfg.parameters["allow_unstable"], "false");
    }
}
