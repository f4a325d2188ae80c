//! PAC-Bayes bounds for the pre-training and fine-tuning stages and the two
//! domain-discrepancy measures.
//!
//! Logarithms are natural. The canonical discrepancy uses the sign that makes
//! it equal to `2·KL(Q_FT ‖ Q_PT)`; the value with the log-determinant sign
//! flipped is carried alongside in [`BoundReport::paper_literal_kl`].

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{random_spd_with, SpdMatrix};
use crate::seed::rng_from_seed;

/// Training-set size `N` and confidence parameter `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSpec {
    sample_size: u64,
    delta: f64,
}

impl SampleSpec {
    /// `N ≥ 1` and `0 < δ ≤ 1` (`δ = 1` yields a bound holding with
    /// probability ≥ 0).
    pub fn new(sample_size: u64, delta: f64) -> Result<Self> {
        if sample_size == 0 {
            return Err(Error::InvalidSpec("sample size must be at least 1".into()));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidSpec(format!("delta must lie in (0, 1], got {delta}")));
        }
        Ok(SampleSpec { sample_size, delta })
    }

    pub fn sample_size(&self) -> u64 {
        self.sample_size
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Pre-training and fine-tuning stationary covariances and the fine-tuning
/// minimizer shift. The pre-training law is centered at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainPair {
    sigma_pt: SpdMatrix,
    sigma_ft: SpdMatrix,
    shift: DVector<f64>,
}

impl DomainPair {
    pub fn new(sigma_pt: SpdMatrix, sigma_ft: SpdMatrix, shift: DVector<f64>) -> Result<Self> {
        let d = sigma_pt.dim();
        for (found, context) in [(sigma_ft.dim(), "DomainPair sigma_ft"), (shift.len(), "DomainPair shift")] {
            if found != d {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: d,
                    found,
                });
            }
        }
        for m in [&sigma_pt, &sigma_ft] {
            if !m.is_strict() {
                return Err(Error::NotPositiveDefinite {
                    min_eigenvalue: m.min_eigenvalue(),
                });
            }
        }
        Ok(DomainPair {
            sigma_pt,
            sigma_ft,
            shift,
        })
    }

    pub fn dim(&self) -> usize {
        self.sigma_pt.dim()
    }

    pub fn sigma_pt(&self) -> &SpdMatrix {
        &self.sigma_pt
    }

    pub fn sigma_ft(&self) -> &SpdMatrix {
        &self.sigma_ft
    }

    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }

    fn parts(&self) -> DiscrepancyParts {
        let trace = self
            .sigma_pt
            .solve(self.sigma_ft.as_matrix())
            .expect("strict by construction")
            .trace();
        let shift_term = self
            .sigma_pt
            .inverse_quadratic_form(&self.shift)
            .expect("strict by construction");
        let log_det = self.sigma_ft.log_det().expect("strict") - self.sigma_pt.log_det().expect("strict");
        DiscrepancyParts {
            trace,
            shift_term,
            log_det,
            dim: self.dim() as f64,
        }
    }
}

/// `tr(Σ_PT⁻¹Σ_FT)`, `θᵀΣ_PT⁻¹θ`, `ln det(Σ_PT⁻¹Σ_FT)`.
struct DiscrepancyParts {
    trace: f64,
    shift_term: f64,
    log_det: f64,
    dim: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogDetSign {
    /// `− ln det(Σ_PT⁻¹Σ_FT)`, equal to twice the Gaussian KL.
    Canonical,
    /// `+ ln det(Σ_PT⁻¹Σ_FT)`, the sign-flipped variant.
    PaperLiteral,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub kl_term: f64,
    /// The square-root addend.
    pub complexity_term: f64,
    pub paper_literal_kl: f64,
    pub notes: String,
}

/// `√((KL + ln(1/δ) + ln N + 2) / (2N − 1))`.
pub fn mcallester_bound(kl: f64, spec: &SampleSpec) -> Result<f64> {
    if !kl.is_finite() || kl < 0.0 {
        return Err(Error::InvalidSpec(format!("KL term must be finite and non-negative, got {kl}")));
    }
    let n = spec.sample_size as f64;
    Ok(((kl + (1.0 / spec.delta).ln() + n.ln() + 2.0) / (2.0 * n - 1.0)).sqrt())
}

/// Theorem form of the same addend with a doubled divergence term:
/// `√((D + 2 ln(1/δ) + 2 ln N + 4) / (4N − 2))`. Negative `D` (only possible
/// for the paper-literal sign) gives NaN when it overwhelms the other terms.
pub fn theorem_complexity(kl_term: f64, spec: &SampleSpec) -> f64 {
    let n = spec.sample_size as f64;
    ((kl_term + 2.0 * (1.0 / spec.delta).ln() + 2.0 * n.ln() + 4.0) / (4.0 * n - 2.0)).sqrt()
}

fn check_theorem_term(kl_term: f64) -> Result<()> {
    if !kl_term.is_finite() || kl_term < 0.0 {
        return Err(Error::InvalidSpec(format!(
            "divergence term must be finite and non-negative, got {kl_term}"
        )));
    }
    Ok(())
}

const UNBOUNDED_LOSS_NOTE: &str = "bound assumes a loss bounded in [0,1]";

/// Pre-training bound against the prior `N(0, I)`:
/// `kl_term = 2·KL(N(0,Σ_PT) ‖ N(0,I)) = tr(Σ_PT − I) − ln det Σ_PT`.
pub fn pretrain_bound(sigma_pt: &SpdMatrix, spec: &SampleSpec) -> Result<BoundReport> {
    let log_det = sigma_pt.log_det()?;
    let trace_part = sigma_pt.trace() - sigma_pt.dim() as f64;
    let kl_term = crate::gaussian::clamp_kl(trace_part - log_det)?;
    check_theorem_term(kl_term)?;
    Ok(BoundReport {
        kl_term,
        complexity_term: theorem_complexity(kl_term, spec),
        paper_literal_kl: log_det + trace_part,
        notes: format!(
            "pretrain: kl_term = 2*KL(N(0,Sigma_PT)||N(0,I)); paper_literal_kl uses +ln det(Sigma_PT); {UNBOUNDED_LOSS_NOTE}"
        ),
    })
}

/// `D = tr(Σ_PT⁻¹Σ_FT − I) + θᵀΣ_PT⁻¹θ ∓ ln det(Σ_PT⁻¹Σ_FT)`.
pub fn discrepancy(pair: &DomainPair, sign: LogDetSign) -> f64 {
    let p = pair.parts();
    let base = p.trace - p.dim + p.shift_term;
    match sign {
        LogDetSign::Canonical => base - p.log_det,
        LogDetSign::PaperLiteral => base + p.log_det,
    }
}

/// Canonical domain discrepancy, `2·KL(N(θ_FT, Σ_FT) ‖ N(0, Σ_PT))`.
pub fn discrepancy_d(pair: &DomainPair) -> f64 {
    discrepancy(pair, LogDetSign::Canonical)
}

/// Dimension-dependent discrepancy
/// `ln tr(Σ_PT⁻¹Σ_FT) + tr(Σ_PT⁻¹Σ_FT) + θᵀΣ_PT⁻¹θ + d ln d − d`.
pub fn discrepancy_d_tilde(pair: &DomainPair) -> f64 {
    let p = pair.parts();
    p.trace.ln() + p.trace + p.shift_term + p.dim * p.dim.ln() - p.dim
}

pub fn finetune_bound(pair: &DomainPair, spec: &SampleSpec) -> Result<BoundReport> {
    let kl_term = crate::gaussian::clamp_kl(discrepancy_d(pair))?;
    check_theorem_term(kl_term)?;
    Ok(BoundReport {
        kl_term,
        complexity_term: theorem_complexity(kl_term, spec),
        paper_literal_kl: discrepancy(pair, LogDetSign::PaperLiteral),
        notes: format!(
            "finetune: kl_term = 2*KL(Q_FT||Q_PT); paper_literal_kl uses +ln det(Sigma_PT^-1 Sigma_FT); {UNBOUNDED_LOSS_NOTE}"
        ),
    })
}

pub fn finetune_bound_dimension(pair: &DomainPair, spec: &SampleSpec) -> Result<BoundReport> {
    let d_tilde = discrepancy_d_tilde(pair);
    if !d_tilde.is_finite() {
        return Err(Error::InvalidSpec(format!("dimension-dependent discrepancy is {d_tilde}")));
    }
    // D̃ can be negative (e.g. d = 1 with Σ_FT ≪ Σ_PT); the formula is applied as is.
    Ok(BoundReport {
        kl_term: d_tilde,
        complexity_term: theorem_complexity(d_tilde, spec),
        paper_literal_kl: d_tilde,
        notes: format!("finetune-dim: kl_term = D_tilde as defined; {UNBOUNDED_LOSS_NOTE}"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma2Check {
    pub d_value: f64,
    pub d_tilde_value: f64,
    pub holds: bool,
    /// `d_tilde_value − d_value`.
    pub margin: f64,
}

/// Evaluates whether `D ≤ D̃` (with `1e-12` slack) on one pair.
pub fn lemma2_check(pair: &DomainPair) -> Lemma2Check {
    let d_value = discrepancy_d(pair);
    let d_tilde_value = discrepancy_d_tilde(pair);
    Lemma2Check {
        d_value,
        d_tilde_value,
        holds: d_value <= d_tilde_value + 1e-12,
        margin: d_tilde_value - d_value,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurveyRow {
    pub dim: usize,
    pub pairs: usize,
    pub holds: usize,
    pub holds_fraction: f64,
    pub min_margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurveyConfig {
    pub pairs: usize,
    pub dim_min: usize,
    pub dim_max: usize,
    pub eigenvalue_low: f64,
    pub eigenvalue_high: f64,
    pub shift_scale: f64,
    pub seed: u64,
}

impl Default for SurveyConfig {
    fn default() -> Self {
        SurveyConfig {
            pairs: 1000,
            dim_min: 1,
            dim_max: 10,
            eigenvalue_low: 0.1,
            eigenvalue_high: 10.0,
            shift_scale: 1.0,
            seed: 0,
        }
    }
}

/// Draws `pairs` random domain pairs (dimension uniform in
/// `[dim_min, dim_max]`, covariance spectra uniform in the eigenvalue range,
/// shift `N(0, shift_scale² I)`) and tabulates how often `D ≤ D̃` holds per
/// dimension. Dimensions that received no pair are omitted.
pub fn lemma2_survey(config: &SurveyConfig) -> Result<Vec<SurveyRow>> {
    if config.dim_min == 0 || config.dim_min > config.dim_max {
        return Err(Error::InvalidArgument(format!(
            "invalid dimension range [{}, {}]",
            config.dim_min, config.dim_max
        )));
    }
    let mut rng = rng_from_seed(config.seed);
    let span = config.dim_max - config.dim_min + 1;
    let mut rows: Vec<SurveyRow> = (config.dim_min..=config.dim_max)
        .map(|dim| SurveyRow {
            dim,
            pairs: 0,
            holds: 0,
            holds_fraction: 0.0,
            min_margin: f64::INFINITY,
        })
        .collect();
    for _ in 0..config.pairs {
        let dim = config.dim_min + rng.random_range(0..span);
        let pt = random_spd_with(dim, config.eigenvalue_low, config.eigenvalue_high, &mut rng)?;
        let ft = random_spd_with(dim, config.eigenvalue_low, config.eigenvalue_high, &mut rng)?;
        let shift = DVector::from_fn(dim, |_, _| {
            config.shift_scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
        });
        let check = lemma2_check(&DomainPair::new(pt, ft, shift)?);
        let row = &mut rows[dim - config.dim_min];
        row.pairs += 1;
        row.holds += usize::from(check.holds);
        row.min_margin = row.min_margin.min(check.margin);
    }
    rows.retain(|r| r.pairs > 0);
    for r in &mut rows {
        r.holds_fraction = r.holds as f64 / r.pairs as f64;
    }
    Ok(rows)
}

/// `¼(η/|S|) tr(C A⁻¹) − ½ ln det Σ − ½ d`. Equals
/// `KL(N(0,Σ) ‖ N(0,I))` when `Σ` solves `AΣ + ΣA = (η/|S|) C`.
pub fn kl_upper_bound_trace(
    hessian: &SpdMatrix,
    noise_cov: &SpdMatrix,
    lr: f64,
    batch_size: usize,
    sigma: &SpdMatrix,
) -> Result<f64> {
    crate::gaussian::check_rate(lr, batch_size)?;
    let d = hessian.dim();
    for (found, context) in [(noise_cov.dim(), "kl_upper_bound_trace noise_cov"), (sigma.dim(), "kl_upper_bound_trace sigma")] {
        if found != d {
            return Err(Error::DimensionMismatch {
                context,
                expected: d,
                found,
            });
        }
    }
    // tr(C A⁻¹) = tr(A⁻¹ C)
    let trace_ca_inv = hessian.solve(noise_cov.as_matrix())?.trace();
    Ok(0.25 * lr / batch_size as f64 * trace_ca_inv - 0.5 * sigma.log_det()? - 0.5 * d as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominanceReport {
    pub pt_term: f64,
    pub ft_term: f64,
    /// `ft_term / pt_term`.
    pub ratio: f64,
}

/// Compares the complexity addends of the two stages given their divergence
/// terms (each the doubled-KL `D` of the theorem form).
pub fn dominance_from_terms(
    pt_kl_term: f64,
    pt_spec: &SampleSpec,
    ft_kl_term: f64,
    ft_spec: &SampleSpec,
) -> Result<DominanceReport> {
    check_theorem_term(pt_kl_term)?;
    check_theorem_term(ft_kl_term)?;
    let pt_term = theorem_complexity(pt_kl_term, pt_spec);
    let ft_term = theorem_complexity(ft_kl_term, ft_spec);
    Ok(DominanceReport {
        pt_term,
        ft_term,
        ratio: ft_term / pt_term,
    })
}

pub fn dominance_report(
    sigma_pt: &SpdMatrix,
    pt_spec: &SampleSpec,
    pair: &DomainPair,
    ft_spec: &SampleSpec,
) -> Result<DominanceReport> {
    let pt = pretrain_bound(sigma_pt, pt_spec)?;
    let ft = finetune_bound(pair, ft_spec)?;
    Ok(DominanceReport {
        pt_term: pt.complexity_term,
        ft_term: ft.complexity_term,
        ratio: ft.complexity_term / pt.complexity_term,
    })
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::linalg::Strictness;
    use approx::assert_relative_eq;

    fn spec(n: u64, delta: f64) -> SampleSpec {
        SampleSpec::new(n, delta).unwrap()
    }

    fn diag(v: &[f64]) -> SpdMatrix {
        SpdMatrix::from_diagonal(v, Strictness::Strict).unwrap()
    }

    fn pair(pt: &[f64], ft: &[f64], shift: &[f64]) -> DomainPair {
        DomainPair::new(diag(pt), diag(ft), DVector::from_column_slice(shift)).unwrap()
    }

    // Expected values below come from a 30-digit mpmath evaluation of the
    // closed-form expressions.

    #[test]
    fn mcallester_examples() {
        assert_relative_eq!(mcallester_bound(0.0, &spec(1, 1.0)).unwrap(), std::f64::consts::SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(mcallester_bound(0.0, &spec(100, 0.05)).unwrap(), 0.219649131577441097715, epsilon = 1e-14);
        assert_relative_eq!(mcallester_bound(10.0, &spec(100, 0.05)).unwrap(), 0.313842312768898430993, epsilon = 1e-14);
    }

    #[test]
    fn invalid_specs() {
        assert!(SampleSpec::new(0, 0.05).is_err());
        assert!(SampleSpec::new(10, 0.0).is_err());
        assert!(SampleSpec::new(10, 1.5).is_err());
        assert!(mcallester_bound(-1.0, &spec(10, 0.05)).is_err());
        assert!(mcallester_bound(f64::NAN, &spec(10, 0.05)).is_err());
    }

    #[test]
    fn pretrain_examples() {
        let r = pretrain_bound(&SpdMatrix::identity(2), &spec(100, 0.05)).unwrap();
        assert_eq!(r.kl_term, 0.0);
        assert_relative_eq!(r.complexity_term, mcallester_bound(0.0, &spec(100, 0.05)).unwrap(), epsilon = 1e-15);
        let r = pretrain_bound(&diag(&[0.05, 0.025]), &spec(100, 0.05)).unwrap();
        assert_relative_eq!(r.kl_term, 4.75961172766792723106, epsilon = 1e-13);
        assert_relative_eq!(r.paper_literal_kl, -8.60961172766792727825, epsilon = 1e-13);
    }

    #[test]
    fn discrepancy_examples() {
        assert_eq!(discrepancy_d(&pair(&[2.0, 3.0], &[2.0, 3.0], &[0.0, 0.0])), 0.0);
        assert_relative_eq!(discrepancy_d(&pair(&[1.0, 1.0], &[1.0, 1.0], &[1.0, 0.0])), 1.0, epsilon = 1e-15);
        // Scalar: σ_ft/σ_pt = 2 → 2 − 1 − ln 2 (canonical), 2 − 1 + ln 2 (literal)
        let p = pair(&[1.0], &[2.0], &[0.0]);
        assert_relative_eq!(discrepancy_d(&p), 1.0 - 2f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(discrepancy(&p, LogDetSign::PaperLiteral), 1.0 + 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn d_tilde_examples() {
        assert_relative_eq!(discrepancy_d_tilde(&pair(&[1.0], &[1.0], &[0.0])), 0.0, epsilon = 1e-15);
        assert_relative_eq!(
            discrepancy_d_tilde(&pair(&[1.0, 1.0], &[1.0, 1.0], &[0.0, 0.0])),
            2.07944154167983592825,
            epsilon = 1e-14
        );
        let e = std::f64::consts::E;
        assert_relative_eq!(discrepancy_d_tilde(&pair(&[1.0], &[e], &[0.0])), e, epsilon = 1e-14);
    }

    #[test]
    fn finetune_examples() {
        let s = spec(1000, 0.05);
        let r = finetune_bound(&pair(&[1.0, 1.0], &[1.0, 1.0], &[0.0, 0.0]), &s).unwrap();
        assert_relative_eq!(r.complexity_term, mcallester_bound(0.0, &s).unwrap(), epsilon = 1e-15);
        assert_relative_eq!(r.complexity_term, 0.0771668396193370242903, epsilon = 1e-14);
        let r = finetune_bound(&pair(&[1.0, 1.0], &[1.0, 1.0], &[1.0, 0.0]), &s).unwrap();
        assert_relative_eq!(r.kl_term, 1.0, epsilon = 1e-15);
        assert_relative_eq!(r.complexity_term, 0.0787708461257573892305, epsilon = 1e-14);
        for t in [0.5, 2.0, 3.0] {
            let r = finetune_bound(&pair(&[1.0, 1.0], &[1.0, 1.0], &[t, 0.0]), &s).unwrap();
            assert_relative_eq!(r.kl_term, t * t, epsilon = 1e-14);
        }
    }

    #[test]
    fn finetune_dimension_examples() {
        let s = spec(1000, 0.05);
        let r = finetune_bound_dimension(&pair(&[1.0], &[1.0], &[0.0]), &s).unwrap();
        assert_relative_eq!(r.complexity_term, mcallester_bound(0.0, &s).unwrap(), epsilon = 1e-15);
        let r = finetune_bound_dimension(&pair(&[1.0, 1.0], &[1.0, 1.0], &[0.0, 0.0]), &s).unwrap();
        assert_relative_eq!(r.kl_term, 2.07944154167983592825, epsilon = 1e-14);
        assert_relative_eq!(r.complexity_term, 0.0804664003325565858888, epsilon = 1e-14);
    }

    #[test]
    fn lemma2_examples() {
        let c = lemma2_check(&pair(&[1.0, 1.0], &[1.0, 1.0], &[0.0, 0.0]));
        assert_eq!(c.d_value, 0.0);
        assert_relative_eq!(c.d_tilde_value, 2.07944154167983592825, epsilon = 1e-14);
        assert!(c.holds);
        let c = lemma2_check(&pair(&[1.0], &[1.0], &[0.0]));
        assert!(c.holds);
        assert!(c.margin.abs() < 1e-15);
        // Σ_FT ≪ Σ_PT in one dimension: −ln σ > ln σ, so D > D̃.
        let c = lemma2_check(&pair(&[1.0], &[0.1], &[0.0]));
        assert!(!c.holds);
    }

    #[test]
    fn lemma2_survey_table() {
        let rows = lemma2_survey(&SurveyConfig {
            pairs: 200,
            seed: 4,
            ..SurveyConfig::default()
        })
        .unwrap();
        assert_eq!(rows.iter().map(|r| r.pairs).sum::<usize>(), 200);
        for r in &rows {
            assert!((1..=10).contains(&r.dim));
            assert!((0.0..=1.0).contains(&r.holds_fraction));
        }
    }

    #[test]
    fn trace_bound_examples() {
        let i2 = SpdMatrix::identity(2);
        // η/|S| = 2 → Σ = I
        assert!(kl_upper_bound_trace(&i2, &i2, 2.0, 1, &i2).unwrap().abs() < 1e-15);
        let a = diag(&[1.0, 2.0]);
        let sigma = diag(&[0.05, 0.025]);
        let v = kl_upper_bound_trace(&a, &i2, 0.1, 1, &sigma).unwrap();
        assert_relative_eq!(v, 2.379805863833963615531, epsilon = 1e-13);
    }

    #[test]
    fn dominance_examples() {
        // Scalar σ with σ − 1 − ln σ = 1: σ ≈ 3.14619322062058
        let sigma = newton_scalar_for_unit_kl_term();
        let pt_sigma = diag(&[sigma]);
        let r = pretrain_bound(&pt_sigma, &spec(1, 0.5)).unwrap();
        assert_relative_eq!(r.kl_term, 1.0, epsilon = 1e-12);
        let p = pair(&[1.0], &[1.0], &[1.0]);
        let rep = dominance_report(&pt_sigma, &spec(1_000_000, 0.05), &p, &spec(1000, 0.05)).unwrap();
        assert_relative_eq!(rep.pt_term, 0.00310735035739007942575, epsilon = 1e-12);
        assert_relative_eq!(rep.ft_term, 0.0787708461257573892305, epsilon = 1e-12);
        assert!((rep.ratio - 25.35).abs() <= 0.01, "{}", rep.ratio);
        let same = dominance_from_terms(1.0, &spec(1000, 0.05), 1.0, &spec(1000, 0.05)).unwrap();
        assert_eq!(same.ratio, 1.0);
    }

    fn newton_scalar_for_unit_kl_term() -> f64 {
        let mut s = 3.0_f64;
        for _ in 0..50 {
            s -= (s - 1.0 - s.ln() - 1.0) / (1.0 - 1.0 / s);
        }
        s
    }

    #[test]
    fn report_serializes_with_expected_keys() {
        let r = pretrain_bound(&SpdMatrix::identity(1), &spec(100, 0.05)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&crate::format::to_json(&r).unwrap()).unwrap();
        for key in ["kl_term", "complexity_term", "paper_literal_kl", "notes"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn pair_validation() {
        assert!(DomainPair::new(diag(&[1.0]), diag(&[1.0, 1.0]), DVector::zeros(1)).is_err());
        assert!(DomainPair::new(diag(&[1.0]), diag(&[1.0]), DVector::zeros(2)).is_err());
        let semi = SpdMatrix::from_diagonal(&[1.0, 0.0], Strictness::Semidefinite).unwrap();
        assert!(DomainPair::new(semi, diag(&[1.0, 1.0]), DVector::zeros(2)).is_err());
    }
}
