//! Monte Carlo estimation of `p`-norms and probabilities, equality-dynamics
//! test quadruples `(X, A, H, M)`, and empirical checks of every bound.
//!
//! Trials run in parallel, each on its own [`TrialKey`]; per-trial results
//! are collected in trial order and reduced sequentially, so reports do not
//! depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bounds::{
    concave_bound, expected_g_rhs, g_sup_norm_rhs, random_a_check_values, HCase, IncreasingProcess, Variant,
};
use crate::error::{check_p, Error, Result};
use crate::ext::ExtReal;
use crate::gtransform::GTransform;
use crate::levy::{generate, grid_steps, LevyConfig};
use crate::nonlinearity::EtaSpec;
use crate::path::CadlagPath;
use crate::quadrature::integrate_log;
use crate::rng::{standard_normal, uniform, Purpose, TrialKey};
use crate::sde::{coupled_pair, euler_simulate, SdeModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n: usize,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::Argument("no samples".into()));
    }
    if let Some(s) = samples.iter().find(|s| !s.is_finite()) {
        return Err(Error::Argument(format!("non-finite sample {s}")));
    }
    Ok(())
}

/// Sample mean with its standard error.
pub fn estimate_mean(samples: &[f64]) -> Result<McEstimate> {
    check_samples(samples)?;
    let (mean, var) = mean_var(samples);
    Ok(McEstimate { estimate: mean, std_error: (var / samples.len() as f64).sqrt(), n: samples.len() })
}

/// `(mean |s|^p)^{1/p}` with a delta-method standard error.
pub fn estimate_p_norm(samples: &[f64], p: f64) -> Result<McEstimate> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Argument(format!("p = {p} must lie in (0, 1]")));
    }
    check_samples(samples)?;
    let powered: Vec<f64> = samples.iter().map(|s| s.abs().powf(p)).collect();
    let (m, var) = mean_var(&powered);
    let n = samples.len();
    if m == 0.0 {
        return Ok(McEstimate { estimate: 0.0, std_error: 0.0, n });
    }
    let estimate = m.powf(1.0 / p);
    // d/dm m^{1/p} = m^{1/p - 1} / p
    let std_error = estimate / (p * m) * (var / n as f64).sqrt();
    Ok(McEstimate { estimate, std_error, n })
}

/// `||Z||_p` from `E[Z^p] = p int_0^inf P[Z >= u] u^{p-1} du`, integrating the
/// empirical survival function piece by piece.
pub fn layer_cake_p_norm(samples: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Argument(format!("p = {p} must lie in (0, 1]")));
    }
    check_samples(samples)?;
    let mut sorted: Vec<f64> = samples.iter().map(|s| s.abs()).filter(|&s| s > 0.0).collect();
    sorted.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let density = |u: f64| p * u.powf(p - 1.0);
    let mut total = 0.0;
    let mut lo = 0.0;
    let mut remaining = sorted.len();
    let mut i = 0;
    while i < sorted.len() {
        let hi = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == hi {
            j += 1;
        }
        let survival = remaining as f64 / n;
        let piece = if lo == 0.0 {
            // the missing head int_0^{eps hi} is (eps hi)^p <= 1e-14 hi^p
            let eps = 1e-14f64.powf(1.0 / p);
            integrate_log(density, eps * hi, hi, 1e-12, &[])? + (eps * hi).powf(p)
        } else {
            integrate_log(density, lo, hi, 1e-12, &[])?
        };
        total += survival * piece;
        remaining -= j - i;
        lo = hi;
        i = j;
    }
    Ok(total.powf(1.0 / p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// How an estimate is compared with its reference value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Comparison {
    /// One-sided test of `estimate <= bound` at the report's confidence level.
    UpperBound,
    /// Two-sided agreement within `sigmas` standard errors.
    Match { sigmas: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub quantity_tag: String,
    pub estimate: f64,
    pub std_error: f64,
    pub n_trials: u64,
    pub base_seed: u64,
    pub ci_level: f64,
    pub theoretical_bound: ExtReal,
    /// Grid-bias allowance added to the bound before testing.
    pub slack: f64,
    pub comparison: Comparison,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// One-sided normal quantile.
pub fn z_quantile(ci_level: f64) -> Result<f64> {
    if !(ci_level > 0.5 && ci_level < 1.0) {
        return Err(Error::Argument(format!("confidence level {ci_level} must lie in (0.5, 1)")));
    }
    let normal = Normal::new(0.0, 1.0).map_err(|e| Error::Argument(e.to_string()))?;
    Ok(normal.inverse_cdf(ci_level))
}

/// PASS iff `estimate + z se <= bound`, FAIL iff `estimate - z se > bound`.
pub fn upper_verdict(estimate: f64, std_error: f64, bound: ExtReal, z: f64) -> Verdict {
    if bound >= estimate + z * std_error {
        Verdict::Pass
    } else if bound < estimate - z * std_error {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

/// Grid-bias allowance `3 / sqrt(n) * max(1, |bound|)`.
pub fn grid_slack(n_per_unit: u32, bound: ExtReal) -> f64 {
    let scale = bound.finite().map_or(1.0, |b| b.abs().max(1.0));
    3.0 / (n_per_unit as f64).sqrt() * scale
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    pub trials: u64,
    pub base_seed: u64,
    /// Worker threads; 0 uses the ambient rayon pool.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_ci")]
    pub ci_level: f64,
}

fn default_ci() -> f64 {
    0.99
}

impl McSettings {
    pub fn new(trials: u64, base_seed: u64) -> Self {
        McSettings { trials, base_seed, workers: 0, ci_level: 0.99 }
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    fn report(
        &self,
        quantity_tag: impl Into<String>,
        est: McEstimate,
        bound: ExtReal,
        slack: f64,
        warnings: Vec<String>,
    ) -> Result<McReport> {
        let z = z_quantile(self.ci_level)?;
        Ok(McReport {
            quantity_tag: quantity_tag.into(),
            estimate: est.estimate,
            std_error: est.std_error,
            n_trials: self.trials,
            base_seed: self.base_seed,
            ci_level: self.ci_level,
            theoretical_bound: bound,
            slack,
            comparison: Comparison::UpperBound,
            verdict: upper_verdict(est.estimate, est.std_error, bound + slack, z),
            warnings,
        })
    }
}

/// Runs `f` once per trial and returns the results in trial order.
pub fn run_trials<T, F>(settings: &McSettings, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(TrialKey) -> Result<T> + Sync + Send,
{
    if settings.trials == 0 {
        return Err(Error::Argument("at least one trial is required".into()));
    }
    let seed = settings.base_seed;
    let body = || (0..settings.trials).into_par_iter().map(|i| f(TrialKey::new(seed, i))).collect();
    if settings.workers == 0 {
        body()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(settings.workers)
            .build()
            .map_err(|e| Error::Argument(format!("cannot start {} workers: {e}", settings.workers)))?
            .install(body)
    }
}

/// Law of the integrator of a test quadruple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntegratorSpec {
    Deterministic {
        #[serde(default)]
        rate: f64,
        #[serde(default)]
        jumps: Vec<(f64, f64)>,
    },
    /// `A_t = Theta t` with `Theta` drawn per trial from a discrete law.
    RandomScale { values: Vec<f64>, probs: Vec<f64> },
}

impl IntegratorSpec {
    pub fn deterministic(a: IncreasingProcess) -> Self {
        IntegratorSpec::Deterministic { rate: a.rate, jumps: a.jumps }
    }

    fn validate(&self) -> Result<()> {
        match self {
            IntegratorSpec::Deterministic { rate, jumps } => {
                IncreasingProcess { rate: *rate, jumps: jumps.clone() }.validate()
            }
            IntegratorSpec::RandomScale { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(Error::Argument("random scale needs matching non-empty values and probs".into()));
                }
                if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || probs.iter().any(|p| !(*p > 0.0)) {
                    return Err(Error::Argument("random scale values must be >= 0 and probs > 0".into()));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Argument(format!("random scale probs sum to {total}, not 1")));
                }
                Ok(())
            }
        }
    }
}

fn one() -> f64 {
    1.0
}

/// Equality-dynamics quadruple
/// `X_{k+1} = X_k + eta(X*_k) dA_k + kappa (X_k - floor) dB_k`, `X_0 = h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadrupleConfig {
    pub eta: EtaSpec,
    pub a: IntegratorSpec,
    #[serde(default = "one")]
    pub h: f64,
    #[serde(default)]
    pub kappa: f64,
    pub n_per_unit: u32,
    #[serde(default = "one")]
    pub t_end: f64,
    /// Lower barrier; the noise vanishes there, so `X >= floor` whenever `h >= floor`.
    #[serde(default)]
    pub floor: f64,
}

impl QuadrupleConfig {
    pub fn new(eta: EtaSpec, a: IntegratorSpec, h: f64, kappa: f64, n_per_unit: u32, t_end: f64) -> Self {
        QuadrupleConfig { eta, a, h, kappa, n_per_unit, t_end, floor: 0.0 }
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.a.validate()?;
        grid_steps(self.n_per_unit, self.t_end)?;
        if !(self.h >= 0.0 && self.h.is_finite()) || !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::Argument("h and kappa must be finite and non-negative".into()));
        }
        if !(self.floor >= 0.0 && self.floor <= self.h) {
            return Err(Error::Argument(format!("floor {} must lie in [0, h = {}]", self.floor, self.h)));
        }
        Ok(())
    }

    fn deterministic_a(&self) -> Option<IncreasingProcess> {
        match &self.a {
            IntegratorSpec::Deterministic { rate, jumps } => {
                Some(IncreasingProcess { rate: *rate, jumps: jumps.clone() })
            }
            IntegratorSpec::RandomScale { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadrupleSample {
    pub path: CadlagPath,
    pub a_t: f64,
    pub h_t: f64,
    pub sup_x: f64,
    pub x_t: f64,
    /// Number of steps at which the floor clamp was active.
    pub clamped: usize,
}

pub fn simulate_quadruple(cfg: &QuadrupleConfig, key: TrialKey) -> Result<QuadrupleSample> {
    cfg.validate()?;
    let n = cfg.n_per_unit;
    let steps = grid_steps(n, cfg.t_end)?;
    let a = match &cfg.a {
        IntegratorSpec::Deterministic { rate, jumps } => {
            IncreasingProcess { rate: *rate, jumps: jumps.clone() }.sample(n, steps)
        }
        IntegratorSpec::RandomScale { values, probs } => {
            let u = uniform(&mut key.stream(Purpose::Scenario));
            let mut acc = 0.0;
            let idx = probs
                .iter()
                .position(|p| {
                    acc += p;
                    u < acc
                })
                .unwrap_or(values.len() - 1);
            IncreasingProcess::linear(values[idx]).sample(n, steps)
        }
    };
    let sd = (1.0 / n as f64).sqrt();
    let mut bm = key.stream(Purpose::Brownian);
    let mut x = cfg.h;
    let mut sup = x;
    let mut values = Vec::with_capacity(steps + 1);
    values.push(x);
    let mut clamped = 0;
    for k in 0..steps {
        let db = sd * standard_normal(&mut bm);
        let mut next = x + cfg.eta.eval(sup)? * (a[k + 1] - a[k]) + cfg.kappa * (x - cfg.floor) * db;
        if next < cfg.floor {
            next = cfg.floor;
            clamped += 1;
        }
        x = next;
        sup = sup.max(x);
        values.push(x);
    }
    if !x.is_finite() {
        return Err(Error::NonFinite { t: cfg.t_end, coefficient: "quadruple state" });
    }
    Ok(QuadrupleSample {
        path: CadlagPath::from_scalars(n, values)?,
        a_t: a[steps],
        h_t: cfg.h,
        sup_x: sup,
        x_t: x,
        clamped,
    })
}

/// Scalar summaries of one quadruple trial, without the path.
#[derive(Debug, Clone, Copy)]
struct QuadrupleSummary {
    a_t: f64,
    sup_x: f64,
    x_t: f64,
    clamped: usize,
}

fn summaries(cfg: &QuadrupleConfig, settings: &McSettings) -> Result<Vec<QuadrupleSummary>> {
    run_trials(settings, |key| {
        simulate_quadruple(cfg, key).map(|s| QuadrupleSummary {
            a_t: s.a_t,
            sup_x: s.sup_x,
            x_t: s.x_t,
            clamped: s.clamped,
        })
    })
}

fn clamp_warning(rows: &[QuadrupleSummary]) -> Vec<String> {
    let clamped: usize = rows.iter().map(|r| r.clamped).sum();
    if clamped > 0 {
        vec![format!("floor clamp was active on {clamped} steps")]
    } else {
        Vec::new()
    }
}

/// `||X*_T||_p` against the sharp concave bound with `||H||_p = ||H||_1 = h`.
pub fn verify_concave_bound(
    cfg: &QuadrupleConfig,
    p: f64,
    hcase: HCase,
    variant: Variant,
    settings: &McSettings,
) -> Result<McReport> {
    let a = cfg
        .deterministic_a()
        .ok_or_else(|| Error::Argument("the concave bound needs a deterministic integrator".into()))?;
    let t = GTransform::new(cfg.eta.clone())?;
    let bound = concave_bound(&t, p, hcase, variant, cfg.h, a.value(cfg.t_end))?;
    let rows = summaries(cfg, settings)?;
    let sups: Vec<f64> = rows.iter().map(|r| r.sup_x).collect();
    let est = estimate_p_norm(&sups, p)?;
    let mut warnings = bound.warnings.clone();
    warnings.extend(clamp_warning(&rows));
    let slack = grid_slack(cfg.n_per_unit, bound.value);
    settings.report(format!("||X*_T||_{p} vs {}", bound.theorem_tag), est, bound.value, slack, warnings)
}

/// Mean of `G^{-1}(G(kappa H) + beta' A_T)^{-q} (X*_T)^p` against `q / (q - p) (kappa H)^{p - q}`.
#[allow(clippy::too_many_arguments)]
pub fn verify_random_integrator(
    cfg: &QuadrupleConfig,
    p: f64,
    q: f64,
    hcase: HCase,
    variant: Variant,
    settings: &McSettings,
) -> Result<McReport> {
    check_p(p)?;
    if !(q > p) {
        return Err(Error::Argument(format!("q = {q} must exceed p = {p}")));
    }
    let t = GTransform::new(cfg.eta.clone())?;
    let rows = summaries(cfg, settings)?;
    let mut stats = Vec::with_capacity(rows.len());
    let mut rhs = 0.0;
    for r in &rows {
        let (w, b) = random_a_check_values(&t, p, q, hcase, variant, cfg.h, r.a_t, r.sup_x)?;
        stats.push(w);
        rhs = b;
    }
    let est = estimate_mean(&stats)?;
    let bound = ExtReal::Finite(rhs);
    let slack = grid_slack(cfg.n_per_unit, bound);
    let tag = format!("E[G^-1(G(kH)+bA)^-{q} X*^{p}] random-integrator/{}/{}", variant.tag(), hcase.tag());
    settings.report(tag, est, bound, slack, clamp_warning(&rows))
}

/// The two general-`eta` checks: `E[G(X_T)] <= E[A_T] + G(E[H])` and
/// `||G(X*_T)||_p <= alpha1 alpha2 ||A_T + G(E[H])||_p` (the latter needs `X >= c`).
pub fn verify_general_eta(cfg: &QuadrupleConfig, p: f64, settings: &McSettings) -> Result<Vec<McReport>> {
    check_p(p)?;
    let t = GTransform::new(cfg.eta.clone())?;
    let rows = summaries(cfg, settings)?;
    let mut warnings = clamp_warning(&rows);
    if cfg.floor < t.anchor() {
        warnings.push(format!(
            "floor {} lies below the anchor c = {}; X >= c is not enforced",
            cfg.floor,
            t.anchor()
        ));
    }

    let g_of = |x: f64| -> Result<f64> {
        t.g(x)?
            .finite()
            .ok_or_else(|| Error::Argument(format!("G({x}) is not finite")))
    };
    let g_terminal: Vec<f64> = rows.iter().map(|r| g_of(r.x_t)).collect::<Result<_>>()?;
    let a_samples: Vec<f64> = rows.iter().map(|r| r.a_t).collect();
    let e_a = a_samples.iter().sum::<f64>() / a_samples.len() as f64;
    let bound_i = expected_g_rhs(&t, e_a, cfg.h)?;
    let est_i = estimate_mean(&g_terminal)?;
    let report_i = settings.report(
        "E[G(X_T)] vs E[A_T] + G(E[H])",
        est_i,
        bound_i,
        grid_slack(cfg.n_per_unit, bound_i),
        clamp_warning(&rows),
    )?;

    let g_h = g_of(cfg.h)?;
    let g_sup: Vec<f64> = rows.iter().map(|r| g_of(r.sup_x)).collect::<Result<_>>()?;
    let shifted: Vec<f64> = a_samples.iter().map(|a| a + g_h).collect();
    let bound_iv = ExtReal::Finite(g_sup_norm_rhs(p, &shifted)?);
    let est_iv = estimate_p_norm(&g_sup, p)?;
    let report_iv = settings.report(
        format!("||G(X*_T)||_{p} vs a1 a2 ||A_T + G(E[H])||_{p}"),
        est_iv,
        bound_iv,
        grid_slack(cfg.n_per_unit, bound_iv),
        std::mem::take(&mut warnings),
    )?;
    Ok(vec![report_i, report_iv])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExceedanceRow {
    pub n: u32,
    pub h: f64,
    pub p_exceed: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OsgoodReport {
    /// Every node of every zero-data path is `+0.0` bit for bit.
    pub zero_paths_exact: bool,
    pub delta: f64,
    pub ladder: Vec<ExceedanceRow>,
    pub non_increasing: bool,
    pub verdict: Verdict,
}

/// `b` does not exceed `a` by more than `sigmas` combined standard errors.
pub fn within_sigmas(a: (f64, f64), b: (f64, f64), sigmas: f64) -> bool {
    b.0 <= a.0 + sigmas * (a.1 * a.1 + b.1 * b.1).sqrt()
}

fn exceedance(hits: usize, n: usize) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// Zero data gives the zero path; data `H = 1/n` gives exceedance
/// frequencies `P[sup X > delta]` that do not grow with `n`.
pub fn verify_osgood(cfg: &QuadrupleConfig, ladder: &[u32], delta: f64, settings: &McSettings) -> Result<OsgoodReport> {
    let zero_cfg = QuadrupleConfig { h: 0.0, floor: 0.0, ..cfg.clone() };
    let exact = run_trials(settings, |key| {
        let s = simulate_quadruple(&zero_cfg, key)?;
        Ok(s.path.scalars().iter().all(|v| v.to_bits() == 0))
    })?;
    let zero_paths_exact = exact.iter().all(|&b| b);

    let mut rows = Vec::with_capacity(ladder.len());
    for &n in ladder {
        let h = 1.0 / n as f64;
        let cfg_n = QuadrupleConfig { h, floor: 0.0, ..cfg.clone() };
        let hits = run_trials(settings, |key| Ok(simulate_quadruple(&cfg_n, key)?.sup_x > delta))?;
        let (p, se) = exceedance(hits.iter().filter(|&&b| b).count(), hits.len());
        rows.push(ExceedanceRow { n, h, p_exceed: p, se });
    }
    let non_increasing = rows.windows(2).all(|w| within_sigmas((w[0].p_exceed, w[0].se), (w[1].p_exceed, w[1].se), 2.0));
    let verdict = if zero_paths_exact && non_increasing { Verdict::Pass } else { Verdict::Fail };
    Ok(OsgoodReport { zero_paths_exact, delta, ladder: rows, non_increasing, verdict })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CounterexampleRatio {
    pub ratio_p_pow_p: f64,
    pub lower_bound_at_tn: f64,
}

fn counterexample_check(p: f64, gamma: f64, t_end: f64) -> Result<()> {
    check_p(p)?;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::Argument(format!("gamma = {gamma} must be finite and non-negative")));
    }
    if !(t_end >= 1.0 && t_end.is_finite()) {
        return Err(Error::Argument(format!("T = {t_end} must be at least 1")));
    }
    Ok(())
}

/// Exact `||X*_T||_p^p / ||exp(A_T)||_p^p` for the two-atom construction
/// whose integrator stops at time 1 on the set of probability `gamma / (e + gamma)`.
pub fn counterexample_ratio(p: f64, gamma: f64, t_end: f64) -> Result<CounterexampleRatio> {
    counterexample_check(p, gamma, t_end)?;
    let e = std::f64::consts::E;
    let good = e / (e + gamma);
    let bad = gamma / (e + gamma);
    let num = (p * (t_end - 1.0)).exp() * (e + gamma).powf(p) * good + p.exp() * bad;
    let den = (p * t_end).exp() * good + p.exp() * bad;
    Ok(CounterexampleRatio { ratio_p_pow_p: num / den, lower_bound_at_tn: (-p).exp() * (e + gamma).powf(p) - 1.0 })
}

/// `(X*_T, exp(A_T))` at sample point `omega` of the two-atom construction.
pub fn counterexample_sample(gamma: f64, t_end: f64, omega: f64) -> (f64, f64) {
    let e = std::f64::consts::E;
    if omega <= e / (e + gamma) {
        ((t_end - 1.0).exp() * (e + gamma), t_end.exp())
    } else {
        // X drops to 0 at time 1; its supremum is the left limit e
        (e, e)
    }
}

/// Monte Carlo ratio of `p`-th moments, matched two-sided against the closed form.
pub fn counterexample_mc(p: f64, gamma: f64, t_end: f64, settings: &McSettings) -> Result<McReport> {
    let exact = counterexample_ratio(p, gamma, t_end)?;
    let pairs = run_trials(settings, |key| {
        let omega = uniform(&mut key.stream(Purpose::Scenario));
        let (x, a) = counterexample_sample(gamma, t_end, omega);
        Ok((x.powf(p), a.powf(p)))
    })?;
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|v| v.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|v| v.1).collect();
    let (mx, vx) = mean_var(&xs);
    let (my, vy) = mean_var(&ys);
    let cov = if pairs.len() > 1 {
        pairs.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let ratio = mx / my;
    let var = ((vx - 2.0 * ratio * cov + ratio * ratio * vy) / (my * my * n)).max(0.0);
    let se = var.sqrt();
    let sigmas = 4.0;
    let diff = (ratio - exact.ratio_p_pow_p).abs();
    // with zero variance the estimate must agree to rounding
    let verdict = if diff <= sigmas * se || diff <= 1e-12 * exact.ratio_p_pow_p {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(McReport {
        quantity_tag: format!("||X*_T||_p^p / ||exp(A_T)||_p^p (p={p}, gamma={gamma}, T={t_end})"),
        estimate: ratio,
        std_error: se,
        n_trials: settings.trials,
        base_seed: settings.base_seed,
        ci_level: settings.ci_level,
        theoretical_bound: ExtReal::Finite(exact.ratio_p_pow_p),
        slack: 0.0,
        comparison: Comparison::Match { sigmas },
        verdict,
        warnings: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauchyRow {
    pub n: u32,
    pub m: u32,
    pub p_exceed: f64,
    pub se: f64,
}

/// `P[sup |X^(n) - X^(m)| > eps]` for consecutive grid pairs of `n_list`.
pub fn cauchy_experiment(
    model: &SdeModel,
    config: &LevyConfig,
    n_list: &[u32],
    eps: f64,
    t_end: f64,
    settings: &McSettings,
) -> Result<Vec<CauchyRow>> {
    if n_list.len() < 2 {
        return Err(Error::Argument("need at least two grid densities".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Argument(format!("eps = {eps} must be positive")));
    }
    let mut rows = Vec::new();
    for w in n_list.windows(2) {
        let (n, m) = (w[0], w[1]);
        if n == 0 || m <= n || m % n != 0 {
            return Err(Error::Argument(format!("grid list must increase by divisibility, got {n} then {m}")));
        }
        let hits = run_trials(settings, |key| {
            Ok(coupled_pair(model, config, n, m / n, t_end, key)?.distance > eps)
        })?;
        let (p, se) = exceedance(hits.iter().filter(|&&b| b).count(), hits.len());
        rows.push(CauchyRow { n, m, p_exceed: p, se });
    }
    Ok(rows)
}

/// Monte Carlo mean of `X_T` (first coordinate) under the Euler scheme.
pub fn euler_terminal_mean(
    model: &SdeModel,
    config: &LevyConfig,
    n_per_unit: u32,
    t_end: f64,
    settings: &McSettings,
) -> Result<McEstimate> {
    let xs = run_trials(settings, |key| {
        let noise = generate(config, n_per_unit, t_end, key)?;
        Ok(euler_simulate(model, &noise, None)?.path.terminal()[0])
    })?;
    estimate_mean(&xs)
}
