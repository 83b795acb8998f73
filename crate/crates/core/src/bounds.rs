//! Closed-form bound evaluators: deterministic Bihari-LaSalle, the sharp
//! `p`-th moment bounds for concave nonlinearities, the random-integrator
//! weighted moment, and the general-`eta` right-hand sides.
//!
//! All inputs are scalars (norms already computed); randomness lives in
//! [`crate::montecarlo`].

use serde::{Deserialize, Serialize};

use crate::error::{check_p, Error, Result};
use crate::ext::ExtReal;
use crate::gtransform::GTransform;
use crate::nonlinearity::{log_grid, probe_monotone_concave, EtaSpec, ProbeMode};
use crate::path::CadlagPath;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PExponents {
    pub p: f64,
    /// `(1 - p)^{-1}`
    pub beta: f64,
    /// `(1 - p)^{-1/p}`
    pub alpha1: f64,
    /// `p^{-1}`
    pub alpha2: f64,
}

impl PExponents {
    pub fn new(p: f64) -> Result<Self> {
        check_p(p)?;
        Ok(PExponents { p, beta: 1.0 / (1.0 - p), alpha1: (1.0 - p).powf(-1.0 / p), alpha2: 1.0 / p })
    }
}

/// Which integrability hypothesis on `H` the bound uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HCase {
    /// `H` predictable with `E[H^p] < inf`.
    #[serde(alias = "pred")]
    Predictable,
    /// `E[H^p] < inf` and the martingale has no negative jumps.
    #[serde(alias = "nonneg")]
    NonnegJumps,
    /// `E[H] < inf`.
    L1,
}

impl HCase {
    pub fn tag(self) -> &'static str {
        match self {
            HCase::Predictable => "predictable-h",
            HCase::NonnegJumps => "nonneg-jumps",
            HCase::L1 => "l1-h",
        }
    }
}

/// Whether the hypothesis integrand reads the running supremum or the left limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Sup,
    #[serde(alias = "nosup")]
    NoSup,
}

impl Variant {
    pub fn tag(self) -> &'static str {
        match self {
            Variant::Sup => "sup",
            Variant::NoSup => "nosup",
        }
    }
}

/// Constants of `outer * G^{-1}(G(inner * H) + a_multiplier * A)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants {
    pub inner: f64,
    pub a_multiplier: f64,
    pub outer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundResult {
    pub value: ExtReal,
    pub theorem_tag: String,
    pub constants_used: BoundConstants,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Non-decreasing càdlàg `A(t) = rate * t + sum_{t_j <= t} size_j` with `A(0) = 0`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncreasingProcess {
    #[serde(default)]
    pub rate: f64,
    /// `(time, size)` pairs.
    #[serde(default)]
    pub jumps: Vec<(f64, f64)>,
}

impl IncreasingProcess {
    pub fn linear(rate: f64) -> Self {
        IncreasingProcess { rate, jumps: Vec::new() }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn with_jump(mut self, t: f64, size: f64) -> Self {
        self.jumps.push((t, size));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::Argument(format!("A has rate {}, expected finite and >= 0", self.rate)));
        }
        for &(t, s) in &self.jumps {
            if !(t > 0.0 && t.is_finite() && s >= 0.0 && s.is_finite()) {
                return Err(Error::Argument(format!("A has jump ({t}, {s}); need time > 0 and size >= 0")));
            }
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        self.rate * t + self.jumps.iter().filter(|&&(tj, _)| tj <= t).map(|&(_, s)| s).sum::<f64>()
    }

    /// `A(k / n)` for `k = 0..=steps`.
    pub fn sample(&self, n_per_unit: u32, steps: usize) -> Vec<f64> {
        let n = n_per_unit as f64;
        let mut out: Vec<f64> = (0..=steps).map(|k| self.rate * (k as f64 / n)).collect();
        for &(tj, s) in &self.jumps {
            // jump at tj lands on the first node at or after it
            let first = (tj * n - 1e-9).ceil().max(0.0) as usize;
            for v in out.iter_mut().skip(first) {
                *v += s;
            }
        }
        out
    }
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("{name} = {v} must be finite and non-negative")))
    }
}

/// `G^{-1}(G(H) + A(time))`.
pub fn deterministic_bihari(t: &GTransform, h: f64, a: &IncreasingProcess, time: f64) -> Result<BoundResult> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Argument(format!("H = {h} must be positive; shift by a small epsilon")));
    }
    nonneg("time", time)?;
    a.validate()?;
    let value = t.g_inverse(t.g(h)? + a.value(time))?;
    Ok(BoundResult {
        value,
        theorem_tag: "deterministic-bihari".into(),
        constants_used: BoundConstants { inner: 1.0, a_multiplier: 1.0, outer: 1.0 },
        warnings: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub holds: bool,
    pub max_violation: f64,
}

/// Checks `x(t) <= int_(0,t] eta(x(s-)) dA(s) + h` (or with `x*` under
/// [`Variant::Sup`]) on the grid of `x`, using a left Riemann-Stieltjes sum.
/// `a` holds `A` at every node `t_k >= 0` of `x`; `holds` is
/// `max_violation <= tol`.
pub fn check_hypothesis_path(
    x: &CadlagPath,
    a: &[f64],
    h: f64,
    eta: &EtaSpec,
    mode: Variant,
    tol: f64,
) -> Result<HypothesisCheck> {
    if x.dim() != 1 {
        return Err(Error::Argument("hypothesis checks need a scalar path".into()));
    }
    if a.len() != x.steps() + 1 {
        return Err(Error::Argument(format!(
            "A has {} nodes but the path has {}",
            a.len(),
            x.steps() + 1
        )));
    }
    nonneg("H", h)?;
    let mut integral = 0.0;
    let mut sup = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for k in 0..=x.steps() {
        let xk = x.at(k)[0];
        worst = worst.max(xk - (integral + h));
        sup = sup.max(xk);
        if k < x.steps() {
            let arg = match mode {
                Variant::Sup => sup,
                Variant::NoSup => xk,
            };
            integral += eta.eval(arg.max(0.0))? * (a[k + 1] - a[k]);
        }
    }
    Ok(HypothesisCheck { holds: worst <= tol, max_violation: worst })
}

fn probe_tag(t: &GTransform, p: f64, hcase: HCase, variant: Variant) -> Result<(String, Vec<String>)> {
    let grid = log_grid(1e-3, 1e3, 64);
    let (mode, name) = if variant == Variant::NoSup && hcase == HCase::L1 {
        (ProbeMode::Eta, "eta".to_string())
    } else {
        (ProbeMode::EtaP(p), format!("eta_p(p={p})"))
    };
    let probe = probe_monotone_concave(t.eta(), &grid, mode)?;
    let ok = probe.monotone && probe.concave;
    let mut warnings = Vec::new();
    if !ok {
        warnings.push(format!(
            "{name} failed the probe (monotone: {}, concave: {}); the bound is evaluated but not guaranteed",
            probe.monotone, probe.concave
        ));
    }
    let tag = format!(
        "concave/{}/{} [{name} {}]",
        variant.tag(),
        hcase.tag(),
        if ok { "concave+monotone" } else { "probe failed" }
    );
    Ok((tag, warnings))
}

/// Constants `(inner, a_multiplier, outer)` of the sharp concave bound.
pub fn concave_constants(p: f64, hcase: HCase, variant: Variant) -> Result<BoundConstants> {
    let c = PExponents::new(p)?;
    Ok(match (variant, hcase) {
        (Variant::Sup, HCase::L1) => BoundConstants { inner: c.alpha1, a_multiplier: c.beta, outer: 1.0 },
        (Variant::Sup, _) => BoundConstants { inner: c.alpha1 * c.alpha2, a_multiplier: c.beta, outer: 1.0 },
        (Variant::NoSup, HCase::L1) => BoundConstants { inner: 1.0, a_multiplier: 1.0, outer: c.alpha1 },
        (Variant::NoSup, _) => BoundConstants { inner: c.alpha2, a_multiplier: 1.0, outer: c.alpha1 },
    })
}

/// Upper bound on `||X*_T||_p` for concave `eta` and deterministic `A`.
///
/// `h_norm` is `||H_T||_p` for [`HCase::Predictable`] / [`HCase::NonnegJumps`]
/// and `||H_T||_1` for [`HCase::L1`].
pub fn concave_bound(
    t: &GTransform,
    p: f64,
    hcase: HCase,
    variant: Variant,
    h_norm: f64,
    a_t: f64,
) -> Result<BoundResult> {
    nonneg("H norm", h_norm)?;
    nonneg("A_T", a_t)?;
    let k = concave_constants(p, hcase, variant)?;
    let (theorem_tag, warnings) = probe_tag(t, p, hcase, variant)?;
    let inner = t.g_inverse(t.g(k.inner * h_norm)? + k.a_multiplier * a_t)?;
    Ok(BoundResult { value: inner * k.outer, theorem_tag, constants_used: k, warnings })
}

/// `(alpha1 G^{-1}(G(h) + x), G^{-1}(G(alpha1 h) + beta x))`; the first never
/// exceeds the second when `eta_p` is non-decreasing.
pub fn dominance_pair(t: &GTransform, p: f64, h: f64, x: f64) -> Result<(ExtReal, ExtReal)> {
    let c = PExponents::new(p)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Argument(format!("h = {h} must be positive")));
    }
    nonneg("x", x)?;
    let lhs = t.g_inverse(t.g(h)? + x)? * c.alpha1;
    let rhs = t.g_inverse(t.g(c.alpha1 * h)? + c.beta * x)?;
    Ok((lhs, rhs))
}

/// Per-trial statistic `G^{-1}(G(kappa H) + beta' A_T)^{-q} (X*_T)^p` and its
/// bound `q / (q - p) (kappa H)^{p - q}` for random integrators.
#[allow(clippy::too_many_arguments)]
pub fn random_a_check_values(
    t: &GTransform,
    p: f64,
    q: f64,
    hcase: HCase,
    variant: Variant,
    h_norm: f64,
    a_t: f64,
    x_star: f64,
) -> Result<(f64, f64)> {
    let c = PExponents::new(p)?;
    if !(q > p && q.is_finite()) {
        return Err(Error::Argument(format!("q = {q} must exceed p = {p}")));
    }
    if !(h_norm > 0.0 && h_norm.is_finite()) {
        return Err(Error::Argument(format!("H norm = {h_norm} must be positive")));
    }
    nonneg("A_T", a_t)?;
    nonneg("X*", x_star)?;
    let (kappa, beta) = random_a_constants(c, hcase, variant);
    let kh = kappa * h_norm;
    let rhs = q / (q - p) * kh.powf(p - q);
    let weighted = if x_star == 0.0 {
        0.0
    } else {
        match t.g_inverse(t.g(kh)? + beta * a_t)? {
            ExtReal::Finite(g) => g.powf(-q) * x_star.powf(p),
            ExtReal::PosInf => 0.0,
            ExtReal::NegInf => unreachable!("G^{{-1}} is non-negative"),
        }
    };
    Ok((weighted, rhs))
}

/// `(kappa, beta')` for the random-integrator statistic.
pub fn random_a_constants(c: PExponents, hcase: HCase, variant: Variant) -> (f64, f64) {
    let kappa = if hcase == HCase::L1 { c.alpha1 } else { c.alpha1 * c.alpha2 };
    let beta = if variant == Variant::NoSup { 1.0 } else { c.beta };
    (kappa, beta)
}

/// `E[A] + G(E[H])`, the bound on `E[G(X_T)]` for general `eta`.
pub fn expected_g_rhs(t: &GTransform, e_a: f64, e_h: f64) -> Result<ExtReal> {
    nonneg("E[A]", e_a)?;
    nonneg("E[H]", e_h)?;
    Ok(t.g(e_h)? + e_a)
}

/// `alpha1 alpha2 ||S||_p` for samples `S` of `A_T + G(E[H_T])`.
pub fn g_sup_norm_rhs(p: f64, samples: &[f64]) -> Result<f64> {
    let c = PExponents::new(p)?;
    if samples.is_empty() {
        return Err(Error::Argument("no samples".into()));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::Argument("samples must be finite".into()));
    }
    let mean = samples.iter().map(|s| s.abs().powf(p)).sum::<f64>() / samples.len() as f64;
    Ok(c.alpha1 * c.alpha2 * mean.powf(1.0 / p))
}
