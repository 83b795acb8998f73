//! Catalog of non-decreasing nonlinearities `eta`, the power transform
//! `eta_p`, and numerical monotonicity/concavity probes.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{check_p, Error, Result};

const INV_E: f64 = 1.0 / E;

/// The functional form of a nonlinearity.
#[derive(Debug, Clone, PartialEq)]
pub enum EtaKind {
    /// `k * x`
    Linear { k: f64 },
    /// `k * x^a` with `a` in `(0, 1]`
    Power { k: f64, a: f64 },
    /// `k * (x + m * log(1 / m))` with `m = min(x, 1/e)`
    XLog { k: f64 },
    /// `k * x^2`
    Square { k: f64 },
    /// `k * x * atan(1 / x)`, concave and bounded by `k`
    XArctan { k: f64 },
    /// Piecewise-linear through `(x, y)` knots; constant below the first knot
    /// and linearly extrapolated beyond the last one.
    Tabulated { x: Vec<f64>, y: Vec<f64> },
}

/// A validated nonlinearity together with its divergence metadata.
///
/// `osgood_at_zero` records whether `int_0^eps du / eta(u)` diverges and
/// `diverges_at_infinity` whether `int_1^inf du / eta(u)` does. Both are set
/// from the kind for the closed-form kinds; for tabulated data they may be
/// declared by the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EtaSpecRepr", into = "EtaSpecRepr")]
pub struct EtaSpec {
    kind: EtaKind,
    osgood_at_zero: bool,
    diverges_at_infinity: bool,
}

impl EtaSpec {
    pub fn linear(k: f64) -> Result<Self> {
        Self::new(EtaKind::Linear { k })
    }

    pub fn identity() -> Self {
        Self::linear(1.0).expect("unit slope is valid")
    }

    pub fn power(k: f64, a: f64) -> Result<Self> {
        Self::new(EtaKind::Power { k, a })
    }

    pub fn xlog(k: f64) -> Result<Self> {
        Self::new(EtaKind::XLog { k })
    }

    pub fn square(k: f64) -> Result<Self> {
        Self::new(EtaKind::Square { k })
    }

    pub fn xarctan(k: f64) -> Result<Self> {
        Self::new(EtaKind::XArctan { k })
    }

    pub fn tabulated(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Self::new(EtaKind::Tabulated { x, y })
    }

    /// Validates `kind` and derives the divergence flags from it.
    pub fn new(kind: EtaKind) -> Result<Self> {
        validate(&kind)?;
        let (osgood_at_zero, diverges_at_infinity) = natural_flags(&kind);
        Ok(Self {
            kind,
            osgood_at_zero,
            diverges_at_infinity,
        })
    }

    /// Like [`EtaSpec::new`] but with caller-declared flags. Closed-form kinds
    /// reject flags that contradict their known behavior; tabulated kinds take
    /// the declaration as given.
    pub fn with_flags(kind: EtaKind, osgood_at_zero: bool, diverges_at_infinity: bool) -> Result<Self> {
        let mut spec = Self::new(kind)?;
        if !matches!(spec.kind, EtaKind::Tabulated { .. })
            && (spec.osgood_at_zero != osgood_at_zero
                || spec.diverges_at_infinity != diverges_at_infinity)
        {
            return Err(Error::Argument(format!(
                "declared flags (osgood_at_zero={osgood_at_zero}, diverges_at_infinity={diverges_at_infinity}) \
                 contradict kind {} (expected {}, {})",
                spec.kind_name(),
                spec.osgood_at_zero,
                spec.diverges_at_infinity
            )));
        }
        spec.osgood_at_zero = osgood_at_zero;
        spec.diverges_at_infinity = diverges_at_infinity;
        Ok(spec)
    }

    pub fn kind(&self) -> &EtaKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            EtaKind::Linear { .. } => "linear",
            EtaKind::Power { .. } => "power",
            EtaKind::XLog { .. } => "xlog",
            EtaKind::Square { .. } => "square",
            EtaKind::XArctan { .. } => "xarctan",
            EtaKind::Tabulated { .. } => "tabulated",
        }
    }

    pub fn osgood_at_zero(&self) -> bool {
        self.osgood_at_zero
    }

    pub fn diverges_at_infinity(&self) -> bool {
        self.diverges_at_infinity
    }

    /// `eta(x)` for `x >= 0`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("eta is defined on [0, inf), got x = {x}")));
        }
        Ok(self.eval_unchecked(x))
    }

    /// `eta(x)` without the domain check; callers guarantee `x >= 0`.
    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        match &self.kind {
            EtaKind::Linear { k } => k * x,
            EtaKind::Power { k, a } => k * x.powf(*a),
            EtaKind::XLog { k } => k * (x + capped_xlog(x)),
            EtaKind::Square { k } => k * x * x,
            EtaKind::XArctan { k } => {
                if x == 0.0 {
                    0.0
                } else {
                    k * x * (1.0 / x).atan()
                }
            }
            EtaKind::Tabulated { x: xs, y: ys } => interpolate(xs, ys, x),
        }
    }

    /// `eta_p(x) = p/(1-p) * eta(x^(1/p)) * x^(1 - 1/p)` for `x > 0`.
    pub fn eval_p(&self, p: f64, x: f64) -> Result<f64> {
        check_p(p)?;
        if !(x > 0.0) {
            return Err(Error::Domain(format!("eta_p is defined on (0, inf), got x = {x}")));
        }
        Ok(self.eval_p_unchecked(p, x))
    }

    pub(crate) fn eval_p_unchecked(&self, p: f64, x: f64) -> f64 {
        let inv_p = 1.0 / p;
        p / (1.0 - p) * self.eval_unchecked(x.powf(inv_p)) * x.powf(1.0 - inv_p)
    }

    /// Points where `eta` is not smooth; quadrature splits there.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.kind {
            EtaKind::XLog { .. } => vec![INV_E],
            EtaKind::Tabulated { x, .. } => x.iter().copied().filter(|&v| v > 0.0).collect(),
            _ => Vec::new(),
        }
    }
}

/// `m * log(1/m)` with `m = min(x, 1/e)`, extended by 0 at `x = 0`.
pub fn capped_xlog(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= INV_E {
        // log(1 / (1/e)) = 1 exactly on the capped branch
        INV_E
    } else {
        -x * x.ln()
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!("parameter {name} = {v} must be a positive real")))
    }
}

fn validate(kind: &EtaKind) -> Result<()> {
    match kind {
        EtaKind::Linear { k } | EtaKind::XLog { k } | EtaKind::Square { k } | EtaKind::XArctan { k } => {
            positive("k", *k)
        }
        EtaKind::Power { k, a } => {
            positive("k", *k)?;
            if !(*a > 0.0 && *a <= 1.0) {
                return Err(Error::Argument(format!("power exponent a = {a} must lie in (0, 1]")));
            }
            Ok(())
        }
        EtaKind::Tabulated { x, y } => {
            if x.is_empty() || x.len() != y.len() {
                return Err(Error::Argument(format!(
                    "tabulated eta needs matching non-empty knot arrays (got {} x, {} y)",
                    x.len(),
                    y.len()
                )));
            }
            if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
                return Err(Error::Argument("tabulated knots must be finite".into()));
            }
            if x[0] < 0.0 {
                return Err(Error::Argument("tabulated knots must be non-negative".into()));
            }
            if x.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Argument("tabulated x knots must be strictly increasing".into()));
            }
            if y.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::Argument("tabulated y values must be non-decreasing".into()));
            }
            // eta > 0 on (0, inf): only a leading knot at (0, 0) may vanish.
            let first_positive = if x[0] == 0.0 && y[0] == 0.0 { 1 } else { 0 };
            if y.len() <= first_positive || y[first_positive] <= 0.0 {
                return Err(Error::Argument(
                    "tabulated eta must be strictly positive on (0, inf)".into(),
                ));
            }
            Ok(())
        }
    }
}

fn natural_flags(kind: &EtaKind) -> (bool, bool) {
    match kind {
        EtaKind::Linear { .. } | EtaKind::XLog { .. } | EtaKind::XArctan { .. } => (true, true),
        EtaKind::Power { a, .. } => (*a >= 1.0, true),
        // int_0 du/u^2 diverges, int_1^inf du/u^2 converges
        EtaKind::Square { .. } => (true, false),
        // constant extrapolation below the first knot keeps 1/eta integrable at 0
        // unless the table starts at (0, 0); linear extrapolation always diverges.
        EtaKind::Tabulated { x, y } => (x[0] == 0.0 && y[0] == 0.0, true),
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if n == 1 {
        return ys[0];
    }
    let i = xs.partition_point(|&k| k <= x);
    let (lo, hi) = if i >= n { (n - 2, n - 1) } else { (i - 1, i) };
    let slope = (ys[hi] - ys[lo]) / (xs[hi] - xs[lo]);
    ys[lo] + slope * (x - xs[lo])
}

/// Which function a probe examines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeMode {
    Eta,
    EtaP(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProbeOutcome {
    pub monotone: bool,
    pub concave: bool,
}

/// Probes `eta` (or `eta_p`) for monotonicity and midpoint concavity on `grid`.
pub fn probe_monotone_concave(spec: &EtaSpec, grid: &[f64], mode: ProbeMode) -> Result<ProbeOutcome> {
    match mode {
        ProbeMode::Eta => probe_fn(|x| spec.eval_unchecked(x), grid),
        ProbeMode::EtaP(p) => {
            check_p(p)?;
            if grid.first().is_some_and(|&g| g <= 0.0) {
                return Err(Error::Domain("eta_p probes need a strictly positive grid".into()));
            }
            probe_fn(|x| spec.eval_p_unchecked(p, x), grid)
        }
    }
}

/// Probe of an arbitrary function. Values are compared with an absolute
/// slack of `1e-12` times the largest magnitude seen on the grid.
pub fn probe_fn<F: Fn(f64) -> f64>(f: F, grid: &[f64]) -> Result<ProbeOutcome> {
    if grid.len() < 3 {
        return Err(Error::Argument(format!("probe grid needs at least 3 points, got {}", grid.len())));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] < 0.0 {
        return Err(Error::Argument("probe grid must be non-negative and strictly increasing".into()));
    }
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;

    let monotone = values.windows(2).all(|w| w[1] >= w[0] - tol);
    let midpoint_ok = |i: usize, j: usize| {
        let mid = 0.5 * (grid[i] + grid[j]);
        f(mid) >= 0.5 * (values[i] + values[j]) - tol
    };
    let concave = (0..grid.len() - 1).all(|i| midpoint_ok(i, i + 1))
        && (0..grid.len() - 2).all(|i| midpoint_ok(i, i + 2));
    Ok(ProbeOutcome { monotone, concave })
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i == count - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EtaSpecRepr {
    kind: String,
    #[serde(default)]
    params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    osgood_at_zero: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diverges_at_infinity: Option<bool>,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y: Option<Vec<f64>>,
}

impl TryFrom<EtaSpecRepr> for EtaSpec {
    type Error = Error;

    fn try_from(r: EtaSpecRepr) -> Result<Self> {
        let k = r.params.k.unwrap_or(1.0);
        let kind = match r.kind.as_str() {
            "linear" => EtaKind::Linear { k },
            "power" => EtaKind::Power {
                k,
                a: r.params.a.ok_or_else(|| Error::Argument("power eta needs params.a".into()))?,
            },
            "xlog" => EtaKind::XLog { k },
            "square" => EtaKind::Square { k },
            "xarctan" => EtaKind::XArctan { k },
            "tabulated" => EtaKind::Tabulated {
                x: r.params.x.ok_or_else(|| Error::Argument("tabulated eta needs params.x".into()))?,
                y: r.params.y.ok_or_else(|| Error::Argument("tabulated eta needs params.y".into()))?,
            },
            other => return Err(Error::Argument(format!("unknown eta kind {other:?}"))),
        };
        let base = EtaSpec::new(kind)?;
        let osgood = r.osgood_at_zero.unwrap_or(base.osgood_at_zero);
        let diverges = r.diverges_at_infinity.unwrap_or(base.diverges_at_infinity);
        EtaSpec::with_flags(base.kind, osgood, diverges)
    }
}

impl From<EtaSpec> for EtaSpecRepr {
    fn from(s: EtaSpec) -> Self {
        let mut params = Params::default();
        let kind = s.kind_name().to_string();
        match s.kind {
            EtaKind::Linear { k } | EtaKind::XLog { k } | EtaKind::Square { k } | EtaKind::XArctan { k } => {
                params.k = Some(k)
            }
            EtaKind::Power { k, a } => {
                params.k = Some(k);
                params.a = Some(a);
            }
            EtaKind::Tabulated { x, y } => {
                params.x = Some(x);
                params.y = Some(y);
            }
        }
        EtaSpecRepr {
            kind,
            params,
            osgood_at_zero: Some(s.osgood_at_zero),
            diverges_at_infinity: Some(s.diverges_at_infinity),
        }
    }
}
