//! The transform `G(x) = int_c^x du / eta(u)`, its inverse, and the rescaled
//! pair `G~_p(x) = (1 - p) G(x^(1/p))`, `G~_p^{-1}(y) = G^{-1}(y / (1 - p))^p`.
//!
//! Values of `G` are cached at the geometric knots `c * 2^k` spanning
//! `[1e-300, 1e300]`; an evaluation integrates only from the nearest knot
//! below. All quadrature runs in the logarithmic variable, where `1/eta` is
//! smooth for every catalog kind away from its kinks.

use crate::error::{check_p, Error, Result};
use crate::ext::ExtReal;
use crate::nonlinearity::{EtaKind, EtaSpec};
use crate::quadrature::integrate_log;

/// Smallest argument at which `G` is integrated; Osgood kinds return `-inf` below it.
pub const EVAL_FLOOR: f64 = 1e-300;
const EVAL_CEILING: f64 = 1e300;
const MAX_NEWTON_STEPS: usize = 200;

#[derive(Debug, Clone)]
pub struct GTransformBuilder {
    eta: EtaSpec,
    anchor: f64,
    quad_rel_tol: f64,
    inv_rel_tol: f64,
}

impl GTransformBuilder {
    pub fn anchor(mut self, c: f64) -> Self {
        self.anchor = c;
        self
    }

    pub fn quad_rel_tol(mut self, tol: f64) -> Self {
        self.quad_rel_tol = tol;
        self
    }

    pub fn inv_rel_tol(mut self, tol: f64) -> Self {
        self.inv_rel_tol = tol;
        self
    }

    pub fn build(self) -> Result<GTransform> {
        GTransform::build(self)
    }
}

#[derive(Debug, Clone)]
pub struct GTransform {
    eta: EtaSpec,
    anchor: f64,
    quad_rel_tol: f64,
    inv_rel_tol: f64,
    kinks: Vec<f64>,
    knots: Vec<f64>,
    g_knots: Vec<f64>,
    g_zero: ExtReal,
    sup: ExtReal,
    sup_is_estimate: bool,
}

impl GTransform {
    /// Transform anchored at `c = 1` with default tolerances.
    pub fn new(eta: EtaSpec) -> Result<Self> {
        Self::builder(eta).build()
    }

    pub fn with_anchor(eta: EtaSpec, c: f64) -> Result<Self> {
        Self::builder(eta).anchor(c).build()
    }

    pub fn builder(eta: EtaSpec) -> GTransformBuilder {
        GTransformBuilder {
            eta,
            anchor: 1.0,
            quad_rel_tol: 1e-10,
            inv_rel_tol: 1e-12,
        }
    }

    fn build(b: GTransformBuilder) -> Result<Self> {
        let c = b.anchor;
        if !(c.is_finite() && (4.0 * EVAL_FLOOR..=EVAL_CEILING / 4.0).contains(&c)) {
            return Err(Error::Argument(format!("anchor c = {c} must lie in [4e-300, 2.5e299]")));
        }
        if !(b.quad_rel_tol > 0.0 && b.quad_rel_tol < 1e-2) || !(b.inv_rel_tol > 0.0 && b.inv_rel_tol < 1e-2) {
            return Err(Error::Argument("tolerances must lie in (0, 1e-2)".into()));
        }
        let kinks = b.eta.kinks();
        let k_lo = (EVAL_FLOOR / c).log2().ceil() as i32;
        let k_hi = (EVAL_CEILING / c).log2().floor() as i32;

        let mut t = GTransform {
            eta: b.eta,
            anchor: c,
            quad_rel_tol: b.quad_rel_tol,
            inv_rel_tol: b.inv_rel_tol,
            kinks,
            knots: Vec::new(),
            g_knots: Vec::new(),
            g_zero: ExtReal::NegInf,
            sup: ExtReal::PosInf,
            sup_is_estimate: false,
        };

        // Upward from the anchor.
        let mut up_x = vec![c];
        let mut up_g = vec![0.0];
        let mut up_seg = Vec::new();
        for k in 1..=k_hi {
            let x = c * 2f64.powi(k);
            let s = t.segment(up_x[up_x.len() - 1], x)?;
            if !s.is_finite() {
                break;
            }
            up_seg.push(s);
            up_g.push(up_g[up_g.len() - 1] + s);
            up_x.push(x);
        }
        // Downward from the anchor; stops where 1/eta leaves the f64 range.
        let mut down_x = Vec::new();
        let mut down_g = Vec::new();
        let mut down_seg = Vec::new();
        let (mut prev_x, mut prev_g) = (c, 0.0);
        for k in (k_lo..0).rev() {
            let x = c * 2f64.powi(k);
            let s = match t.segment(x, prev_x) {
                Ok(s) if s.is_finite() => s,
                Ok(_) | Err(Error::Quadrature { .. }) => break,
                Err(e) => return Err(e),
            };
            let g = prev_g - s;
            if !g.is_finite() {
                break;
            }
            down_seg.push(s);
            down_x.push(x);
            down_g.push(g);
            prev_x = x;
            prev_g = g;
        }
        down_x.reverse();
        down_g.reverse();
        t.knots = down_x.into_iter().chain(up_x).collect();
        t.g_knots = down_g.into_iter().chain(up_g).collect();

        // Improper integral at zero: the lowest two segments decay geometrically
        // for power-law behavior near 0 (exact for power and tabulated kinds).
        t.g_zero = if t.eta.osgood_at_zero() {
            ExtReal::NegInf
        } else {
            let n = down_seg.len();
            if n < 2 {
                return Err(Error::Convergence("cannot resolve G(0): too few knots below the anchor".into()));
            }
            let (s0, s1) = (down_seg[n - 1], down_seg[n - 2]);
            let ratio = s0 / s1;
            if !(ratio < 1.0) {
                return Err(Error::Convergence(format!(
                    "eta is declared non-Osgood at 0 but 1/eta does not decay there (segment ratio {ratio})"
                )));
            }
            ExtReal::Finite(t.g_knots[0] - s0 * ratio / (1.0 - ratio))
        };

        // Supremum of the range.
        if !t.eta.diverges_at_infinity() {
            if let EtaKind::Square { k } = t.eta.kind() {
                t.sup = ExtReal::Finite(1.0 / (k * c));
            } else {
                let n = up_seg.len();
                if n < 2 {
                    return Err(Error::Convergence("cannot resolve sup G: too few knots above the anchor".into()));
                }
                let ratio = up_seg[n - 1] / up_seg[n - 2];
                t.sup = if ratio < 1.0 {
                    ExtReal::Finite(t.g_knots[t.g_knots.len() - 1] + up_seg[n - 1] * ratio / (1.0 - ratio))
                } else {
                    ExtReal::PosInf
                };
                t.sup_is_estimate = true;
            }
        }
        Ok(t)
    }

    fn segment(&self, a: f64, b: f64) -> Result<f64> {
        let eta = &self.eta;
        integrate_log(|u| 1.0 / eta.eval_unchecked(u), a, b, self.quad_rel_tol, &self.kinks)
    }

    pub fn eta(&self) -> &EtaSpec {
        &self.eta
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn quad_rel_tol(&self) -> f64 {
        self.quad_rel_tol
    }

    /// `G(0)`: `-inf` under the Osgood condition, otherwise `-int_0^c du/eta`.
    pub fn g_zero(&self) -> ExtReal {
        self.g_zero
    }

    /// `sup range(G)`; `+inf` when `int^inf du/eta` diverges.
    pub fn sup(&self) -> ExtReal {
        self.sup
    }

    /// True when [`GTransform::sup`] comes from tail extrapolation rather than a closed form.
    pub fn sup_is_estimate(&self) -> bool {
        self.sup_is_estimate
    }

    fn lowest_knot(&self) -> f64 {
        self.knots[0]
    }

    fn highest_knot(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// `G(x)` for `x >= 0`.
    pub fn g(&self, x: f64) -> Result<ExtReal> {
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("G is defined on [0, inf), got x = {x}")));
        }
        if x == 0.0 {
            return Ok(self.g_zero);
        }
        if x == f64::INFINITY {
            return Ok(self.sup);
        }
        let lo = self.lowest_knot();
        if x < lo {
            if self.eta.osgood_at_zero() {
                return Ok(ExtReal::NegInf);
            }
            return Ok(ExtReal::Finite(self.g_knots[0] - self.segment(x, lo)?));
        }
        let i = self.knots.partition_point(|&k| k <= x) - 1;
        let v = self.g_knots[i] + self.segment(self.knots[i], x)?;
        Ok(ExtReal::from_f64(v))
    }

    /// `G^{-1}(y)`, with `G^{-1}(-inf) = 0` and `+inf` for arguments at or
    /// beyond `sup range(G)`.
    pub fn g_inverse(&self, y: ExtReal) -> Result<ExtReal> {
        let y = match y {
            ExtReal::NegInf => return Ok(ExtReal::ZERO),
            ExtReal::PosInf => return Ok(ExtReal::PosInf),
            ExtReal::Finite(v) if v.is_nan() => return Err(Error::Domain("G^{-1}(NaN)".into())),
            ExtReal::Finite(v) => v,
        };
        if self.sup <= y {
            return Ok(ExtReal::PosInf);
        }
        if let ExtReal::Finite(g0) = self.g_zero {
            let slack = 10.0 * self.quad_rel_tol * g0.abs().max(1.0);
            if y <= g0 {
                if y >= g0 - slack {
                    return Ok(ExtReal::ZERO);
                }
                return Err(Error::Domain(format!("{y} lies below the range of G (G(0) = {g0})")));
            }
        }
        let first = self.g_knots[0];
        let last = self.g_knots[self.g_knots.len() - 1];
        if y < first {
            if self.eta.osgood_at_zero() {
                // the preimage is below the evaluation floor
                return Ok(ExtReal::ZERO);
            }
            let hi = self.lowest_knot();
            let mut lo = hi;
            loop {
                lo *= 0.5;
                if lo == 0.0 {
                    return Ok(ExtReal::ZERO);
                }
                if first - self.segment(lo, hi)? <= y {
                    break;
                }
            }
            let base = first - self.segment(lo, hi)?;
            return self.solve(lo, hi, base, y).map(ExtReal::Finite);
        }
        if y > last {
            let mut lo = self.highest_knot();
            let mut g_lo = last;
            loop {
                let hi = lo * 2.0;
                if !hi.is_finite() {
                    return Ok(ExtReal::PosInf);
                }
                let g_hi = g_lo + self.segment(lo, hi)?;
                if g_hi >= y {
                    return self.solve(lo, hi, g_lo, y).map(ExtReal::Finite);
                }
                lo = hi;
                g_lo = g_hi;
            }
        }
        let i = (self.g_knots.partition_point(|&g| g <= y) - 1).min(self.knots.len() - 2);
        self.solve(self.knots[i], self.knots[i + 1], self.g_knots[i], y)
            .map(ExtReal::Finite)
    }

    /// Safeguarded Newton on `F(x) = g_lo + int_lo^x du/eta - y` over the bracket `[lo, hi]`.
    fn solve(&self, lo: f64, hi: f64, g_lo: f64, y: f64) -> Result<f64> {
        if g_lo == y {
            return Ok(lo);
        }
        let (mut a, mut b) = (lo, hi);
        let f = |x: f64| -> Result<f64> { Ok(g_lo + self.segment(lo, x)? - y) };
        let g_hi = g_lo + self.segment(lo, hi)?;
        let frac = ((y - g_lo) / (g_hi - g_lo)).clamp(0.0, 1.0);
        let mut x = lo * (hi / lo).powf(frac);
        for _ in 0..MAX_NEWTON_STEPS {
            let fx = f(x)?;
            if fx == 0.0 {
                return Ok(x);
            }
            if fx < 0.0 {
                a = x;
            } else {
                b = x;
            }
            // G'(x) = 1 / eta(x)
            let newton = x - fx * self.eta.eval_unchecked(x);
            let next = if newton > a && newton < b && newton.is_finite() {
                newton
            } else {
                (a * b).sqrt()
            };
            if (next - x).abs() <= self.inv_rel_tol * 1e-2 * x || b - a <= self.inv_rel_tol * 1e-2 * a {
                return Ok(next);
            }
            x = next;
        }
        Err(Error::Convergence(format!(
            "G^{{-1}}({y}) did not converge in [{lo}, {hi}] after {MAX_NEWTON_STEPS} steps"
        )))
    }

    /// `G~_p(x) = (1 - p) G(x^(1/p))`.
    pub fn tilde_g_p(&self, p: f64, x: f64) -> Result<ExtReal> {
        check_p(p)?;
        if !(x > 0.0) {
            return Err(Error::Domain(format!("G~_p is defined on (0, inf), got x = {x}")));
        }
        Ok(self.g(x.powf(1.0 / p))? * (1.0 - p))
    }

    /// `G~_p^{-1}(y) = G^{-1}(y / (1 - p))^p`.
    pub fn tilde_g_p_inverse(&self, p: f64, y: ExtReal) -> Result<ExtReal> {
        check_p(p)?;
        let inner = match y {
            ExtReal::Finite(v) => ExtReal::Finite(v / (1.0 - p)),
            other => other,
        };
        Ok(match self.g_inverse(inner)? {
            ExtReal::Finite(x) => ExtReal::Finite(x.powf(p)),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::log_grid;
    use crate::quadrature::integrate_log;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1.0)
    }

    fn fin(v: ExtReal) -> f64 {
        v.finite().unwrap_or_else(|| panic!("expected finite value, got {v}"))
    }

    #[test]
    fn log_at_e() {
        let t = GTransform::new(EtaSpec::identity()).unwrap();
        assert!(close(fin(t.g(E).unwrap()), 1.0, 1e-12));
        assert_eq!(t.g(1.0).unwrap(), ExtReal::ZERO);
        assert_eq!(t.g(0.0).unwrap(), ExtReal::NegInf);
        assert_eq!(t.sup(), ExtReal::PosInf);
    }

    #[test]
    fn square_root_antiderivative() {
        let t = GTransform::new(EtaSpec::power(1.0, 0.5).unwrap()).unwrap();
        assert!(close(fin(t.g(4.0).unwrap()), 2.0, 1e-12));
        // G(0) = -int_0^1 u^{-1/2} du = -2
        assert!(close(fin(t.g_zero()), -2.0, 1e-10));
        assert!(close(fin(t.g(0.0).unwrap()), -2.0, 1e-10));
    }

    #[test]
    fn square_has_finite_supremum() {
        let t = GTransform::new(EtaSpec::square(1.0).unwrap()).unwrap();
        assert_eq!(t.sup(), ExtReal::Finite(1.0));
        assert!(!t.sup_is_estimate());
        assert!(close(fin(t.g(1e6).unwrap()), 1.0 - 1e-6, 1e-12));
        assert_eq!(t.g_inverse(ExtReal::Finite(2.0)).unwrap(), ExtReal::PosInf);
        assert_eq!(t.g_inverse(ExtReal::Finite(1.0)).unwrap(), ExtReal::PosInf);
        assert_eq!(t.g_zero(), ExtReal::NegInf);
    }

    #[test]
    fn estimated_supremum_for_tabulated_with_declared_convergence() {
        // eta = 1 + 2(u - 1) beyond u = 1 declared divergent: range is unbounded
        let eta = EtaSpec::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 3.0]).unwrap();
        let t = GTransform::new(eta).unwrap();
        assert_eq!(t.sup(), ExtReal::PosInf);
        assert_eq!(t.g_zero(), ExtReal::NegInf);
    }

    #[test]
    fn inverse_examples() {
        let t = GTransform::new(EtaSpec::identity()).unwrap();
        assert!(close(fin(t.g_inverse(ExtReal::Finite(1.0)).unwrap()), E, 1e-12));
        assert_eq!(t.g_inverse(ExtReal::NegInf).unwrap(), ExtReal::ZERO);
        assert_eq!(t.g_inverse(ExtReal::PosInf).unwrap(), ExtReal::PosInf);
        // far below the floor the preimage underflows to 0
        assert_eq!(t.g_inverse(ExtReal::Finite(-1e4)).unwrap(), ExtReal::ZERO);
        // beyond the knot table
        let far = fin(t.g_inverse(ExtReal::Finite(700.0)).unwrap());
        assert!(close(far, 700f64.exp(), 1e-10 * 700f64.exp()));
        assert_eq!(t.g_inverse(ExtReal::Finite(1e4)).unwrap(), ExtReal::PosInf);
    }

    #[test]
    fn inverse_below_range_for_non_osgood() {
        let t = GTransform::new(EtaSpec::power(1.0, 0.5).unwrap()).unwrap();
        assert_eq!(t.g_inverse(ExtReal::Finite(-2.0)).unwrap(), ExtReal::ZERO);
        assert!(matches!(t.g_inverse(ExtReal::Finite(-3.0)), Err(Error::Domain(_))));
        // G(x) = 2(sqrt x - 1), so G^{-1}(y) = (1 + y/2)^2 near the bottom of the range
        let x = fin(t.g_inverse(ExtReal::Finite(-2.0 + 2e-3)).unwrap());
        assert!(close(x, 1e-6, 1e-9));
    }

    #[test]
    fn tilde_examples() {
        let t = GTransform::new(EtaSpec::identity()).unwrap();
        assert!(close(fin(t.tilde_g_p(0.5, E).unwrap()), 1.0, 1e-12));
        assert_eq!(t.tilde_g_p(0.5, 1.0).unwrap(), ExtReal::ZERO);
        assert!(close(fin(t.tilde_g_p_inverse(0.5, ExtReal::Finite(1.0)).unwrap()), E, 1e-12));
        assert!(close(fin(t.tilde_g_p_inverse(0.5, ExtReal::ZERO).unwrap()), 1.0, 1e-14));
        assert_eq!(t.tilde_g_p_inverse(0.5, ExtReal::NegInf).unwrap(), ExtReal::ZERO);
        assert_eq!(t.tilde_g_p_inverse(0.5, ExtReal::PosInf).unwrap(), ExtReal::PosInf);

        let root = GTransform::new(EtaSpec::power(1.0, 0.5).unwrap()).unwrap();
        let x = 16f64.powf(0.75);
        assert!(close(fin(root.tilde_g_p(0.75, x).unwrap()), 1.5, 1e-11));
        assert!(matches!(t.tilde_g_p(0.5, 0.0), Err(Error::Domain(_))));
        assert!(matches!(t.tilde_g_p(1.5, 1.0), Err(Error::Argument(_))));
    }

    #[test]
    fn tilde_round_trip() {
        for eta in [EtaSpec::identity(), EtaSpec::power(1.0, 0.5).unwrap()] {
            let t = GTransform::new(eta).unwrap();
            for p in [0.25, 0.5, 0.75] {
                for x in log_grid(1e-2, 1e2, 32) {
                    let back = fin(t.tilde_g_p_inverse(p, t.tilde_g_p(p, x).unwrap()).unwrap());
                    assert!((back - x).abs() <= 1e-8 * x, "p={p} x={x} back={back}");
                }
            }
        }
    }

    #[test]
    fn tilde_matches_direct_quadrature_of_eta_p() {
        // int_{c^p}^x du / eta_p(u) integrated directly, independent of the knot table
        for (eta, p) in [
            (EtaSpec::identity(), 0.5),
            (EtaSpec::power(1.0, 0.5).unwrap(), 0.75),
            (EtaSpec::xlog(2.0).unwrap(), 0.6),
            (EtaSpec::xarctan(1.0).unwrap(), 0.3),
        ] {
            let t = GTransform::new(eta.clone()).unwrap();
            let kinks: Vec<f64> = eta.kinks().iter().map(|k| k.powf(p)).collect();
            for x in log_grid(1e-2, 1e2, 16) {
                let direct = integrate_log(|u| 1.0 / eta.eval_p(p, u).unwrap(), 1.0, x, 1e-12, &kinks).unwrap();
                let via_g = fin(t.tilde_g_p(p, x).unwrap());
                assert!(close(via_g, direct, 1e-7), "{} p={p} x={x}: {via_g} vs {direct}", eta.kind_name());
            }
        }
    }

    #[test]
    fn bad_anchor_is_rejected() {
        assert!(GTransform::with_anchor(EtaSpec::identity(), 0.0).is_err());
        assert!(GTransform::with_anchor(EtaSpec::identity(), f64::INFINITY).is_err());
    }

    #[test]
    fn negative_argument_is_rejected() {
        let t = GTransform::new(EtaSpec::identity()).unwrap();
        assert!(matches!(t.g(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn xlog_integrates_across_the_kink() {
        // above 1/e: eta = u + 1/e, so G(x) - G(1) = log((x + 1/e) / (1 + 1/e))
        let t = GTransform::new(EtaSpec::xlog(1.0).unwrap()).unwrap();
        let inv_e = 1.0 / E;
        for x in [0.5, 2.0, 10.0, 1e3] {
            let want = ((x + inv_e) / (1.0 + inv_e)).ln();
            assert!(close(fin(t.g(x).unwrap()), want, 1e-10));
        }
        // below 1/e: eta = u(1 + log(1/u)), G(x) - G(1/e) = -log(1 + log(1/x)) + log 2
        let g_kink = fin(t.g(inv_e).unwrap());
        for x in [1e-1f64, 1e-3, 1e-8] {
            let want = g_kink + 2f64.ln() - (1.0 - x.ln()).ln();
            assert!(close(fin(t.g(x).unwrap()), want, 1e-10));
        }
    }

    fn families() -> Vec<GTransform> {
        vec![
            GTransform::new(EtaSpec::identity()).unwrap(),
            GTransform::new(EtaSpec::power(1.0, 0.5).unwrap()).unwrap(),
            GTransform::new(EtaSpec::square(1.0).unwrap()).unwrap(),
            GTransform::new(EtaSpec::xlog(3.0).unwrap()).unwrap(),
            GTransform::new(EtaSpec::xarctan(1.0).unwrap()).unwrap(),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn round_trip(log_x in -6.0f64..6.0) {
            let x = 10f64.powf(log_x);
            for t in families() {
                let g = t.g(x).unwrap();
                let back = fin(t.g_inverse(g).unwrap());
                prop_assert!((back - x).abs() <= 1e-8 * x.max(1.0), "{} x={} back={}", t.eta().kind_name(), x, back);
                let again = fin(t.g(back).unwrap());
                prop_assert!((again - fin(g)).abs() <= 10.0 * t.quad_rel_tol() * fin(g).abs().max(1.0));
            }
        }

        #[test]
        fn anchor_independence(log_c in -2.0f64..2.0, log_h in -3.0f64..3.0, a in 0.0f64..3.0) {
            let c = 10f64.powf(log_c);
            let h = 10f64.powf(log_h);
            for eta in [EtaSpec::identity(), EtaSpec::power(1.0, 0.5).unwrap(), EtaSpec::xlog(1.0).unwrap()] {
                let t1 = GTransform::new(eta.clone()).unwrap();
                let t2 = GTransform::with_anchor(eta, c).unwrap();
                let r1 = fin(t1.g_inverse(t1.g(h).unwrap() + a).unwrap());
                let r2 = fin(t2.g_inverse(t2.g(h).unwrap() + a).unwrap());
                prop_assert!((r1 - r2).abs() <= 1e-7 * r1.max(1.0));
            }
        }

        #[test]
        fn inverse_is_monotone(y0 in -20.0f64..20.0, dy in 0.0f64..5.0) {
            for t in families() {
                let a = t.g_inverse(ExtReal::Finite(y0));
                let b = t.g_inverse(ExtReal::Finite(y0 + dy));
                if let (Ok(a), Ok(b)) = (a, b) {
                    prop_assert!(a <= b);
                }
            }
        }
    }
}
