//! Rate functions `φ = ψ / Λ` and leak kernels `g`.

use serde::{Deserialize, Serialize};

/// Parametric shape of a normalized rate function `φ: ℝ → [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum RateShape {
    /// `clip(base + slope·x, 0, 1)`.
    ClippedAffine { base: f64, slope: f64 },
    /// Linear interpolation between knots `[x, y]`, constant beyond the end knots.
    PiecewiseLinear { knots: Vec<[f64; 2]> },
    /// `floor + (ceiling - floor) / (1 + exp(-steepness·(x - midpoint)))`.
    LogisticScaled { floor: f64, ceiling: f64, steepness: f64, midpoint: f64 },
}

/// A normalized rate function together with its declared Lipschitz constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFunction {
    #[serde(flatten)]
    pub shape: RateShape,
    /// Declared Lipschitz constant; defaults to the tight analytic one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
}

impl RateFunction {
    pub fn clipped_affine(base: f64, slope: f64) -> Self {
        Self { shape: RateShape::ClippedAffine { base, slope }, lipschitz: None }
    }

    pub fn piecewise_linear(knots: Vec<[f64; 2]>) -> Self {
        Self { shape: RateShape::PiecewiseLinear { knots }, lipschitz: None }
    }

    pub fn logistic(floor: f64, ceiling: f64, steepness: f64, midpoint: f64) -> Self {
        Self { shape: RateShape::LogisticScaled { floor, ceiling, steepness, midpoint }, lipschitz: None }
    }

    pub fn with_lipschitz(mut self, gamma: f64) -> Self {
        self.lipschitz = Some(gamma);
        self
    }

    /// `φ(x)`, clamped to `[0, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        let v = match &self.shape {
            RateShape::ClippedAffine { base, slope } => base + slope * x,
            RateShape::PiecewiseLinear { knots } => interpolate(knots, x),
            RateShape::LogisticScaled { floor, ceiling, steepness, midpoint } => {
                floor + (ceiling - floor) / (1.0 + (-steepness * (x - midpoint)).exp())
            }
        };
        v.clamp(0.0, 1.0)
    }

    /// Smallest Lipschitz constant of the shape, computed analytically.
    pub fn tight_lipschitz(&self) -> f64 {
        match &self.shape {
            RateShape::ClippedAffine { slope, .. } => slope.abs(),
            RateShape::PiecewiseLinear { knots } => {
                knots.windows(2).map(|w| ((w[1][1] - w[0][1]) / (w[1][0] - w[0][0])).abs()).fold(0.0, f64::max)
            }
            RateShape::LogisticScaled { floor, ceiling, steepness, .. } => {
                (ceiling - floor).abs() * steepness.abs() / 4.0
            }
        }
    }

    /// The constant `γ` used by condition checkers and bounds.
    pub fn gamma(&self) -> f64 {
        self.lipschitz.unwrap_or_else(|| self.tight_lipschitz())
    }

    /// Abscissae where the function is not affine. `None` for smooth shapes.
    pub fn breakpoints(&self) -> Option<Vec<f64>> {
        match &self.shape {
            RateShape::ClippedAffine { base, slope } => {
                if *slope == 0.0 {
                    Some(Vec::new())
                } else {
                    let mut v = vec![-base / slope, (1.0 - base) / slope];
                    v.sort_by(f64::total_cmp);
                    Some(v)
                }
            }
            RateShape::PiecewiseLinear { knots } => Some(knots.iter().map(|k| k[0]).collect()),
            RateShape::LogisticScaled { .. } => None,
        }
    }

    /// Checks monotonicity, range and the declared Lipschitz constant.
    pub fn validate(&self) -> Result<(), String> {
        match &self.shape {
            RateShape::ClippedAffine { base, slope } => {
                if !base.is_finite() || !slope.is_finite() {
                    return Err("clipped_affine parameters must be finite".into());
                }
                if *slope < 0.0 {
                    return Err("clipped_affine slope must be non-negative".into());
                }
            }
            RateShape::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return Err("piecewise_linear needs at least one knot".into());
                }
                for w in knots.windows(2) {
                    if !(w[1][0] > w[0][0]) {
                        return Err("piecewise_linear knot abscissae must increase".into());
                    }
                    if w[1][1] < w[0][1] {
                        return Err("piecewise_linear values must be non-decreasing".into());
                    }
                }
                if knots.iter().any(|k| !(0.0..=1.0).contains(&k[1]) || !k[0].is_finite()) {
                    return Err("piecewise_linear values must lie in [0, 1]".into());
                }
            }
            RateShape::LogisticScaled { floor, ceiling, steepness, midpoint } => {
                if !(0.0..=1.0).contains(floor) || !(0.0..=1.0).contains(ceiling) {
                    return Err("logistic floor and ceiling must lie in [0, 1]".into());
                }
                if floor > ceiling || *steepness < 0.0 || !midpoint.is_finite() {
                    return Err("logistic must be non-decreasing".into());
                }
            }
        }
        if let Some(g) = self.lipschitz {
            let tight = self.tight_lipschitz();
            if !(g >= 0.0) || g + 1e-12 < tight {
                return Err(format!("declared lipschitz constant {g} is below the actual constant {tight}"));
            }
        }
        Ok(())
    }
}

fn interpolate(knots: &[[f64; 2]], x: f64) -> f64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if x <= first[0] {
        return first[1];
    }
    if x >= last[0] {
        return last[1];
    }
    let idx = knots.partition_point(|k| k[0] <= x);
    let (a, b) = (knots[idx - 1], knots[idx]);
    a[1] + (b[1] - a[1]) * (x - a[0]) / (b[0] - a[0])
}

/// Non-increasing, integrable leak kernel `g: ℝ₊ → ℝ₊`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum LeakFunction {
    /// `amplitude · exp(-rate·s)`.
    Exponential { amplitude: f64, rate: f64 },
    /// `amplitude · (1 + s)^(-exponent)`.
    PowerLaw { amplitude: f64, exponent: f64 },
    /// `amplitude · (1 + rate·s) · exp(-rate·s)`; integrated numerically.
    Alpha { amplitude: f64, rate: f64 },
}

/// Absolute tolerance for numerically integrated leak kernels.
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;

impl LeakFunction {
    pub fn exponential(rate: f64) -> Self {
        LeakFunction::Exponential { amplitude: 1.0, rate }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        match *self {
            LeakFunction::Exponential { amplitude, rate } => amplitude * (-rate * s).exp(),
            LeakFunction::PowerLaw { amplitude, exponent } => amplitude * (1.0 + s).powf(-exponent),
            LeakFunction::Alpha { amplitude, rate } => amplitude * (1.0 + rate * s) * (-rate * s).exp(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            LeakFunction::Exponential { amplitude, rate } | LeakFunction::Alpha { amplitude, rate } => {
                if !(amplitude >= 0.0) || !amplitude.is_finite() {
                    return Err("leak amplitude must be finite and non-negative".into());
                }
                if !(rate > 0.0) || !rate.is_finite() {
                    return Err("leak rate must be positive for integrability".into());
                }
            }
            LeakFunction::PowerLaw { amplitude, exponent } => {
                if !(amplitude >= 0.0) || !amplitude.is_finite() {
                    return Err("leak amplitude must be finite and non-negative".into());
                }
                if !(exponent > 1.0) {
                    return Err("power-law leak needs exponent > 1 for integrability".into());
                }
            }
        }
        Ok(())
    }

    /// `∫_a^b g(s) ds` for `0 ≤ a ≤ b`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match *self {
            LeakFunction::Exponential { amplitude, rate } => amplitude * ((-rate * a).exp() - (-rate * b).exp()) / rate,
            LeakFunction::PowerLaw { amplitude, exponent } => {
                let p = exponent;
                amplitude * ((1.0 + a).powf(1.0 - p) - (1.0 + b).powf(1.0 - p)) / (p - 1.0)
            }
            LeakFunction::Alpha { .. } => {
                if b.is_infinite() {
                    self.tail(a)
                } else {
                    adaptive_simpson(&|s| self.eval(s), a, b, QUADRATURE_TOLERANCE)
                }
            }
        }
    }

    /// `∫_a^∞ g(s) ds`.
    pub fn tail(&self, a: f64) -> f64 {
        match *self {
            LeakFunction::Exponential { amplitude, rate } => amplitude * (-rate * a).exp() / rate,
            LeakFunction::PowerLaw { amplitude, exponent } => {
                amplitude * (1.0 + a).powf(1.0 - exponent) / (exponent - 1.0)
            }
            LeakFunction::Alpha { .. } => integrate_to_infinity(&|s| self.eval(s), a),
        }
    }

    /// `∫_a^∞ s·g(s) ds`, or `None` when it diverges.
    pub fn first_moment_tail(&self, a: f64) -> Option<f64> {
        match *self {
            LeakFunction::Exponential { amplitude, rate } => {
                Some(amplitude * (-rate * a).exp() * (a / rate + 1.0 / (rate * rate)))
            }
            LeakFunction::PowerLaw { amplitude, exponent } => {
                if exponent <= 2.0 {
                    return None;
                }
                // s = (1+s) - 1
                let p = exponent;
                let m1 = (1.0 + a).powf(2.0 - p) / (p - 2.0);
                let m0 = (1.0 + a).powf(1.0 - p) / (p - 1.0);
                Some(amplitude * (m1 - m0))
            }
            LeakFunction::Alpha { .. } => Some(integrate_to_infinity(&|s| s * self.eval(s), a)),
        }
    }

    /// Smallest horizon `H` (to 1e-6 relative precision) with `scale · ∫_H^∞ g ≤ tol`.
    pub fn horizon_for(&self, scale: f64, tol: f64) -> f64 {
        if scale <= 0.0 || self.tail(0.0) * scale <= tol {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.tail(hi) * scale > tol {
            hi *= 2.0;
            if hi > 1e12 {
                return f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.tail(mid) * scale > tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 48)
}

/// `∫_a^∞ f` through the substitution `s = a + u/(1-u)`.
fn integrate_to_infinity(f: &dyn Fn(f64) -> f64, a: f64) -> f64 {
    let mapped = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let one_minus = 1.0 - u;
        f(a + u / one_minus) / (one_minus * one_minus)
    };
    adaptive_simpson(&mapped, 0.0, 1.0, QUADRATURE_TOLERANCE)
}
