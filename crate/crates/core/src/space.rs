//! Dissipation gauges Ψ₀, their polars and stable sets K*, and superlinear
//! viscous potentials Ψ with closed-form conjugates.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::numeric::dot;

/// Default tolerance for membership and subdifferential tests.
pub const DEFAULT_TOL: f64 = 1e-9;

/// An ℓp-type norm on ℝᵈ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    Euclid,
    Sup,
    /// ℓp with `1 < p < ∞`.
    Lp(f64),
}

impl Norm {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Norm::Lp(p) if !(p > 1.0 && p.is_finite()) => {
                Err(Error::Argument(format!("lp norm exponent must lie in (1, inf), got {p}")))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Norm::L1 => x.iter().map(|v| v.abs()).sum(),
            Norm::Euclid => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Norm::Sup => x.iter().fold(0.0, |m, v| m.max(v.abs())),
            Norm::Lp(p) => {
                let m = x.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
                if m == 0.0 {
                    return 0.0;
                }
                m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
            }
        }
    }

    /// The dual norm.
    pub fn dual(&self) -> Norm {
        match *self {
            Norm::L1 => Norm::Sup,
            Norm::Sup => Norm::L1,
            Norm::Euclid => Norm::Euclid,
            Norm::Lp(p) if (p - 2.0).abs() < 1e-15 => Norm::Euclid,
            Norm::Lp(p) => Norm::Lp(p / (p - 1.0)),
        }
    }

    /// One element of the subdifferential of the norm at `x`.
    pub fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.eval(x);
        if n == 0.0 {
            return vec![0.0; x.len()];
        }
        match *self {
            Norm::L1 => x.iter().map(|v| sign(*v)).collect(),
            Norm::Euclid => x.iter().map(|v| v / n).collect(),
            Norm::Sup => {
                let i = argmax_abs(x);
                let mut g = vec![0.0; x.len()];
                g[i] = sign(x[i]);
                g
            }
            Norm::Lp(p) => x.iter().map(|v| sign(*v) * (v.abs() / n).powf(p - 1.0)).collect(),
        }
    }

    /// One-sided directional derivative of the norm at `x` along `d`.
    pub fn dir_deriv(&self, x: &[f64], d: &[f64]) -> f64 {
        let n = self.eval(x);
        if n == 0.0 {
            return self.eval(d);
        }
        match *self {
            Norm::L1 => x
                .iter()
                .zip(d)
                .map(|(v, e)| if *v == 0.0 { e.abs() } else { sign(*v) * e })
                .sum(),
            Norm::Sup => x
                .iter()
                .zip(d)
                .filter(|(v, _)| v.abs() >= n * (1.0 - 1e-14))
                .map(|(v, e)| sign(*v) * e)
                .fold(f64::NEG_INFINITY, f64::max),
            _ => dot(&self.subgradient(x), d),
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn argmax_abs(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > x[best].abs() {
            best = i;
        }
    }
    best
}

/// The catalog of supported gauges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GaugeKind {
    /// Ψ₀(v) = Σ aᵢ|vᵢ|
    Weighted1 { weights: Vec<f64> },
    /// Ψ₀(v) = maxᵢ aᵢ|vᵢ|
    WeightedSup { weights: Vec<f64> },
    /// Ψ₀(v) = |v|
    Euclidean { dim: usize },
    /// Ψ₀(v) = Σ aᵢ⁺(vᵢ)₊ + aᵢ⁻(vᵢ)₋
    Asymmetric1 { plus: Vec<f64>, minus: Vec<f64> },
}

/// A positively 1-homogeneous, convex, nondegenerate dissipation Ψ₀.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GaugeKind", into = "GaugeKind")]
pub struct Gauge {
    kind: GaugeKind,
}

impl TryFrom<GaugeKind> for Gauge {
    type Error = Error;
    fn try_from(kind: GaugeKind) -> Result<Self> {
        Gauge::new(kind)
    }
}

impl From<Gauge> for GaugeKind {
    fn from(g: Gauge) -> Self {
        g.kind
    }
}

fn check_weights(name: &str, w: &[f64]) -> Result<()> {
    if w.is_empty() {
        return Err(Error::Argument(format!("{name}: dimension must be at least 1")));
    }
    if let Some(bad) = w.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::Argument(format!(
            "{name}: weights must be positive and finite (got {bad}); a degenerate dissipation is not allowed"
        )));
    }
    Ok(())
}

impl Gauge {
    pub fn new(kind: GaugeKind) -> Result<Self> {
        match &kind {
            GaugeKind::Weighted1 { weights } => check_weights("weighted 1-norm", weights)?,
            GaugeKind::WeightedSup { weights } => check_weights("weighted sup-norm", weights)?,
            GaugeKind::Euclidean { dim } => {
                if *dim == 0 {
                    return Err(Error::Argument("euclidean gauge: dimension must be at least 1".into()));
                }
            }
            GaugeKind::Asymmetric1 { plus, minus } => {
                check_weights("asymmetric 1-norm (plus)", plus)?;
                check_weights("asymmetric 1-norm (minus)", minus)?;
                if plus.len() != minus.len() {
                    return Err(Error::Argument("asymmetric 1-norm: plus/minus weight lengths differ".into()));
                }
            }
        }
        Ok(Gauge { kind })
    }

    /// The absolute value on ℝ.
    pub fn abs() -> Self {
        Gauge { kind: GaugeKind::Weighted1 { weights: vec![1.0] } }
    }

    pub fn l1(dim: usize) -> Result<Self> {
        Self::weighted_l1(vec![1.0; dim])
    }

    pub fn weighted_l1(weights: Vec<f64>) -> Result<Self> {
        Self::new(GaugeKind::Weighted1 { weights })
    }

    pub fn weighted_sup(weights: Vec<f64>) -> Result<Self> {
        Self::new(GaugeKind::WeightedSup { weights })
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(GaugeKind::Euclidean { dim })
    }

    pub fn asymmetric_l1(plus: Vec<f64>, minus: Vec<f64>) -> Result<Self> {
        Self::new(GaugeKind::Asymmetric1 { plus, minus })
    }

    pub fn kind(&self) -> &GaugeKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            GaugeKind::Weighted1 { weights } | GaugeKind::WeightedSup { weights } => weights.len(),
            GaugeKind::Euclidean { dim } => *dim,
            GaugeKind::Asymmetric1 { plus, .. } => plus.len(),
        }
    }

    /// Ψ₀(v).
    pub fn eval(&self, v: &[f64]) -> f64 {
        match &self.kind {
            GaugeKind::Weighted1 { weights } => weights.iter().zip(v).map(|(a, x)| a * x.abs()).sum(),
            GaugeKind::WeightedSup { weights } => {
                weights.iter().zip(v).fold(0.0, |m, (a, x)| m.max(a * x.abs()))
            }
            GaugeKind::Euclidean { .. } => Norm::Euclid.eval(v),
            GaugeKind::Asymmetric1 { plus, minus } => plus
                .iter()
                .zip(minus)
                .zip(v)
                .map(|((p, m), x)| if *x >= 0.0 { p * x } else { -m * x })
                .sum(),
        }
    }

    /// The dual gauge Ψ₀*(w) = sup{⟨w,v⟩ : Ψ₀(v) ≤ 1}.
    pub fn polar(&self, w: &[f64]) -> f64 {
        match &self.kind {
            GaugeKind::Weighted1 { weights } => {
                weights.iter().zip(w).fold(0.0, |m, (a, x)| m.max(x.abs() / a))
            }
            GaugeKind::WeightedSup { weights } => weights.iter().zip(w).map(|(a, x)| x.abs() / a).sum(),
            GaugeKind::Euclidean { .. } => Norm::Euclid.eval(w),
            GaugeKind::Asymmetric1 { plus, minus } => plus
                .iter()
                .zip(minus)
                .zip(w)
                .fold(0.0, |m, ((p, q), x)| m.max(x / p).max(-x / q)),
        }
    }

    /// A unit-gauge direction v with ⟨w,v⟩ = Ψ₀*(w), i.e. an element of ∂Ψ₀*(w).
    pub fn polar_normal(&self, w: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut v = vec![0.0; d];
        match &self.kind {
            GaugeKind::Weighted1 { weights } => {
                let i = (0..d).fold(0, |b, i| if w[i].abs() / weights[i] > w[b].abs() / weights[b] { i } else { b });
                v[i] = if w[i] < 0.0 { -1.0 } else { 1.0 } / weights[i];
            }
            GaugeKind::WeightedSup { weights } => {
                for i in 0..d {
                    v[i] = sign(w[i]) / weights[i];
                }
            }
            GaugeKind::Euclidean { .. } => {
                let n = Norm::Euclid.eval(w);
                if n > 0.0 {
                    v.iter_mut().zip(w).for_each(|(vi, wi)| *vi = wi / n);
                } else {
                    v[0] = 1.0;
                }
            }
            GaugeKind::Asymmetric1 { plus, minus } => {
                let mut best = (f64::NEG_INFINITY, 0, 1.0);
                for i in 0..d {
                    let up = w[i] / plus[i];
                    let down = -w[i] / minus[i];
                    if up > best.0 {
                        best = (up, i, 1.0 / plus[i]);
                    }
                    if down > best.0 {
                        best = (down, i, -1.0 / minus[i]);
                    }
                }
                v[best.1] = best.2;
            }
        }
        v
    }

    /// Membership w ∈ K* up to `tol`: Ψ₀*(w) ≤ 1 + tol.
    pub fn kstar_contains(&self, w: &[f64], tol: f64) -> bool {
        self.polar(w) <= 1.0 + tol
    }

    /// K* as a box `[lower, upper]`, when it is one.
    pub fn kstar_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.kind {
            GaugeKind::Weighted1 { weights } => Some((weights.iter().map(|a| -a).collect(), weights.clone())),
            GaugeKind::Asymmetric1 { plus, minus } => Some((minus.iter().map(|a| -a).collect(), plus.clone())),
            _ => None,
        }
    }

    /// A nearest point of K* to `w` measured in `dual_norm`.
    pub fn kstar_project(&self, dual_norm: Norm, w: &[f64]) -> Result<Vec<f64>> {
        if let Some((lo, hi)) = self.kstar_box() {
            // clamping is optimal for every norm that is monotone in |residual| componentwise
            return Ok(w.iter().zip(lo.iter().zip(&hi)).map(|(x, (l, h))| x.clamp(*l, *h)).collect());
        }
        match (&self.kind, dual_norm) {
            (GaugeKind::Euclidean { .. }, Norm::Euclid) => {
                let n = Norm::Euclid.eval(w);
                Ok(if n <= 1.0 { w.to_vec() } else { w.iter().map(|x| x / n).collect() })
            }
            (GaugeKind::Euclidean { .. }, Norm::Lp(p)) if (p - 2.0).abs() < 1e-15 => {
                self.kstar_project(Norm::Euclid, w)
            }
            _ => Err(Error::Config(format!(
                "distance to the stable set of {:?} in the {:?} norm is not supported",
                self.kind, dual_norm
            ))),
        }
    }

    /// dist_*(w, K*) = min over z ∈ K* of |w − z|_*.
    pub fn kstar_dist(&self, dual_norm: Norm, w: &[f64]) -> Result<f64> {
        let z = self.kstar_project(dual_norm, w)?;
        let r: Vec<f64> = w.iter().zip(&z).map(|(a, b)| a - b).collect();
        Ok(dual_norm.eval(&r))
    }

    /// w ∈ ∂Ψ₀(v) up to `tol`.
    pub fn subdiff_contains(&self, v: &[f64], w: &[f64], tol: f64) -> bool {
        let psi = self.eval(v);
        self.kstar_contains(w, tol) && (dot(w, v) - psi).abs() <= tol * (1.0 + psi)
    }

    /// One-sided directional derivative Ψ₀′(v; d).
    pub fn dir_deriv(&self, v: &[f64], d: &[f64]) -> f64 {
        match &self.kind {
            GaugeKind::Weighted1 { weights } => weights
                .iter()
                .zip(v.iter().zip(d))
                .map(|(a, (x, e))| a * if *x == 0.0 { e.abs() } else { sign(*x) * e })
                .sum(),
            GaugeKind::Asymmetric1 { plus, minus } => plus
                .iter()
                .zip(minus)
                .zip(v.iter().zip(d))
                .map(|((p, m), (x, e))| {
                    let s = if *x != 0.0 { sign(*x) } else { sign(*e) };
                    if s > 0.0 {
                        p * e
                    } else {
                        -m * e
                    }
                })
                .sum(),
            GaugeKind::Euclidean { .. } => Norm::Euclid.dir_deriv(v, d),
            GaugeKind::WeightedSup { weights } => {
                let n = self.eval(v);
                if n == 0.0 {
                    return self.eval(d);
                }
                weights
                    .iter()
                    .zip(v.iter().zip(d))
                    .filter(|(a, (x, _))| *a * x.abs() >= n * (1.0 - 1e-14))
                    .map(|(a, (x, e))| a * sign(*x) * e)
                    .fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// A constant η with η⁻¹|v| ≤ Ψ₀(v) ≤ η|v| in the Euclidean norm.
    pub fn eta(&self) -> f64 {
        let d = self.dim() as f64;
        let (lo, hi) = match &self.kind {
            GaugeKind::Weighted1 { weights } => (min_of(weights), max_of(weights) * d.sqrt()),
            GaugeKind::WeightedSup { weights } => (min_of(weights) / d.sqrt(), max_of(weights)),
            GaugeKind::Euclidean { .. } => (1.0, 1.0),
            GaugeKind::Asymmetric1 { plus, minus } => {
                (min_of(plus).min(min_of(minus)), max_of(plus).max(max_of(minus)) * d.sqrt())
            }
        };
        hi.max(1.0 / lo)
    }
}

fn min_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(0.0, f64::max)
}

/// The superlinear part of a viscous potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Viscosity {
    /// Ψ = F(Ψ₀) with F(r) = r + r²/2.
    GaugePower,
    /// Ψ = Ψ₀ + ‖·‖ᵖ/p.
    NormPower { norm: Norm, p: f64 },
    /// Ψ = Ψ₀ + Σ |vᵢ|^{pᵢ}/pᵢ (box-shaped K* only).
    Additive { exponents: Vec<f64> },
}

/// A convex superlinear potential Ψ ≥ Ψ₀ with its conjugate and rescalings Ψ_ε = Ψ(ε·)/ε.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViscousPotential {
    gauge: Gauge,
    viscosity: Viscosity,
}

impl ViscousPotential {
    pub fn new(gauge: Gauge, viscosity: Viscosity) -> Result<Self> {
        let d = gauge.dim();
        match &viscosity {
            Viscosity::GaugePower => {}
            Viscosity::NormPower { norm, p } => {
                norm.validate()?;
                if !(*p > 1.0 && p.is_finite()) {
                    return Err(Error::Argument(format!("viscosity exponent must exceed 1, got {p}")));
                }
                // the conjugate needs the distance to K* in the dual norm
                gauge.kstar_project(norm.dual(), &vec![0.0; d])?;
            }
            Viscosity::Additive { exponents } => {
                if exponents.len() != d {
                    return Err(Error::Argument(format!(
                        "additive viscosity needs {d} exponents, got {}",
                        exponents.len()
                    )));
                }
                if let Some(p) = exponents.iter().find(|p| !(**p > 1.0 && p.is_finite())) {
                    return Err(Error::Argument(format!("viscosity exponent must exceed 1, got {p}")));
                }
                if gauge.kstar_box().is_none() {
                    return Err(Error::Config(
                        "additive viscosity requires a weighted or asymmetric 1-norm gauge".into(),
                    ));
                }
            }
        }
        Ok(ViscousPotential { gauge, viscosity })
    }

    /// |·| + (·)²/2 on ℝ.
    pub fn quadratic_1d() -> Self {
        ViscousPotential { gauge: Gauge::abs(), viscosity: Viscosity::NormPower { norm: Norm::Euclid, p: 2.0 } }
    }

    pub fn gauge(&self) -> &Gauge {
        &self.gauge
    }

    pub fn viscosity(&self) -> &Viscosity {
        &self.viscosity
    }

    pub fn dim(&self) -> usize {
        self.gauge.dim()
    }

    /// Ψ(v).
    pub fn eval(&self, v: &[f64]) -> f64 {
        self.eval_scaled(1.0, v)
    }

    /// Ψ_ε(v) = Ψ(εv)/ε, evaluated in the cancellation-free closed form.
    pub fn eval_eps(&self, eps: f64, v: &[f64]) -> Result<f64> {
        check_eps(eps)?;
        Ok(self.eval_scaled(eps, v))
    }

    pub(crate) fn eval_scaled(&self, eps: f64, v: &[f64]) -> f64 {
        let r = self.gauge.eval(v);
        match &self.viscosity {
            Viscosity::GaugePower => r + 0.5 * eps * r * r,
            Viscosity::NormPower { norm, p } => r + eps.powf(p - 1.0) * norm.eval(v).powf(*p) / p,
            Viscosity::Additive { exponents } => {
                r + exponents.iter().zip(v).map(|(p, x)| eps.powf(p - 1.0) * x.abs().powf(*p) / p).sum::<f64>()
            }
        }
    }

    /// Ψ*(w) = sup_v ⟨w,v⟩ − Ψ(v).
    pub fn conj(&self, w: &[f64]) -> f64 {
        match &self.viscosity {
            Viscosity::GaugePower => {
                let e = (self.gauge.polar(w) - 1.0).max(0.0);
                0.5 * e * e
            }
            Viscosity::NormPower { norm, p } => {
                let q = p / (p - 1.0);
                let d = self.gauge.kstar_dist(norm.dual(), w).expect("validated at construction");
                d.powf(q) / q
            }
            Viscosity::Additive { exponents } => {
                let (lo, hi) = self.gauge.kstar_box().expect("validated at construction");
                exponents
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        let q = p / (p - 1.0);
                        let e = (w[i] - hi[i]).max(lo[i] - w[i]).max(0.0);
                        e.powf(q) / q
                    })
                    .sum()
            }
        }
    }

    /// Ψ_ε*(w) = Ψ*(w)/ε.
    pub fn conj_eps(&self, eps: f64, w: &[f64]) -> Result<f64> {
        check_eps(eps)?;
        Ok(self.conj(w) / eps)
    }

    /// An element of ∂Ψ*(w): a velocity v with w ∈ ∂Ψ(v).
    pub fn conj_grad(&self, w: &[f64]) -> Vec<f64> {
        let d = self.dim();
        match &self.viscosity {
            Viscosity::GaugePower => {
                let e = (self.gauge.polar(w) - 1.0).max(0.0);
                if e == 0.0 {
                    return vec![0.0; d];
                }
                self.gauge.polar_normal(w).into_iter().map(|x| e * x).collect()
            }
            Viscosity::NormPower { norm, p } => {
                let q = p / (p - 1.0);
                let dual = norm.dual();
                let z = self.gauge.kstar_project(dual, w).expect("validated at construction");
                let r: Vec<f64> = w.iter().zip(&z).map(|(a, b)| a - b).collect();
                let dist = dual.eval(&r);
                if dist == 0.0 {
                    return vec![0.0; d];
                }
                let s = dist.powf(q - 1.0);
                dual.subgradient(&r).into_iter().map(|x| s * x).collect()
            }
            Viscosity::Additive { exponents } => {
                let (lo, hi) = self.gauge.kstar_box().expect("validated at construction");
                (0..d)
                    .map(|i| {
                        let q = exponents[i] / (exponents[i] - 1.0);
                        if w[i] > hi[i] {
                            (w[i] - hi[i]).powf(q - 1.0)
                        } else if w[i] < lo[i] {
                            -(lo[i] - w[i]).powf(q - 1.0)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
        }
    }

    /// One-sided directional derivative Ψ′(v; d).
    pub fn dir_deriv(&self, v: &[f64], d: &[f64]) -> f64 {
        let g = self.gauge.dir_deriv(v, d);
        match &self.viscosity {
            Viscosity::GaugePower => (1.0 + self.gauge.eval(v)) * g,
            Viscosity::NormPower { norm, p } => {
                let n = norm.eval(v);
                if n == 0.0 {
                    g
                } else {
                    g + n.powf(p - 1.0) * norm.dir_deriv(v, d)
                }
            }
            Viscosity::Additive { exponents } => {
                g + exponents
                    .iter()
                    .zip(v.iter().zip(d))
                    .map(|(p, (x, e))| sign(*x) * x.abs().powf(p - 1.0) * e)
                    .sum::<f64>()
            }
        }
    }

    /// Fenchel gap Ψ(v) + Ψ*(w) − ⟨w,v⟩ ≥ 0.
    pub fn fenchel_gap(&self, v: &[f64], w: &[f64]) -> f64 {
        self.eval(v) + self.conj(w) - dot(w, v)
    }

    /// Fenchel gap of the rescaled pair, Ψ_ε(v) + Ψ_ε*(w) − ⟨w,v⟩.
    pub fn fenchel_gap_eps(&self, eps: f64, v: &[f64], w: &[f64]) -> Result<f64> {
        check_eps(eps)?;
        Ok(self.eval_scaled(eps, v) + self.conj(w) / eps - dot(w, v))
    }

    /// w ∈ ∂Ψ(v) up to `tol`, via the Fenchel equality.
    pub fn subdiff_contains(&self, v: &[f64], w: &[f64], tol: f64) -> bool {
        self.fenchel_gap(v, w) <= tol * (1.0 + dot(w, v).abs())
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("viscosity parameter must be positive, got {eps}")))
    }
}

pub(crate) fn check_vec(name: &str, v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::Argument(format!("{name} has dimension {}, expected {dim}", v.len())));
    }
    ensure_finite(name, v)
}
