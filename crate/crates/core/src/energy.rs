//! Time-dependent C¹ energies E(t,u) driven by piecewise-linear loadings.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::numeric::{halton, norm2};

/// Anything the solvers can minimize: a smooth energy with gradient and power.
pub trait EnergyFunctional: Sync {
    fn dim(&self) -> usize;
    /// Final time T; evaluations are meaningful on [0, T].
    fn horizon(&self) -> f64;
    fn value(&self, t: f64, u: &[f64]) -> f64;
    /// DE(t,u).
    fn gradient(&self, t: f64, u: &[f64]) -> Vec<f64>;
    /// ∂ₜE(t,u), right derivative in time.
    fn power(&self, t: f64, u: &[f64]) -> f64;
    /// ∂ₜE(t,u), left derivative in time.
    fn power_left(&self, t: f64, u: &[f64]) -> f64 {
        self.power(t, u)
    }

    /// The driving force w = −DE(t,u).
    fn force(&self, t: f64, u: &[f64]) -> Vec<f64> {
        self.gradient(t, u).into_iter().map(|x| -x).collect()
    }
}

/// A vector-valued piecewise-linear function of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Loading {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl Loading {
    /// Breakpoints `(t_k, ℓ(t_k))` with strictly increasing times.
    pub fn new(breakpoints: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::Argument("loading needs at least one breakpoint".into()));
        }
        let dim = breakpoints[0].1.len();
        for (k, (t, v)) in breakpoints.iter().enumerate() {
            ensure_finite("loading breakpoint", std::slice::from_ref(t))?;
            ensure_finite("loading value", v)?;
            if v.len() != dim {
                return Err(Error::Argument("loading values have inconsistent dimensions".into()));
            }
            if k > 0 && *t <= breakpoints[k - 1].0 {
                return Err(Error::Argument("loading breakpoints must be strictly increasing".into()));
            }
        }
        let (times, values) = breakpoints.into_iter().unzip();
        Ok(Loading { times, values })
    }

    pub fn constant(value: Vec<f64>) -> Self {
        Loading { times: vec![0.0], values: vec![value] }
    }

    /// ℓ(t) = slope·t on [0, horizon].
    pub fn ramp(slope: Vec<f64>, horizon: f64) -> Self {
        let end = slope.iter().map(|s| s * horizon).collect();
        Loading { times: vec![0.0, horizon], values: vec![vec![0.0; slope.len()], end] }
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.times.iter().copied().zip(self.values.iter().map(|v| v.as_slice()))
    }

    pub fn covers(&self, a: f64, b: f64) -> bool {
        self.times.len() == 1 || (self.times[0] <= a && *self.times.last().unwrap() >= b)
    }

    fn segment(&self, t: f64, left: bool) -> usize {
        let n = self.times.len();
        let k = if left {
            self.times.partition_point(|&s| s < t)
        } else {
            self.times.partition_point(|&s| s <= t)
        };
        k.saturating_sub(1).min(n - 2)
    }

    pub fn value(&self, t: f64) -> Vec<f64> {
        if self.times.len() == 1 {
            return self.values[0].clone();
        }
        let k = self.segment(t, false);
        let s = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        self.values[k].iter().zip(&self.values[k + 1]).map(|(a, b)| a + s * (b - a)).collect()
    }

    fn slope(&self, t: f64, left: bool) -> Vec<f64> {
        if self.times.len() == 1 {
            return vec![0.0; self.dim()];
        }
        let k = self.segment(t, left);
        let dt = self.times[k + 1] - self.times[k];
        self.values[k].iter().zip(&self.values[k + 1]).map(|(a, b)| (b - a) / dt).collect()
    }

    /// ℓ′(t), right derivative.
    pub fn rate(&self, t: f64) -> Vec<f64> {
        self.slope(t, false)
    }

    /// ℓ′(t), left derivative.
    pub fn rate_left(&self, t: f64) -> Vec<f64> {
        self.slope(t, true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EnergyKind {
    /// E = ½⟨A(u−ℓ), u−ℓ⟩ with A symmetric positive definite.
    QuadraticTracking { matrix: Vec<Vec<f64>> },
    /// E = (u²−1)²/4 − ℓu on ℝ.
    DoubleWell1d,
    /// E = Σₖ cₖuᵏ − ℓu on ℝ.
    Polynomial { coeffs: Vec<f64> },
}

/// A catalog energy with its loading and time horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Energy {
    kind: EnergyKind,
    loading: Loading,
    horizon: f64,
}

fn is_spd(a: &[Vec<f64>]) -> bool {
    let n = a.len();
    if a.iter().any(|row| row.len() != n) {
        return false;
    }
    for i in 0..n {
        for j in 0..i {
            if (a[i][j] - a[j][i]).abs() > 1e-12 * (1.0 + a[i][j].abs()) {
                return false;
            }
        }
    }
    // Cholesky succeeds iff positive definite
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > 0.0) {
                    return false;
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    true
}

impl Energy {
    pub fn new(kind: EnergyKind, loading: Loading, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Argument(format!("horizon must be positive, got {horizon}")));
        }
        let dim = match &kind {
            EnergyKind::QuadraticTracking { matrix } => {
                if matrix.is_empty() || !is_spd(matrix) {
                    return Err(Error::Argument("tracking matrix must be symmetric positive definite".into()));
                }
                matrix.len()
            }
            EnergyKind::DoubleWell1d => 1,
            EnergyKind::Polynomial { coeffs } => {
                if coeffs.is_empty() {
                    return Err(Error::Argument("polynomial energy needs coefficients".into()));
                }
                ensure_finite("polynomial coefficient", coeffs)?;
                1
            }
        };
        if loading.dim() != dim {
            return Err(Error::Argument(format!("loading has dimension {}, energy has {dim}", loading.dim())));
        }
        if !loading.covers(0.0, horizon) {
            return Err(Error::Argument("loading breakpoints must cover [0, T]".into()));
        }
        Ok(Energy { kind, loading, horizon })
    }

    /// The scalar quadratic (u − ℓ(t))²/2.
    pub fn quadratic_1d(loading: Loading, horizon: f64) -> Result<Self> {
        Self::new(EnergyKind::QuadraticTracking { matrix: vec![vec![1.0]] }, loading, horizon)
    }

    pub fn double_well(loading: Loading, horizon: f64) -> Result<Self> {
        Self::new(EnergyKind::DoubleWell1d, loading, horizon)
    }

    pub fn kind(&self) -> &EnergyKind {
        &self.kind
    }

    pub fn loading(&self) -> &Loading {
        &self.loading
    }

    fn check(&self, t: f64, u: &[f64]) -> Result<()> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::Argument(format!("time {t} outside [0, {}]", self.horizon)));
        }
        if u.len() != self.dim() {
            return Err(Error::Argument(format!("state has dimension {}, expected {}", u.len(), self.dim())));
        }
        ensure_finite("state", u)
    }

    /// E(t,u) with argument checks.
    pub fn e_eval(&self, t: f64, u: &[f64]) -> Result<f64> {
        self.check(t, u)?;
        Ok(self.value(t, u))
    }

    /// DE(t,u) with argument checks.
    pub fn de_eval(&self, t: f64, u: &[f64]) -> Result<Vec<f64>> {
        self.check(t, u)?;
        Ok(self.gradient(t, u))
    }

    /// ∂ₜE(t,u) with argument checks.
    pub fn dte_eval(&self, t: f64, u: &[f64]) -> Result<f64> {
        self.check(t, u)?;
        Ok(self.power(t, u))
    }

    fn power_with(&self, u: &[f64], l: &[f64], rate: &[f64]) -> f64 {
        match &self.kind {
            EnergyKind::QuadraticTracking { matrix } => {
                let r: Vec<f64> = u.iter().zip(l).map(|(a, b)| a - b).collect();
                -matrix.iter().zip(rate).map(|(row, dl)| dl * row.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>()).sum::<f64>()
            }
            EnergyKind::DoubleWell1d | EnergyKind::Polynomial { .. } => -rate[0] * u[0],
        }
    }
}

impl EnergyFunctional for Energy {
    fn dim(&self) -> usize {
        self.loading.dim()
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn value(&self, t: f64, u: &[f64]) -> f64 {
        let l = self.loading.value(t);
        match &self.kind {
            EnergyKind::QuadraticTracking { matrix } => {
                let r: Vec<f64> = u.iter().zip(&l).map(|(a, b)| a - b).collect();
                0.5 * matrix.iter().zip(&r).map(|(row, ri)| ri * row.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>()).sum::<f64>()
            }
            EnergyKind::DoubleWell1d => {
                let x = u[0];
                let s = x * x - 1.0;
                0.25 * s * s - l[0] * x
            }
            EnergyKind::Polynomial { coeffs } => {
                let x = u[0];
                coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c) - l[0] * x
            }
        }
    }

    fn gradient(&self, t: f64, u: &[f64]) -> Vec<f64> {
        let l = self.loading.value(t);
        match &self.kind {
            EnergyKind::QuadraticTracking { matrix } => {
                let r: Vec<f64> = u.iter().zip(&l).map(|(a, b)| a - b).collect();
                matrix.iter().map(|row| row.iter().zip(&r).map(|(a, b)| a * b).sum()).collect()
            }
            EnergyKind::DoubleWell1d => {
                let x = u[0];
                vec![x * x * x - x - l[0]]
            }
            EnergyKind::Polynomial { coeffs } => {
                let x = u[0];
                let d = coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (k, c)| acc * x + k as f64 * c);
                vec![d - l[0]]
            }
        }
    }

    fn power(&self, t: f64, u: &[f64]) -> f64 {
        self.power_with(u, &self.loading.value(t), &self.loading.rate(t))
    }

    fn power_left(&self, t: f64, u: &[f64]) -> f64 {
        self.power_with(u, &self.loading.value(t), &self.loading.rate_left(t))
    }
}

/// An axis-aligned box in state space with a lattice resolution for global scans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// lattice cells per dimension
    pub cells: usize,
}

impl SearchBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, cells: usize) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Argument("box bounds must have equal, nonzero dimension".into()));
        }
        ensure_finite("box bound", &lower)?;
        ensure_finite("box bound", &upper)?;
        if lower.iter().zip(&upper).any(|(a, b)| a >= b) {
            return Err(Error::Argument("box must be nonempty in every coordinate".into()));
        }
        if cells < 2 {
            return Err(Error::Argument("box lattice needs at least 2 cells".into()));
        }
        Ok(SearchBox { lower, upper, cells })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.iter().zip(self.lower.iter().zip(&self.upper)).all(|(x, (a, b))| *a <= *x && *x <= *b)
    }

    pub fn diameter(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    pub fn spacing(&self, i: usize) -> f64 {
        (self.upper[i] - self.lower[i]) / self.cells as f64
    }

    /// Number of lattice points.
    pub fn lattice_len(&self) -> usize {
        (self.cells + 1).pow(self.dim() as u32)
    }

    /// Lattice point number `index` (first coordinate fastest).
    pub fn lattice_point(&self, index: usize) -> Vec<f64> {
        let mut rem = index;
        (0..self.dim())
            .map(|i| {
                let k = rem % (self.cells + 1);
                rem /= self.cells + 1;
                if k == self.cells {
                    self.upper[i]
                } else {
                    self.lower[i] + k as f64 * self.spacing(i)
                }
            })
            .collect()
    }
}

/// Sampled evidence for the standing assumptions on E.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub samples: usize,
    pub inf_energy: f64,
    /// smallest C with |∂ₜE| ≤ C(1 + E⁺) on the samples
    pub power_constant: f64,
    /// worst relative mismatch between DE and centered differences
    pub gradient_residual: f64,
}

/// Sample `n_samples` Halton points of box × [0,T] and check lower bound, power bound and gradient.
pub fn assumption_report<E: EnergyFunctional + ?Sized>(
    energy: &E,
    bx: &SearchBox,
    n_samples: usize,
) -> Result<AssumptionReport> {
    let d = energy.dim();
    if bx.dim() != d {
        return Err(Error::Argument("box dimension does not match the energy".into()));
    }
    if n_samples == 0 {
        return Err(Error::Argument("need at least one sample".into()));
    }
    let horizon = energy.horizon();
    let mut report =
        AssumptionReport { samples: n_samples, inf_energy: f64::INFINITY, power_constant: 0.0, gradient_residual: 0.0 };
    for k in 0..n_samples {
        let h = halton(k, d + 1);
        let u: Vec<f64> = (0..d).map(|i| bx.lower[i] + h[i] * (bx.upper[i] - bx.lower[i])).collect();
        let t = h[d] * horizon;
        let e = energy.value(t, &u);
        report.inf_energy = report.inf_energy.min(e);
        report.power_constant = report.power_constant.max(energy.power(t, &u).abs() / (1.0 + e.max(0.0)));

        let de = energy.gradient(t, &u);
        let step = 1e-6 * (1.0 + norm2(&u));
        let fd: Vec<f64> = (0..d)
            .map(|i| {
                let mut up = u.clone();
                let mut dn = u.clone();
                up[i] += step;
                dn[i] -= step;
                (energy.value(t, &up) - energy.value(t, &dn)) / (2.0 * step)
            })
            .collect();
        let diff: Vec<f64> = fd.iter().zip(&de).map(|(a, b)| a - b).collect();
        let residual = norm2(&diff) / (1.0 + norm2(&de));
        if residual > 1e-4 {
            return Err(Error::Validation { residual, time: t, point: u });
        }
        report.gradient_residual = report.gradient_residual.max(residual);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_gradient(e: &Energy, t: f64, u: f64) -> f64 {
        let h = 1e-6;
        (e.value(t, &[u + h]) - e.value(t, &[u - h])) / (2.0 * h)
    }

    #[test]
    fn quadratic_examples() {
        let e = Energy::quadratic_1d(Loading::ramp(vec![2.0], 1.0), 1.0).unwrap();
        assert!((e.e_eval(0.5, &[0.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!((e.de_eval(0.5, &[0.0]).unwrap()[0] + 1.0).abs() < 1e-15);
        assert!((e.dte_eval(0.5, &[0.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!((fd_gradient(&e, 0.5, 0.0) + 1.0).abs() < 1e-8);
        let h = 1e-6;
        let fd_t = (e.value(0.5 + h, &[0.0]) - e.value(0.5 - h, &[0.0])) / (2.0 * h);
        assert!((fd_t - 2.0).abs() < 1e-8);
    }

    #[test]
    fn double_well_examples() {
        let flat = Energy::double_well(Loading::constant(vec![0.0]), 1.0).unwrap();
        assert_eq!(flat.e_eval(0.3, &[1.0]).unwrap(), 0.0);
        assert_eq!(flat.de_eval(0.3, &[1.0]).unwrap(), vec![0.0]);
        let e = Energy::double_well(Loading::ramp(vec![1.0], 2.0), 2.0).unwrap();
        assert!((e.e_eval(1.0, &[0.0]).unwrap() - 0.25).abs() < 1e-15);
        assert!((e.de_eval(1.0, &[0.0]).unwrap()[0] + 1.0).abs() < 1e-15);
        assert!((fd_gradient(&e, 1.0, 0.0) + 1.0).abs() < 1e-8);
        for u in [-1.3, -0.2, 0.7, 1.9] {
            assert!((fd_gradient(&e, 1.4, u) - e.gradient(1.4, &[u])[0]).abs() < 1e-7);
        }
    }

    #[test]
    fn evaluation_outside_horizon_is_rejected() {
        let e = Energy::double_well(Loading::ramp(vec![1.0], 2.0), 2.0).unwrap();
        assert!(matches!(e.e_eval(2.5, &[0.0]), Err(Error::Argument(_))));
        assert!(e.de_eval(-0.1, &[0.0]).is_err());
        assert!(e.dte_eval(0.1, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn loading_one_sided_rates() {
        let l = Loading::new(vec![(0.0, vec![0.0]), (1.0, vec![1.0]), (2.0, vec![-1.0])]).unwrap();
        assert_eq!(l.rate(1.0), vec![-2.0]);
        assert_eq!(l.rate_left(1.0), vec![1.0]);
        assert_eq!(l.value(1.5), vec![0.0]);
        assert!(Loading::new(vec![(1.0, vec![0.0]), (1.0, vec![1.0])]).is_err());
        let e = Energy::double_well(l, 2.0).unwrap();
        assert_eq!(e.power(1.0, &[2.0]), 4.0);
        assert_eq!(e.power_left(1.0, &[2.0]), -2.0);
    }

    #[test]
    fn polynomial_matches_double_well() {
        let dw = Energy::double_well(Loading::ramp(vec![1.0], 2.0), 2.0).unwrap();
        let poly = Energy::new(
            EnergyKind::Polynomial { coeffs: vec![0.25, 0.0, -0.5, 0.0, 0.25] },
            Loading::ramp(vec![1.0], 2.0),
            2.0,
        )
        .unwrap();
        for u in [-1.5, 0.0, 0.4, 2.0] {
            assert!((dw.value(0.7, &[u]) - poly.value(0.7, &[u])).abs() < 1e-14);
            assert!((dw.gradient(0.7, &[u])[0] - poly.gradient(0.7, &[u])[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn tracking_matrix_must_be_spd() {
        let l = Loading::constant(vec![0.0, 0.0]);
        let bad = EnergyKind::QuadraticTracking { matrix: vec![vec![1.0, 2.0], vec![2.0, 1.0]] };
        assert!(Energy::new(bad, l.clone(), 1.0).is_err());
        let good = EnergyKind::QuadraticTracking { matrix: vec![vec![2.0, 1.0], vec![1.0, 2.0]] };
        assert!(Energy::new(good, l, 1.0).is_ok());
    }

    #[test]
    fn assumption_reports() {
        let q = Energy::quadratic_1d(Loading::ramp(vec![2.0], 1.0), 1.0).unwrap();
        let r = assumption_report(&q, &SearchBox::new(vec![-3.0], vec![3.0], 10).unwrap(), 1000).unwrap();
        assert!(r.inf_energy >= 0.0);
        assert!(r.gradient_residual < 1e-6);

        let dw = Energy::double_well(Loading::ramp(vec![1.0], 2.0), 2.0).unwrap();
        let r = assumption_report(&dw, &SearchBox::new(vec![-2.0], vec![2.0], 10).unwrap(), 1000).unwrap();
        assert!(r.inf_energy.is_finite() && r.inf_energy >= -4.0);
        assert!(r.power_constant.is_finite());
    }

    struct BrokenGradient(Energy);

    impl EnergyFunctional for BrokenGradient {
        fn dim(&self) -> usize {
            1
        }
        fn horizon(&self) -> f64 {
            self.0.horizon()
        }
        fn value(&self, t: f64, u: &[f64]) -> f64 {
            self.0.value(t, u)
        }
        fn gradient(&self, t: f64, u: &[f64]) -> Vec<f64> {
            vec![self.0.gradient(t, u)[0] + 0.1 * u[0]]
        }
        fn power(&self, t: f64, u: &[f64]) -> f64 {
            self.0.power(t, u)
        }
    }

    #[test]
    fn broken_gradient_fails_validation() {
        let poly = Energy::new(
            EnergyKind::Polynomial { coeffs: vec![0.0, 1.0, 0.5, 0.0, 0.1] },
            Loading::constant(vec![0.0]),
            1.0,
        )
        .unwrap();
        let bx = SearchBox::new(vec![-2.0], vec![2.0], 10).unwrap();
        assert!(assumption_report(&poly, &bx, 200).is_ok());
        let err = assumption_report(&BrokenGradient(poly), &bx, 200).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }

    #[test]
    fn chain_rule_along_smooth_curve() {
        let e = Energy::double_well(Loading::ramp(vec![1.0], 2.0), 2.0).unwrap();
        let curve = |t: f64| [t.sin() - 0.5];
        let dcurve = |t: f64| t.cos();
        for h in [1e-2, 5e-3] {
            let t = 0.8;
            let lhs = (e.value(t + h, &curve(t + h)) - e.value(t - h, &curve(t - h))) / (2.0 * h);
            let rhs = e.gradient(t, &curve(t))[0] * dcurve(t) + e.power(t, &curve(t));
            assert!((lhs - rhs).abs() < 2.0 * h * h);
        }
    }

    #[test]
    fn lattice_enumeration() {
        let b = SearchBox::new(vec![0.0, -1.0], vec![1.0, 1.0], 4).unwrap();
        assert_eq!(b.lattice_len(), 25);
        assert_eq!(b.lattice_point(0), vec![0.0, -1.0]);
        assert_eq!(b.lattice_point(24), vec![1.0, 1.0]);
        assert_eq!(b.lattice_point(6), vec![0.25, -0.5]);
    }
}
