//! The vanishing-viscosity contact potential 𝔭(v,w) = inf_ε Ψ_ε(v) + Ψ_ε*(w),
//! its optimal-ε set Λ(v,w), and the augmented space-time potentials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{bisect, dot, minimize_unimodal};
use crate::space::{Gauge, Norm, Viscosity, ViscousPotential};

/// The set of optimal ε in the definition of 𝔭(v,w).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaInterval {
    pub lo: f64,
    pub hi: f64,
    /// false when the infimum is only approached as ε → ∞
    pub attained: bool,
    pub unbounded: bool,
}

impl LambdaInterval {
    fn point(eps: f64) -> Self {
        LambdaInterval { lo: eps, hi: eps, attained: true, unbounded: false }
    }

    /// The multiplier selected for verification checks.
    pub fn midpoint(&self) -> f64 {
        if self.unbounded {
            self.lo
        } else {
            0.5 * (self.lo + self.hi)
        }
    }

    pub fn contains(&self, eps: f64, tol: f64) -> bool {
        eps >= self.lo - tol && (self.unbounded || eps <= self.hi + tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContactClass {
    RateIndependent,
    Viscous,
    NotContact,
}

/// 𝔭 together with the viscous potential that induces it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactPotential {
    psi: ViscousPotential,
}

/// Closed forms exist when the viscous part is a single power of a norm.
enum ClosedForm {
    Gauge,
    Norm(Norm, f64),
}

impl ContactPotential {
    pub fn new(psi: ViscousPotential) -> Self {
        ContactPotential { psi }
    }

    pub fn psi(&self) -> &ViscousPotential {
        &self.psi
    }

    pub fn gauge(&self) -> &Gauge {
        self.psi.gauge()
    }

    fn closed_form(&self) -> Option<ClosedForm> {
        match self.psi.viscosity() {
            Viscosity::GaugePower => Some(ClosedForm::Gauge),
            Viscosity::NormPower { norm, p } => Some(ClosedForm::Norm(*norm, *p)),
            Viscosity::Additive { exponents } => {
                let p = exponents[0];
                exponents.iter().all(|&q| q == p).then(|| {
                    let norm = if p == 2.0 { Norm::Euclid } else { Norm::Lp(p) };
                    ClosedForm::Norm(norm, p)
                })
            }
        }
    }

    /// f(ε) = Ψ_ε(v) + Ψ*(w)/ε.
    pub fn objective(&self, eps: f64, v: &[f64], w: &[f64]) -> f64 {
        self.psi.eval_scaled(eps, v) + self.psi.conj(w) / eps
    }

    /// 𝔭(v,w), with 𝔭(0,w) = 0.
    pub fn eval(&self, v: &[f64], w: &[f64]) -> f64 {
        let g = self.gauge();
        let r = g.eval(v);
        if r == 0.0 {
            return 0.0;
        }
        match self.closed_form() {
            Some(ClosedForm::Gauge) => r * g.polar(w).max(1.0),
            Some(ClosedForm::Norm(norm, _)) => {
                let d = g.kstar_dist(norm.dual(), w).expect("validated at construction");
                r + norm.eval(v) * d
            }
            None => self.eval_generic(v, w),
        }
    }

    /// 𝔭(v,w) by direct minimization over log ε, regardless of closed forms.
    pub fn eval_generic(&self, v: &[f64], w: &[f64]) -> f64 {
        let r = self.gauge().eval(v);
        if r == 0.0 {
            return 0.0;
        }
        if self.psi.conj(w) == 0.0 {
            return r;
        }
        self.generic_minimizer(v, w).1
    }

    fn generic_minimizer(&self, v: &[f64], w: &[f64]) -> (f64, f64) {
        let f = |x: f64| self.objective(x.exp(), v, w);
        let (x, fx) = minimize_unimodal(f, 0.0, 1.0, 690.0, 1e-12);
        (x.exp(), fx)
    }

    /// The Lagrange-multiplier set Λ(v,w).
    pub fn lambda_set(&self, v: &[f64], w: &[f64]) -> LambdaInterval {
        let g = self.gauge();
        let r = g.eval(v);
        let conj = self.psi.conj(w);
        if r == 0.0 {
            return if conj == 0.0 {
                LambdaInterval { lo: 0.0, hi: f64::INFINITY, attained: true, unbounded: true }
            } else {
                LambdaInterval { lo: f64::INFINITY, hi: f64::INFINITY, attained: false, unbounded: true }
            };
        }
        if conj == 0.0 {
            // f is increasing in ε: the infimum sits at ε = 0
            return LambdaInterval::point(0.0);
        }
        match self.closed_form() {
            Some(ClosedForm::Gauge) => LambdaInterval::point((g.polar(w) - 1.0).max(0.0) / r),
            Some(ClosedForm::Norm(norm, p)) => {
                let d = g.kstar_dist(norm.dual(), w).expect("validated at construction");
                LambdaInterval::point(d.powf(1.0 / (p - 1.0)) / norm.eval(v))
            }
            None => {
                let (eps, fmin) = self.generic_minimizer(v, w);
                let band = fmin + 1e-10 * (1.0 + fmin);
                let inside = |x: f64| self.objective(x.exp(), v, w) <= band;
                let x0 = eps.ln();
                let mut lo = x0 - 1.0;
                while inside(lo) && lo > -700.0 {
                    lo -= 1.0;
                }
                let mut hi = x0 + 1.0;
                while inside(hi) && hi < 700.0 {
                    hi += 1.0;
                }
                let a = bisect(inside, x0, lo, 200);
                let b = bisect(inside, x0, hi, 200);
                LambdaInterval { lo: a.exp(), hi: b.exp(), attained: true, unbounded: false }
            }
        }
    }

    /// Classify (v,w) relative to the contact set {𝔭(v,w) = ⟨w,v⟩}.
    pub fn classify(&self, v: &[f64], w: &[f64], tol: f64) -> ContactClass {
        let pairing = dot(w, v);
        if self.eval(v, w) - pairing > tol * (1.0 + pairing.abs()) {
            ContactClass::NotContact
        } else if self.gauge().kstar_contains(w, tol) {
            ContactClass::RateIndependent
        } else {
            ContactClass::Viscous
        }
    }

    /// 𝔓(α,v;p,w): Ψ₀(v) + I_K*(w) + αp for α > 0 and 𝔭(v,w) for α = 0.
    /// Negative α lies outside the domain and yields +∞.
    pub fn augmented(&self, alpha: f64, v: &[f64], p: f64, w: &[f64], tol: f64) -> f64 {
        if alpha > 0.0 {
            if self.gauge().kstar_contains(w, tol) {
                self.gauge().eval(v) + alpha * p
            } else {
                f64::INFINITY
            }
        } else if alpha == 0.0 {
            self.eval(v, w)
        } else {
            f64::INFINITY
        }
    }

    /// 𝔓_ε(α,v;p,w) = αΨ_ε(v/α) + αΨ_ε*(w) + αp.
    pub fn augmented_eps(&self, eps: f64, alpha: f64, v: &[f64], p: f64, w: &[f64]) -> Result<f64> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Argument(format!("time rate must be positive, got {alpha}")));
        }
        let scaled: Vec<f64> = v.iter().map(|x| x / alpha).collect();
        Ok(alpha * self.psi.eval_eps(eps, &scaled)? + alpha * self.psi.conj_eps(eps, w)? + alpha * p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::DEFAULT_TOL;

    fn quad() -> ContactPotential {
        ContactPotential::new(ViscousPotential::quadratic_1d())
    }

    fn sublevels() -> ContactPotential {
        ContactPotential::new(
            ViscousPotential::new(Gauge::l1(2).unwrap(), Viscosity::Additive { exponents: vec![2.0, 4.0] }).unwrap(),
        )
    }

    /// Oracle: minimum of the ε-objective over a dense log-spaced grid.
    fn eps_grid_min(cp: &ContactPotential, v: &[f64], w: &[f64]) -> (f64, f64) {
        let mut best = (f64::NAN, f64::INFINITY);
        for k in 0..=200_000 {
            let eps = 10f64.powf(-6.0 + 12.0 * k as f64 / 200_000.0);
            let f = cp.objective(eps, v, w);
            if f < best.1 {
                best = (eps, f);
            }
        }
        best
    }

    #[test]
    fn p_eval_examples() {
        let cp = quad();
        for v in [[-2.0], [0.5], [3.0]] {
            assert_eq!(cp.eval(&v, &[0.0]), cp.gauge().eval(&v));
        }
        assert_eq!(cp.eval(&[2.0], &[3.0]), 6.0);
        assert!((eps_grid_min(&cp, &[2.0], &[3.0]).1 - 6.0).abs() < 1e-8);
        assert!((cp.eval_generic(&[2.0], &[3.0]) - 6.0).abs() < 1e-12);

        let s = sublevels();
        let expect = 1.0 + 1.5f64.sqrt();
        let p = s.eval(&[1.0, 0.0], &[0.0, 2.0]);
        assert!((p - expect).abs() < 1e-10, "{p}");
        assert!((eps_grid_min(&s, &[1.0, 0.0], &[0.0, 2.0]).1 - expect).abs() < 1e-8);
        assert_eq!(cp.eval(&[0.0], &[7.0]), 0.0);
    }

    #[test]
    fn sublevels_closed_form_along_axis() {
        let s = sublevels();
        for w2 in [0.5, 1.5, 2.0, 3.0, 6.0] {
            let expect = 1.0 + 1.5f64.sqrt() * ((w2 - 1.0f64).max(0.0)).powf(2.0 / 3.0);
            assert!((s.eval(&[1.0, 0.0], &[0.0, w2]) - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn lambda_examples() {
        let cp = quad();
        assert_eq!(cp.lambda_set(&[2.0], &[3.0]), LambdaInterval::point(1.0));
        let (eps, _) = eps_grid_min(&cp, &[2.0], &[3.0]);
        assert!((eps - 1.0).abs() < 1e-3);
        assert_eq!(cp.lambda_set(&[1.0], &[0.5]), LambdaInterval::point(0.0));
        let l = cp.lambda_set(&[0.0], &[3.0]);
        assert!(!l.attained);
        let l = cp.lambda_set(&[0.0], &[0.5]);
        assert!(l.attained && l.unbounded && l.lo == 0.0);
    }

    #[test]
    fn lambda_generic_brackets_the_closed_form() {
        let s = sublevels();
        let (v, w) = ([1.0, 0.0], [0.0, 2.0]);
        let l = s.lambda_set(&v, &w);
        let (eps, _) = eps_grid_min(&s, &v, &w);
        assert!(l.attained && !l.unbounded);
        assert!(l.lo <= l.hi);
        assert!(l.contains(eps, 1e-3), "{l:?} vs {eps}");
        // on the contact set the optimal ε makes εv a Fenchel partner of w
        let v = [0.0, 1.0];
        let l = s.lambda_set(&v, &w);
        assert!((l.midpoint() - 1.0).abs() < 1e-4, "{l:?}");
        let gap = s.psi().fenchel_gap(&[0.0, l.midpoint()], &w);
        assert!(gap < 1e-8, "{gap}");
    }

    #[test]
    fn classify_examples() {
        let cp = quad();
        assert_eq!(cp.classify(&[2.0], &[1.0], DEFAULT_TOL), ContactClass::RateIndependent);
        assert_eq!(cp.classify(&[2.0], &[3.0], DEFAULT_TOL), ContactClass::Viscous);
        assert_eq!(cp.classify(&[2.0], &[0.5], DEFAULT_TOL), ContactClass::NotContact);
    }

    #[test]
    fn augmented_examples() {
        let cp = quad();
        assert!((cp.augmented(1.0, &[1.0], 0.3, &[0.5], DEFAULT_TOL) - 1.3).abs() < 1e-15);
        assert_eq!(cp.augmented(1.0, &[1.0], 0.0, &[2.0], DEFAULT_TOL), f64::INFINITY);
        assert_eq!(cp.augmented(0.0, &[2.0], 0.0, &[3.0], DEFAULT_TOL), 6.0);
        assert_eq!(cp.augmented_eps(1.0, 1.0, &[0.0], 0.0, &[0.0]).unwrap(), 0.0);
        assert_eq!(cp.augmented_eps(1.0, 2.0, &[2.0], 1.0, &[3.0]).unwrap(), 9.0);
        assert!(cp.augmented_eps(0.0, 1.0, &[1.0], 0.0, &[0.0]).is_err());
        assert!(cp.augmented_eps(1.0, 0.0, &[1.0], 0.0, &[0.0]).is_err());
    }

    #[test]
    fn recovery_sequence_converges() {
        let cp = quad();
        for eps in [1e-2, 1e-4, 1e-6] {
            let val = cp.augmented_eps(eps, eps, &[2.0], 0.7, &[3.0]).unwrap();
            assert!((val - (6.0 + 0.7 * eps)).abs() < 1e-9);
        }
        let val = cp.augmented_eps(1e-6, 1e-6, &[2.0], 0.7, &[3.0]).unwrap();
        assert!((val - cp.augmented(0.0, &[2.0], 0.7, &[3.0], DEFAULT_TOL)).abs() < 1e-6);
    }
}
