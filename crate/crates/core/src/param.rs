//! Arclength reparametrizations: viscous curves and BV curves as Lipschitz curves (t(s), u(s)),
//! residuals of the parametrized formulation, and the BV ↔ parametrized transforms.

use serde::{Deserialize, Serialize};

use crate::analysis::{local_stability_report, BvCurve, JumpRecord};
use crate::contact::ContactPotential;
use crate::energy::EnergyFunctional;
use crate::error::{Error, Result};
use crate::numeric::{interp_table, lerp, scale, sub};
use crate::space::ViscousPotential;
use crate::transitions::TransitionPath;

/// A curve s ↦ (t(s), u(s)) sampled at increasing s-nodes, linear in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamCurve {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub nondegenerate: bool,
    pub surjective: bool,
    pub normalized: bool,
}

/// Ratio ṫ/(T/S) below which a segment counts as frozen in time.
pub const FROZEN_RATIO: f64 = 1e-6;
/// Normalization tolerance used for the `normalized` flag.
pub const NORMALIZED_TOL: f64 = 1e-6;

impl ParamCurve {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Total parameter length S.
    pub fn length(&self) -> f64 {
        self.s[self.s.len() - 1] - self.s[0]
    }

    /// ṫ on segment k.
    pub fn tdot(&self, k: usize) -> f64 {
        (self.t[k + 1] - self.t[k]) / (self.s[k + 1] - self.s[k])
    }

    /// u̇ on segment k.
    pub fn udot(&self, k: usize) -> Vec<f64> {
        scale(&sub(&self.u[k + 1], &self.u[k]), 1.0 / (self.s[k + 1] - self.s[k]))
    }

    fn frozen_threshold(&self) -> f64 {
        let span = self.t[self.t.len() - 1] - self.t[0];
        if span > 0.0 {
            FROZEN_RATIO * span / self.length()
        } else {
            f64::INFINITY
        }
    }

    /// Build from nodes and set the flags against `horizon`.
    pub fn from_nodes<E: EnergyFunctional + ?Sized>(
        s: Vec<f64>,
        t: Vec<f64>,
        u: Vec<Vec<f64>>,
        energy: &E,
        cp: &ContactPotential,
    ) -> Result<Self> {
        if s.len() < 2 || t.len() != s.len() || u.len() != s.len() {
            return Err(Error::Argument("parametrized curve needs at least two consistent nodes".into()));
        }
        if s.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Argument("s-nodes must be strictly increasing".into()));
        }
        let mut pc = ParamCurve { s, t, u, nondegenerate: false, surjective: false, normalized: false };
        let g = cp.gauge();
        pc.nondegenerate = (0..pc.len() - 1).all(|k| pc.tdot(k) + g.eval(&pc.udot(k)) > 0.0);
        pc.surjective = pc.t[0] == 0.0 && pc.t[pc.len() - 1] == energy.horizon();
        pc.normalized = normalization_defect(&pc, energy, cp) <= NORMALIZED_TOL;
        Ok(pc)
    }
}

struct Segment {
    tdot: f64,
    udot: Vec<f64>,
    p: f64,
    w: Vec<f64>,
    ds: f64,
}

fn segments<'a, E: EnergyFunctional + ?Sized>(pc: &'a ParamCurve, energy: &'a E) -> impl Iterator<Item = Segment> + 'a {
    (0..pc.len() - 1).map(move |k| {
        let tm = 0.5 * (pc.t[k] + pc.t[k + 1]);
        let um = lerp(&pc.u[k], &pc.u[k + 1], 0.5);
        Segment {
            tdot: pc.tdot(k),
            udot: pc.udot(k),
            p: -energy.power(tm, &um),
            w: energy.force(tm, &um),
            ds: pc.s[k + 1] - pc.s[k],
        }
    })
}

/// 𝔓(ṫ,u̇;p,w) with the K*-indicator left to the complementarity check.
fn rate(cp: &ContactPotential, seg: &Segment, frozen: f64) -> f64 {
    if seg.tdot > frozen {
        cp.gauge().eval(&seg.udot) + seg.tdot * seg.p
    } else {
        cp.eval(&seg.udot, &seg.w)
    }
}

/// Per-segment |𝔓(ṫ,u̇;1,w) − 1|.
pub fn normalization_profile<E: EnergyFunctional + ?Sized>(pc: &ParamCurve, energy: &E, cp: &ContactPotential) -> Vec<f64> {
    let frozen = pc.frozen_threshold();
    segments(pc, energy).map(|seg| (rate(cp, &Segment { p: 1.0, ..seg }, frozen) - 1.0).abs()).collect()
}

fn normalization_defect<E: EnergyFunctional + ?Sized>(pc: &ParamCurve, energy: &E, cp: &ContactPotential) -> f64 {
    normalization_profile(pc, energy, cp).into_iter().fold(0.0, f64::max)
}

/// Energy-arclength reparametrization of a discrete viscous curve: s accumulates
/// dt + (Ψ_ε(u̇) + Ψ_ε*(w)) dt; the result is resampled on a uniform s-grid with as many nodes.
pub fn reparametrize_viscous<E: EnergyFunctional + ?Sized>(
    c: &BvCurve,
    energy: &E,
    cp: &ContactPotential,
    eps: f64,
) -> Result<ParamCurve> {
    if !(eps > 0.0) {
        return Err(Error::Argument(format!("eps must be positive, got {eps}")));
    }
    if c.len() < 2 {
        return Err(Error::Argument("curve needs at least two nodes".into()));
    }
    let psi: &ViscousPotential = cp.psi();
    let conj = |t: f64, u: &[f64]| psi.conj(&energy.force(t, u)) / eps;
    let mut s = vec![c.times[0]];
    for k in 1..c.len() {
        let h = c.times[k] - c.times[k - 1];
        let v = scale(&sub(&c.values[k], &c.values[k - 1]), 1.0 / h);
        let ds = h + h * psi.eval_scaled(eps, &v) + 0.5 * h * (conj(c.times[k - 1], &c.values[k - 1]) + conj(c.times[k], &c.values[k]));
        s.push(s[k - 1] + ds);
    }
    let n = c.len();
    let (s0, s1) = (s[0], s[n - 1]);
    let grid: Vec<f64> = (0..n).map(|k| s0 + (s1 - s0) * k as f64 / (n - 1) as f64).collect();
    let tcol: Vec<Vec<f64>> = c.times.iter().map(|t| vec![*t]).collect();
    let t: Vec<f64> = grid.iter().map(|x| interp_table(&s, &tcol, *x)[0]).collect();
    let u: Vec<Vec<f64>> = grid.iter().map(|x| interp_table(&s, &c.values, *x)).collect();
    let mut t = t;
    t[0] = c.times[0];
    t[n - 1] = c.times[n - 1];
    ParamCurve::from_nodes(grid, t, u, energy, cp)
}

/// Residuals of the parametrized formulation; all vanish for an exact normalized solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamReport {
    /// (i) max decrease of t
    pub monotonicity: f64,
    /// (ii) max over s of |∫₀ˢ 𝔓 + E(t(s),u(s)) − E(t(0),u(0))|
    pub energy_identity: f64,
    /// (iii) s-measure of {ṫ > tol, Ψ₀*(w) > 1 + tol}
    pub complementarity: f64,
    /// (iv) max |ṫ| where Ψ₀*(w) > 1 + tol
    pub jump_set_tdot: f64,
    /// (iv) max Fenchel gap of w ∈ ∂Ψ(λu̇) with λ the midpoint of Λ(u̇,w), on the same set
    pub jump_set_inclusion: f64,
    /// (v) max |𝔓(ṫ,u̇;1,w) − 1|
    pub normalization: f64,
}

impl ParamReport {
    /// Largest residual, normalization excluded (curves need not be normalized).
    pub fn worst(&self) -> f64 {
        [self.monotonicity, self.energy_identity, self.complementarity, self.jump_set_tdot, self.jump_set_inclusion]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Evaluate the residuals segment-wise at segment midpoints.
pub fn param_residuals<E: EnergyFunctional + ?Sized>(
    pc: &ParamCurve,
    energy: &E,
    cp: &ContactPotential,
    tol: f64,
) -> ParamReport {
    let g = cp.gauge();
    let frozen = pc.frozen_threshold();
    let monotonicity = pc.t.windows(2).map(|p| (p[0] - p[1]).max(0.0)).fold(0.0, f64::max);
    let e0 = energy.value(pc.t[0], &pc.u[0]);
    let mut acc = 0.0;
    let mut rep = ParamReport {
        monotonicity,
        energy_identity: 0.0,
        complementarity: 0.0,
        jump_set_tdot: 0.0,
        jump_set_inclusion: 0.0,
        normalization: normalization_defect(pc, energy, cp),
    };
    for (k, seg) in segments(pc, energy).enumerate() {
        acc += rate(cp, &seg, frozen) * seg.ds;
        let r = (acc + energy.value(pc.t[k + 1], &pc.u[k + 1]) - e0).abs();
        rep.energy_identity = rep.energy_identity.max(r);
        if g.polar(&seg.w) > 1.0 + tol {
            if seg.tdot > tol {
                rep.complementarity += seg.ds;
            }
            rep.jump_set_tdot = rep.jump_set_tdot.max(seg.tdot.abs());
            let lambda = cp.lambda_set(&seg.udot, &seg.w).midpoint();
            let gap = cp.psi().fenchel_gap(&scale(&seg.udot, lambda), &seg.w);
            rep.jump_set_inclusion = rep.jump_set_inclusion.max(gap);
        }
    }
    rep
}

/// Local stability slack accepted before a curve is refused as a BV solution.
pub const STABILITY_TOL: f64 = 1e-6;

/// s(t) = t + Var_ℬ₀(0,t): continuous pieces keep their nodes with ds = dt + Ψ₀(du);
/// each jump is replaced by its transition path at constant Finsler speed with ds = 𝔭-cost.
pub fn bv_to_param<E: EnergyFunctional + ?Sized>(c: &BvCurve, energy: &E, cp: &ContactPotential) -> Result<ParamCurve> {
    let g = cp.gauge();
    let v = local_stability_report(c, energy, g);
    if v.value > STABILITY_TOL {
        return Err(Error::Precondition(format!(
            "curve is not locally stable at t = {} (violation {:e})",
            v.time, v.value
        )));
    }
    let mut s = vec![0.0];
    let mut t = vec![c.times[0]];
    let mut u = vec![c.left_limit(0).to_vec()];
    let push = |s: &mut Vec<f64>, t: &mut Vec<f64>, u: &mut Vec<Vec<f64>>, ds: f64, tn: f64, un: Vec<f64>| {
        if ds > 0.0 {
            s.push(s[s.len() - 1] + ds);
            t.push(tn);
            u.push(un);
        }
    };
    for n in 0..c.len() {
        if n > 0 {
            let (a, b) = (c.right_limit(n - 1), c.left_limit(n));
            let ds = (c.times[n] - c.times[n - 1]) + g.eval(&sub(b, a));
            push(&mut s, &mut t, &mut u, ds, c.times[n], b.to_vec());
        }
        if let Some(j) = c.jump_at(n) {
            let path = j.path.as_ref().ok_or(Error::IncompleteCurve(j.time))?.reparametrize_constant_speed(energy, cp);
            let last = path.theta.len() - 1;
            for k in 1..=last {
                let node = if k == last { j.right.clone() } else { path.theta[k].clone() };
                push(&mut s, &mut t, &mut u, path.segment_costs[k - 1], j.time, node);
            }
            if u[u.len() - 1] != j.right {
                let ds = g.eval(&sub(&j.right, &u[u.len() - 1])).max(f64::MIN_POSITIVE);
                push(&mut s, &mut t, &mut u, ds, j.time, j.right.clone());
            }
        }
    }
    if s.len() < 2 {
        // a single node: pad with a zero-motion unit step so the curve has a segment
        s.push(1.0);
        t.push(t[0]);
        u.push(u[0].clone());
    }
    ParamCurve::from_nodes(s, t, u, energy, cp)
}

/// Recover a BV curve: non-frozen segments give nodes, maximal frozen runs give jumps whose
/// node value is the first point of the run; the run itself becomes the transition path.
pub fn param_to_bv<E: EnergyFunctional + ?Sized>(pc: &ParamCurve, energy: &E, cp: &ContactPotential) -> Result<BvCurve> {
    if !pc.surjective {
        return Err(Error::Range(format!(
            "parametrized curve covers t ∈ [{}, {}], not the full horizon [0, {}]",
            pc.t[0],
            pc.t[pc.len() - 1],
            energy.horizon()
        )));
    }
    let frozen = pc.frozen_threshold();
    let mut times = vec![pc.t[0]];
    let mut values = vec![pc.u[0].clone()];
    let mut jumps = Vec::new();
    let mut k = 0;
    while k + 1 < pc.len() {
        if pc.tdot(k) <= frozen {
            let a = k;
            while k + 1 < pc.len() && pc.tdot(k) <= frozen {
                k += 1;
            }
            let index = times.len() - 1;
            let theta = pc.u[a..=k].to_vec();
            let time = times[index];
            let path = TransitionPath::from_nodes(energy, cp, time, theta);
            jumps.push(JumpRecord {
                index,
                time,
                left: values[index].clone(),
                middle: values[index].clone(),
                right: pc.u[k].clone(),
                path: Some(path),
            });
        } else {
            times.push(pc.t[k + 1]);
            values.push(pc.u[k + 1].clone());
            k += 1;
        }
    }
    BvCurve::new(times, values, jumps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{Energy, Loading};
    use crate::solver::{solve_ip_eps, TimeGrid};
    use crate::transitions::{viscous_jump_integrate, FlowOptions};

    fn cp() -> ContactPotential {
        ContactPotential::new(ViscousPotential::quadratic_1d())
    }

    fn play() -> Energy {
        Energy::quadratic_1d(Loading::ramp(vec![2.0], 1.0), 1.0).unwrap()
    }

    fn play_curve(n: usize) -> BvCurve {
        let times: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        let values = times.iter().map(|t| vec![(2.0 * t - 1.0f64).max(0.0)]).collect();
        BvCurve::continuous(times, values).unwrap()
    }

    /// Stable branch u³ − u = t − 1 of the double well with loading ℓ(t) = t.
    fn branch(t: f64, lo: f64, hi: f64) -> f64 {
        crate::numeric::bisect(|x| x * x * x - x - (t - 1.0) <= 0.0, lo, hi, 200)
    }

    /// A double-well curve that sticks at −1, slides on the left branch up to the fold,
    /// jumps along the viscous flow, and slides on the right branch.
    fn well_jump_curve() -> (Energy, BvCurve) {
        let e = Energy::double_well(Loading::ramp(vec![1.0], 2.0), 2.0).unwrap();
        let mut times: Vec<f64> = (0..10).map(|k| k as f64 * 0.1).collect();
        let mut values: Vec<Vec<f64>> = vec![vec![-1.0]; 10];
        let fold = 1.0 + 2.0 / (3.0 * 3f64.sqrt());
        for k in 0..=40 {
            let t = 1.0 + (fold - 1.0) * k as f64 / 40.0;
            times.push(t);
            values.push(vec![branch(t, -1.5, -1.0 / 3f64.sqrt())]);
        }
        let index = times.len() - 1;
        let left = values[index].clone();
        let path = viscous_jump_integrate(&e, &cp(), fold, &left, &FlowOptions::for_diameter(3.0)).unwrap();
        let right = path.end().to_vec();
        for k in 1..=80 {
            let t = fold + (2.0 - fold) * k as f64 / 80.0;
            times.push(t);
            values.push(vec![branch(t, 0.6, 2.0)]);
        }
        let jump = JumpRecord { index, time: fold, left: left.clone(), middle: left, right, path: Some(path) };
        (e.clone(), BvCurve::new(times, values, vec![jump]).unwrap())
    }

    #[test]
    fn constant_curve_is_identity_clock() {
        let e = Energy::double_well(Loading::constant(vec![0.0]), 1.0).unwrap();
        let c = BvCurve::continuous(vec![0.0, 0.5, 1.0], vec![vec![1.0]; 3]).unwrap();
        let pc = bv_to_param(&c, &e, &cp()).unwrap();
        assert_eq!(pc.s, pc.t);
        let r = param_residuals(&pc, &e, &cp(), 1e-9);
        assert_eq!(r.worst(), 0.0);
        let back = param_to_bv(&pc, &e, &cp()).unwrap();
        assert_eq!(back, c);

        let pv = reparametrize_viscous(&c, &e, &cp(), 0.1).unwrap();
        assert!(pv.s.iter().zip(&pv.t).all(|(s, t)| (s - t).abs() < 1e-15));
    }

    #[test]
    fn play_round_trip_and_residuals() {
        let e = play();
        let c = play_curve(1000);
        let pc = bv_to_param(&c, &e, &cp()).unwrap();
        assert!(pc.normalized && pc.surjective && pc.nondegenerate);
        assert!((pc.length() - 2.0).abs() < 1e-12);
        let r = param_residuals(&pc, &e, &cp(), 1e-9);
        assert!(r.worst() <= 1e-6 && r.normalization <= 1e-12, "{r:?}");
        assert_eq!(param_to_bv(&pc, &e, &cp()).unwrap(), c);
    }

    #[test]
    fn jump_round_trip() {
        let (e, c) = well_jump_curve();
        let pc = bv_to_param(&c, &e, &cp()).unwrap();
        assert!(pc.normalized, "{}", normalization_defect(&pc, &e, &cp()));
        let back = param_to_bv(&pc, &e, &cp()).unwrap();
        assert_eq!(back.times, c.times);
        assert_eq!(back.values, c.values);
        assert_eq!(back.jumps.len(), 1);
        assert_eq!(back.jumps[0].right, c.jumps[0].right);
        let r = param_residuals(&pc, &e, &cp(), 1e-3);
        assert_eq!(r.jump_set_tdot, 0.0);
        assert_eq!(r.complementarity, 0.0);
        assert!(r.worst() <= 1e-3, "{r:?}");
    }

    #[test]
    fn missing_path_is_incomplete() {
        let (e, mut c) = well_jump_curve();
        c.jumps[0].path = None;
        assert!(matches!(bv_to_param(&c, &e, &cp()), Err(Error::IncompleteCurve(_))));
    }

    #[test]
    fn unstable_curve_refused() {
        let e = play();
        let frozen = BvCurve::continuous(vec![0.0, 0.5, 1.0], vec![vec![0.0]; 3]).unwrap();
        assert!(matches!(bv_to_param(&frozen, &e, &cp()), Err(Error::Precondition(_))));
    }

    #[test]
    fn non_surjective_is_range_error() {
        let e = play();
        let c = play_curve(10);
        let mut pc = bv_to_param(&c, &e, &cp()).unwrap();
        pc.surjective = false;
        assert!(matches!(param_to_bv(&pc, &e, &cp()), Err(Error::Range(_))));
    }

    #[test]
    fn injected_complementarity_violation() {
        let e = play();
        // moves in time while the force sits well outside K*
        let pc = ParamCurve::from_nodes(vec![0.0, 0.5, 1.0], vec![0.0, 0.5, 1.0], vec![vec![-1.0]; 3], &e, &cp()).unwrap();
        let r = param_residuals(&pc, &e, &cp(), 1e-6);
        assert!(r.complementarity > 0.0);
    }

    #[test]
    fn viscous_reparametrization_of_play() {
        let e = play();
        let psi = ViscousPotential::quadratic_1d();
        let sol = solve_ip_eps(&e, &psi, 1e-2, &TimeGrid::new(1.0, 1e-3).unwrap(), &[0.0]).unwrap();
        let pc = reparametrize_viscous(&sol.curve, &e, &cp(), 1e-2).unwrap();
        assert!(pc.surjective);
        assert!(pc.t.windows(2).all(|p| p[1] >= p[0]));
        // S = T + ∫(Ψ_ε + Ψ_ε*) ≈ 1 + Var = 2
        assert!((pc.length() - 2.0).abs() < 0.05, "{}", pc.length());
    }

    #[test]
    fn pushforward_of_s_measure() {
        let e = play();
        let pc = bv_to_param(&play_curve(400), &e, &cp()).unwrap();
        // ∫ζ(t(s)) ds = ∫ζ dμ with μ = dt + |du|: for ζ(t)=t, ∫t dt + ∫_{1/2}^1 2t dt
        let lhs: f64 = (0..pc.len() - 1).map(|k| 0.5 * (pc.t[k] + pc.t[k + 1]) * (pc.s[k + 1] - pc.s[k])).sum();
        assert!((lhs - (0.5 + 0.75)).abs() < 1e-9, "{lhs}");
    }
}
