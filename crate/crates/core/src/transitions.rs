//! Finsler jump costs at frozen time, optimal transitions, and the
//! rescaled viscous flow that fills jumps.

use serde::{Deserialize, Serialize};

use crate::contact::ContactPotential;
use crate::energy::EnergyFunctional;
use crate::error::{Error, Result};
use crate::numeric::{axpy, bisect, dot, golden_section, lerp, norm2, scale, sub};
use crate::space::{ViscousPotential, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentLabel {
    Sliding,
    Viscous,
}

/// A discrete path θ₀ = u₋, …, θ_N = u₊ at frozen time, with per-node forces
/// w_k = −DE(t,θ_k) and per-segment Finsler costs 𝔭(Δθ, w_mid).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionPath {
    pub time: f64,
    pub r: Vec<f64>,
    pub theta: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub labels: Vec<SegmentLabel>,
    pub segment_costs: Vec<f64>,
    pub cost: f64,
}

/// 𝔭(b − a, −DE(t, (a+b)/2)).
pub fn segment_cost<E: EnergyFunctional + ?Sized>(
    energy: &E,
    cp: &ContactPotential,
    t: f64,
    a: &[f64],
    b: &[f64],
) -> f64 {
    let mid = lerp(a, b, 0.5);
    cp.eval(&sub(b, a), &energy.force(t, &mid))
}

fn label_of(cp: &ContactPotential, wa: &[f64], wb: &[f64], tol: f64) -> SegmentLabel {
    let g = cp.gauge();
    if g.polar(wa) > 1.0 + tol && g.polar(wb) > 1.0 + tol {
        SegmentLabel::Viscous
    } else {
        SegmentLabel::Sliding
    }
}

impl TransitionPath {
    /// Build a path on a uniform r-grid from its node values.
    pub fn from_nodes<E: EnergyFunctional + ?Sized>(
        energy: &E,
        cp: &ContactPotential,
        t: f64,
        theta: Vec<Vec<f64>>,
    ) -> Self {
        assert!(theta.len() >= 2, "a path needs at least two nodes");
        let n = theta.len() - 1;
        let w: Vec<Vec<f64>> = theta.iter().map(|x| energy.force(t, x)).collect();
        let segment_costs: Vec<f64> = theta.windows(2).map(|p| segment_cost(energy, cp, t, &p[0], &p[1])).collect();
        let labels = w.windows(2).map(|p| label_of(cp, &p[0], &p[1], DEFAULT_TOL)).collect();
        TransitionPath {
            time: t,
            r: (0..=n).map(|k| k as f64 / n as f64).collect(),
            cost: segment_costs.iter().sum(),
            theta,
            w,
            labels,
            segment_costs,
        }
    }

    pub fn start(&self) -> &[f64] {
        &self.theta[0]
    }

    pub fn end(&self) -> &[f64] {
        self.theta.last().unwrap()
    }

    pub fn segments(&self) -> usize {
        self.theta.len() - 1
    }

    /// Resample onto `nodes + 1` points with equal Finsler increments.
    pub fn resample_constant_speed<E: EnergyFunctional + ?Sized>(
        &self,
        energy: &E,
        cp: &ContactPotential,
        nodes: usize,
    ) -> Self {
        let nodes = nodes.max(1);
        if !(self.cost > 0.0) {
            let theta = (0..=nodes)
                .map(|k| {
                    let s = k as f64 / nodes as f64 * self.segments() as f64;
                    let i = (s.floor() as usize).min(self.segments() - 1);
                    lerp(&self.theta[i], &self.theta[i + 1], s - i as f64)
                })
                .collect();
            return Self::from_nodes(energy, cp, self.time, theta);
        }
        let mut cum = Vec::with_capacity(self.theta.len());
        cum.push(0.0);
        for c in &self.segment_costs {
            cum.push(cum.last().unwrap() + c);
        }
        let total = *cum.last().unwrap();
        let mut theta = Vec::with_capacity(nodes + 1);
        theta.push(self.theta[0].clone());
        let mut seg = 0;
        for j in 1..nodes {
            let target = total * j as f64 / nodes as f64;
            while seg + 1 < self.segments() && cum[seg + 1] < target {
                seg += 1;
            }
            let c = self.segment_costs[seg];
            let s = if c > 0.0 { ((target - cum[seg]) / c).clamp(0.0, 1.0) } else { 0.0 };
            theta.push(lerp(&self.theta[seg], &self.theta[seg + 1], s));
        }
        theta.push(self.end().to_vec());
        Self::from_nodes(energy, cp, self.time, theta)
    }

    /// Constant-Finsler-speed reparametrization with the same number of nodes.
    pub fn reparametrize_constant_speed<E: EnergyFunctional + ?Sized>(&self, energy: &E, cp: &ContactPotential) -> Self {
        self.resample_constant_speed(energy, cp, self.segments())
    }
}

fn level_sizes(n: usize) -> Vec<usize> {
    let mut sizes = vec![n];
    let mut m = n;
    while m / 2 >= 8 {
        m /= 2;
        sizes.push(m);
        if m < 16 {
            break;
        }
    }
    sizes.reverse();
    sizes
}

fn straight(u0: &[f64], u1: &[f64], n: usize) -> Vec<Vec<f64>> {
    (0..=n).map(|k| lerp(u0, u1, k as f64 / n as f64)).collect()
}

fn prolong(theta: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let m = theta.len() - 1;
    (0..=n)
        .map(|k| {
            let s = k as f64 / n as f64 * m as f64;
            let i = (s.floor() as usize).min(m - 1);
            lerp(&theta[i], &theta[i + 1], s - i as f64)
        })
        .collect()
}

fn total_cost<E: EnergyFunctional + ?Sized>(energy: &E, cp: &ContactPotential, t: f64, theta: &[Vec<f64>]) -> f64 {
    theta.windows(2).map(|p| segment_cost(energy, cp, t, &p[0], &p[1])).sum()
}

/// Orthonormal directions spanning the complement of `tangent`.
fn normal_frame(tangent: &[f64]) -> Vec<Vec<f64>> {
    let d = tangent.len();
    let tn = norm2(tangent);
    if tn == 0.0 {
        return (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    }
    let mut frame: Vec<Vec<f64>> = vec![scale(tangent, 1.0 / tn)];
    for i in 0..d {
        let mut e: Vec<f64> = (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect();
        for f in &frame {
            let c = dot(&e, f);
            e = axpy(&e, -c, f);
        }
        let n = norm2(&e);
        if n > 1e-8 && frame.len() < d {
            frame.push(scale(&e, 1.0 / n));
        }
    }
    frame.split_off(1)
}

/// Cyclic descent on the interior nodes of a discrete path.
///
/// Each node is line-searched along the directions normal to the local tangent;
/// tangential motion only redistributes quadrature points, so it is replaced by
/// re-equidistributing the Finsler increments after every sweep.
fn descend<E: EnergyFunctional + ?Sized>(
    energy: &E,
    cp: &ContactPotential,
    t: f64,
    theta: &mut Vec<Vec<f64>>,
    max_sweeps: usize,
) -> f64 {
    let n = theta.len() - 1;
    let mut total = total_cost(energy, cp, t, theta);
    if theta[0].len() == 1 {
        return total;
    }
    for _ in 0..max_sweeps {
        let mut trial = theta.clone();
        for k in 1..n {
            let chord = sub(&trial[k + 1], &trial[k - 1]);
            let pad = norm2(&chord);
            if pad == 0.0 {
                continue;
            }
            for dir in normal_frame(&chord) {
                let (prev, next, base) = (trial[k - 1].clone(), trial[k + 1].clone(), trial[k].clone());
                let local = |x: f64| {
                    let node = axpy(&base, x, &dir);
                    segment_cost(energy, cp, t, &prev, &node) + segment_cost(energy, cp, t, &node, &next)
                };
                let current = local(0.0);
                let (x, fx) = golden_section(local, -pad, pad, 1e-12 * (1.0 + pad));
                if fx < current {
                    trial[k] = axpy(&base, x, &dir);
                }
            }
        }
        let path = TransitionPath::from_nodes(energy, cp, t, trial).reparametrize_constant_speed(energy, cp);
        let new_total = total_cost(energy, cp, t, &path.theta);
        if new_total >= total {
            break;
        }
        let improvement = total - new_total;
        *theta = path.theta;
        total = new_total;
        if improvement <= 1e-10 * total.abs().max(1e-300) {
            break;
        }
    }
    total
}

/// The Finsler jump cost Δ(t; u0, u1) with an (approximately) optimal path of `n` segments.
///
/// Paths are optimized coarse-to-fine by coordinate descent; the result is rejected
/// when halving the resolution moves the cost by more than 0.1 %.
pub fn jump_cost<E: EnergyFunctional + ?Sized>(
    energy: &E,
    cp: &ContactPotential,
    t: f64,
    u0: &[f64],
    u1: &[f64],
    n: usize,
) -> Result<(f64, TransitionPath)> {
    if n < 16 {
        return Err(Error::Argument(format!("jump cost needs at least 16 path segments, got {n}")));
    }
    if u0.len() != u1.len() || u0.len() != energy.dim() {
        return Err(Error::Argument("jump endpoints have the wrong dimension".into()));
    }
    if u0 == u1 {
        let path = TransitionPath::from_nodes(energy, cp, t, straight(u0, u1, n));
        return Ok((0.0, path));
    }
    let sizes = level_sizes(n);
    let mut theta = straight(u0, u1, sizes[0]);
    let mut costs = Vec::with_capacity(sizes.len());
    for (j, &m) in sizes.iter().enumerate() {
        if j > 0 {
            theta = prolong(&theta, m);
        }
        costs.push(descend(energy, cp, t, &mut theta, 200));
    }
    let fine = costs[costs.len() - 1];
    let coarse = costs[costs.len() - 2];
    if (fine - coarse).abs() > 1e-3 * fine.abs().max(1e-12) {
        return Err(Error::Resolution { nodes: n, fine, coarse });
    }
    let path = TransitionPath::from_nodes(energy, cp, t, theta).reparametrize_constant_speed(energy, cp);
    Ok((fine, path))
}

/// Step control for the rescaled viscous flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// arc length per explicit step
    pub step: f64,
    /// arc length after which the flow counts as runaway
    pub max_len: f64,
    /// slack in the precondition Ψ₀*(w) ≥ 1 − tol at the start
    pub tol: f64,
    /// minimal number of segments of the returned path
    pub min_segments: usize,
}

impl FlowOptions {
    /// Steps of 1e-3 times the diameter of the region of interest.
    pub fn for_diameter(diameter: f64) -> Self {
        FlowOptions { step: 1e-3 * diameter, max_len: 100.0 * diameter, tol: 1e-6, min_segments: 64 }
    }
}

fn flow_direction(psi: &ViscousPotential, w: &[f64]) -> Vec<f64> {
    let v = psi.conj_grad(w);
    let n = norm2(&v);
    if n > 1e-14 {
        return scale(&v, 1.0 / n);
    }
    let k = psi.gauge().polar_normal(w);
    let nk = norm2(&k);
    scale(&k, 1.0 / nk)
}

/// Integrate the frozen-time flow θ̇ ∈ ∂Ψ*(−DE(t,θ)) by arc length until it
/// re-enters K*; returns the raw nodes, the last one on the boundary of K*.
pub(crate) fn flow_nodes<E: EnergyFunctional + ?Sized>(
    energy: &E,
    psi: &ViscousPotential,
    t: f64,
    start: &[f64],
    opts: &FlowOptions,
) -> Result<Vec<Vec<f64>>> {
    let g = psi.gauge();
    let polar = |x: &[f64]| g.polar(&energy.force(t, x));
    let p0 = polar(start);
    if p0 < 1.0 - opts.tol {
        return Err(Error::Precondition(format!(
            "flow start is strictly stable (polar of the force {p0} < 1)"
        )));
    }
    if !(opts.step > 0.0) {
        return Err(Error::Argument("flow step must be positive".into()));
    }
    let h = opts.step;
    let mut nodes = vec![start.to_vec()];
    let mut theta = start.to_vec();
    let mut outside = p0 > 1.0;
    let mut len = 0.0;
    loop {
        let d1 = flow_direction(psi, &energy.force(t, &theta));
        let pred = axpy(&theta, h, &d1);
        let d2 = flow_direction(psi, &energy.force(t, &pred));
        let dir: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| 0.5 * (a + b)).collect();
        let next = axpy(&theta, h, &dir);
        len += h;
        if polar(&next) <= 1.0 {
            if outside {
                let s = bisect(|s| polar(&lerp(&theta, &next, s)) <= 1.0, 1.0, 0.0, 200);
                nodes.push(lerp(&theta, &next, s));
            } else {
                nodes.push(theta.clone());
            }
            return Ok(nodes);
        }
        outside = true;
        nodes.push(next.clone());
        theta = next;
        if len > opts.max_len {
            return Err(Error::Runaway { max_len: opts.max_len });
        }
    }
}

/// The endpoint reached by the frozen-time viscous flow from `start`.
pub fn viscous_flow_endpoint<E: EnergyFunctional + ?Sized>(
    energy: &E,
    psi: &ViscousPotential,
    t: f64,
    start: &[f64],
    opts: &FlowOptions,
) -> Result<Vec<f64>> {
    Ok(flow_nodes(energy, psi, t, start, opts)?.pop().unwrap())
}

/// Fill a jump at time `t` by integrating the rescaled viscous flow from `start`
/// until it re-enters the stable set; the path is returned at constant Finsler speed.
pub fn viscous_jump_integrate<E: EnergyFunctional + ?Sized>(
    energy: &E,
    cp: &ContactPotential,
    t: f64,
    start: &[f64],
    opts: &FlowOptions,
) -> Result<TransitionPath> {
    let nodes = flow_nodes(energy, cp.psi(), t, start, opts)?;
    let segments = (nodes.len() - 1).max(opts.min_segments);
    let raw = TransitionPath::from_nodes(energy, cp, t, nodes);
    Ok(raw.resample_constant_speed(energy, cp, segments))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransitionKind {
    Energetic,
    Sliding,
    Viscous,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionClass {
    pub labels: Vec<SegmentLabel>,
    pub kind: TransitionKind,
}

/// Label each segment sliding or viscous and determine the overall type.
pub fn classify_transition<E: EnergyFunctional + ?Sized>(
    path: &TransitionPath,
    energy: &E,
    cp: &ContactPotential,
    tol: f64,
) -> TransitionClass {
    let labels: Vec<SegmentLabel> = path.w.windows(2).map(|p| label_of(cp, &p[0], &p[1], tol)).collect();
    let t = path.time;
    let drop = energy.value(t, path.end()) - energy.value(t, path.start());
    let dist = cp.gauge().eval(&sub(path.end(), path.start()));
    let first = labels.iter().position(|l| *l == SegmentLabel::Viscous);
    let last = labels.iter().rposition(|l| *l == SegmentLabel::Viscous);
    let kind = match (first, last) {
        (None, _) | (_, None) if (drop + dist).abs() <= tol => TransitionKind::Energetic,
        (None, _) | (_, None) => TransitionKind::Sliding,
        // sliding boundary layers at either end are part of a viscous transition
        (Some(a), Some(b)) if labels[a..=b].iter().all(|l| *l == SegmentLabel::Viscous) => TransitionKind::Viscous,
        _ => TransitionKind::Mixed,
    };
    TransitionClass { labels, kind }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, passed: value <= threshold }
    }

    fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, passed: value >= threshold }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionReport {
    pub checks: Vec<Check>,
    pub passed: bool,
    pub max_contact_residual: f64,
    pub affinity_deviation: f64,
    pub reoptimized_cost: Option<f64>,
}

impl TransitionReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Turn any failed check into an itemized verification error.
    pub fn into_result(self) -> Result<Self> {
        if self.passed {
            return Ok(self);
        }
        let failed: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} = {:e} (threshold {:e})", c.name, c.value, c.threshold))
            .collect();
        Err(Error::Verification(failed.join("; ")))
    }
}

/// Check the optimality conditions of a transition path at its frozen time.
pub fn verify_optimal_transition<E: EnergyFunctional + ?Sized>(
    path: &TransitionPath,
    energy: &E,
    cp: &ContactPotential,
    tol: f64,
) -> TransitionReport {
    let g = cp.gauge();
    let t = path.time;
    let rp = path.reparametrize_constant_speed(energy, cp);
    let n = rp.segments();
    let mut checks = Vec::new();

    let end_polar = g.polar(&rp.w[0]).max(g.polar(&rp.w[n]));
    checks.push(Check::at_most("endpoint_stability", end_polar - 1.0, tol));

    let min_speed = rp.segment_costs.iter().fold(f64::INFINITY, |m, c| m.min(c * n as f64));
    checks.push(Check { name: "min_speed".into(), value: min_speed, threshold: tol, passed: min_speed > tol });

    let min_polar = rp.w.iter().map(|w| g.polar(w)).fold(f64::INFINITY, f64::min);
    checks.push(Check::at_least("min_node_polar", min_polar, 1.0 - tol));

    let release = (energy.value(t, rp.start()) - energy.value(t, rp.end()) - rp.cost).abs();
    checks.push(Check::at_most("energy_release", release, tol));

    let max_contact_residual = rp
        .theta
        .windows(2)
        .map(|p| {
            let dv = sub(&p[1], &p[0]);
            let w = energy.force(t, &lerp(&p[0], &p[1], 0.5));
            cp.eval(&dv, &w) - dot(&w, &dv)
        })
        .fold(0.0, f64::max);
    checks.push(Check::at_most("contact_residual", max_contact_residual, tol));

    let e0 = energy.value(t, rp.start());
    let e1 = energy.value(t, rp.end());
    let affinity_deviation = rp
        .theta
        .iter()
        .zip(&rp.r)
        .map(|(x, r)| (energy.value(t, x) - (e0 + r * (e1 - e0))).abs())
        .fold(0.0, f64::max);
    checks.push(Check::at_most("affinity_deviation", affinity_deviation, tol));

    let reoptimized = jump_cost(energy, cp, t, rp.start(), rp.end(), n.clamp(16, 2000));
    let reoptimized_cost = reoptimized.as_ref().ok().map(|(c, _)| *c);
    let excess = match reoptimized_cost {
        Some(c) => rp.cost - c,
        None => f64::INFINITY,
    };
    checks.push(Check::at_most("minimality_excess", excess, tol));

    TransitionReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
        max_contact_residual,
        affinity_deviation,
        reoptimized_cost,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{Energy, EnergyKind, Loading};

    fn cp() -> ContactPotential {
        ContactPotential::new(ViscousPotential::quadratic_1d())
    }

    /// E(u) = −2u on ℝ, frozen in time.
    fn linear_drive() -> Energy {
        Energy::new(EnergyKind::Polynomial { coeffs: vec![0.0, -2.0] }, Loading::constant(vec![0.0]), 1.0).unwrap()
    }

    fn double_well() -> Energy {
        Energy::double_well(Loading::ramp(vec![1.0], 2.0), 2.0).unwrap()
    }

    /// Oracle: composite Simpson for ∫ max(1, |DE|) du along [a, b].
    fn simpson_cost(e: &Energy, t: f64, a: f64, b: f64) -> f64 {
        let n = 20_000;
        let h = (b - a) / n as f64;
        let f = |u: f64| e.gradient(t, &[u])[0].abs().max(1.0);
        let mut s = f(a) + f(b);
        for k in 1..n {
            s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        (s * h / 3.0).abs()
    }

    #[test]
    fn jump_cost_examples() {
        let e = linear_drive();
        let (c, path) = jump_cost(&e, &cp(), 0.5, &[0.0], &[1.0], 32).unwrap();
        assert!((c - 2.0).abs() < 1e-12);
        assert!((simpson_cost(&e, 0.5, 0.0, 1.0) - 2.0).abs() < 1e-12);
        assert_eq!(path.start(), &[0.0]);
        assert_eq!(path.end(), &[1.0]);

        let (c, path) = jump_cost(&e, &cp(), 0.5, &[0.3], &[0.3], 16).unwrap();
        assert_eq!(c, 0.0);
        assert!(path.theta.iter().all(|x| x == &[0.3]));

        let q = Energy::quadratic_1d(Loading::constant(vec![0.0]), 1.0).unwrap();
        let (c, _) = jump_cost(&q, &cp(), 0.0, &[-0.4], &[0.5], 64).unwrap();
        assert!((c - 0.9).abs() < 1e-12);
        assert!(jump_cost(&q, &cp(), 0.0, &[0.0], &[1.0], 8).is_err());
    }

    #[test]
    fn jump_cost_matches_quadrature_on_double_well() {
        let e = double_well();
        let cp = cp();
        for (t, a, b) in [(1.2, -1.0, 1.2), (1.5, -0.2, 1.3), (0.3, 1.0, -1.0)] {
            let (c, _) = jump_cost(&e, &cp, t, &[a], &[b], 400).unwrap();
            let oracle = simpson_cost(&e, t, a, b);
            assert!((c - oracle).abs() < 1e-3 * oracle, "{c} vs {oracle}");
            assert!(c >= cp.gauge().eval(&[b - a]) - 1e-12);
        }
    }

    #[test]
    fn constant_speed_reparametrization_equalizes_increments() {
        let e = double_well();
        let (_, path) = jump_cost(&e, &cp(), 1.2, &[-1.0], &[1.2], 200).unwrap();
        let mean = path.cost / path.segments() as f64;
        for c in &path.segment_costs {
            assert!((c / mean - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn triangle_along_optimal_path() {
        let e = double_well();
        let cp = cp();
        let (c, path) = jump_cost(&e, &cp, 1.2, &[-1.0], &[1.2], 200).unwrap();
        for k in [40, 100, 170] {
            let mid = &path.theta[k];
            let (c1, _) = jump_cost(&e, &cp, 1.2, &[-1.0], mid, 200).unwrap();
            let (c2, _) = jump_cost(&e, &cp, 1.2, mid, &[1.2], 200).unwrap();
            assert!(((c1 + c2) - c).abs() < 0.01 * c);
        }
    }

    #[test]
    fn two_dimensional_path_is_at_least_the_dissipation_distance() {
        let e = Energy::new(
            EnergyKind::QuadraticTracking { matrix: vec![vec![1.0, 0.0], vec![0.0, 1.0]] },
            Loading::constant(vec![3.0, 0.0]),
            1.0,
        )
        .unwrap();
        let cp = ContactPotential::new(
            ViscousPotential::new(
                crate::space::Gauge::l1(2).unwrap(),
                crate::space::Viscosity::NormPower { norm: crate::space::Norm::Euclid, p: 2.0 },
            )
            .unwrap(),
        );
        let (c, path) = jump_cost(&e, &cp, 0.0, &[0.0, 0.0], &[1.0, 0.5], 32).unwrap();
        assert!(c >= 1.5 - 1e-9);
        let straight: f64 = total_cost(&e, &cp, 0.0, &straight(&[0.0, 0.0], &[1.0, 0.5], 32));
        assert!(c <= straight + 1e-12);
        assert_eq!(path.end(), &[1.0, 0.5]);
    }

    #[test]
    fn viscous_jump_lands_on_right_branch() {
        let e = double_well();
        let lstar = 1.0 + 2.0 / (3.0 * 3f64.sqrt());
        let start = [-1.0 / 3f64.sqrt()];
        let path = viscous_jump_integrate(&e, &cp(), lstar, &start, &FlowOptions::for_diameter(5.0)).unwrap();
        // oracle: bisection for the right root of u³ − u = 2/(3√3)
        let c = 2.0 / (3.0 * 3f64.sqrt());
        let root = bisect(|u| u * u * u - u - c <= 0.0, 0.0, 3.0, 200);
        assert!((root - 2.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!((path.end()[0] - root).abs() < 1e-4, "{:?}", path.end());
        let class = classify_transition(&path, &e, &cp(), 1e-3);
        assert_eq!(class.kind, TransitionKind::Viscous);
        assert_eq!(class.labels[0], SegmentLabel::Sliding);
        assert_eq!(*class.labels.last().unwrap(), SegmentLabel::Sliding);
        let viscous = class.labels.iter().filter(|l| **l == SegmentLabel::Viscous).count();
        assert!(viscous as f64 > 0.9 * class.labels.len() as f64);
    }

    #[test]
    fn viscous_jump_preconditions_and_runaway() {
        let e = double_well();
        let err = viscous_jump_integrate(&e, &cp(), 0.5, &[-1.0], &FlowOptions::for_diameter(5.0)).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        let err = viscous_jump_integrate(&linear_drive(), &cp(), 0.0, &[0.0], &FlowOptions::for_diameter(1.0))
            .unwrap_err();
        assert!(matches!(err, Error::Runaway { .. }));
    }

    #[test]
    fn classification_examples() {
        let e = linear_drive();
        let (_, path) = jump_cost(&e, &cp(), 0.0, &[0.0], &[1.0], 16).unwrap();
        let class = classify_transition(&path, &e, &cp(), 1e-6);
        assert!(class.labels.iter().all(|l| *l == SegmentLabel::Viscous));
        assert_eq!(class.kind, TransitionKind::Viscous);

        // quadratic with force 1 − u: a path through the stable region that releases exactly Ψ₀-distance
        let q = Energy::quadratic_1d(Loading::constant(vec![0.0]), 1.0).unwrap();
        let (_, path) = jump_cost(&q, &cp(), 0.0, &[0.2], &[0.1], 16).unwrap();
        let class = classify_transition(&path, &q, &cp(), 1e-6);
        assert!(class.labels.iter().all(|l| *l == SegmentLabel::Sliding));
        assert_eq!(class.kind, TransitionKind::Sliding);

        let tilted = Energy::new(
            EnergyKind::Polynomial { coeffs: vec![0.0, -1.0] },
            Loading::constant(vec![0.0]),
            1.0,
        )
        .unwrap();
        let (_, path) = jump_cost(&tilted, &cp(), 0.0, &[0.0], &[0.7], 16).unwrap();
        assert_eq!(classify_transition(&path, &tilted, &cp(), 1e-9).kind, TransitionKind::Energetic);
    }

    #[test]
    fn verification_of_the_double_well_jump() {
        let e = double_well();
        let lstar = 1.0 + 2.0 / (3.0 * 3f64.sqrt());
        let path =
            viscous_jump_integrate(&e, &cp(), lstar, &[-1.0 / 3f64.sqrt()], &FlowOptions::for_diameter(5.0)).unwrap();
        let report = verify_optimal_transition(&path, &e, &cp(), 1e-3);
        assert!(report.passed, "{report:?}");
        assert!(report.max_contact_residual <= 1e-6);
        assert!(report.into_result().is_ok());
    }

    #[test]
    fn straight_segment_in_stable_region_is_not_a_transition() {
        let q = Energy::quadratic_1d(Loading::constant(vec![0.0]), 1.0).unwrap();
        let path = TransitionPath::from_nodes(&q, &cp(), 0.0, straight(&[-0.5], &[0.5], 32));
        let report = verify_optimal_transition(&path, &q, &cp(), 1e-3);
        assert!(!report.check("energy_release").unwrap().passed);
        assert!(matches!(report.into_result(), Err(Error::Verification(_))));
    }

    #[test]
    fn wiggle_is_flagged_by_reoptimization() {
        let e = double_well();
        let (_, path) = jump_cost(&e, &cp(), 1.5, &[-0.3], &[1.3], 64).unwrap();
        let mut theta = path.theta.clone();
        // back-and-forth excursion in the middle of the path
        for (k, x) in theta.iter_mut().enumerate().skip(20).take(24) {
            let bump = if k < 32 { (k - 20) as f64 } else { (44 - k) as f64 };
            x[0] -= 0.03 * bump;
        }
        let wiggly = TransitionPath::from_nodes(&e, &cp(), 1.5, theta);
        assert!(wiggly.cost > path.cost + 1e-3);
        let report = verify_optimal_transition(&wiggly, &e, &cp(), 1e-3);
        assert!(!report.check("minimality_excess").unwrap().passed);
    }
}
