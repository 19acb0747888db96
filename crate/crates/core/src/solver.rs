//! Incremental minimization: the global scheme IP₀, the viscous local scheme IP_ε,
//! per-step certificates, and the vanishing-viscosity sweep.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::analysis::{detect_jumps, detect_jumps_sharp, sup_distance_off_jumps, BvCurve, JumpThreshold};
use crate::contact::ContactPotential;
use crate::energy::{EnergyFunctional, SearchBox};
use crate::error::{ensure_finite, Error, Result};
use crate::numeric::{axpy, bisect, dot, golden_section, norm2, scale, sub};
use crate::space::{check_vec, Gauge, ViscousPotential};
use crate::transitions::{jump_cost, viscous_flow_endpoint, viscous_jump_integrate, FlowOptions};

/// Uniform partition of [0,T]; when T/τ is not an integer the last step is shortened.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub horizon: f64,
    pub tau: f64,
}

impl TimeGrid {
    pub fn new(horizon: f64, tau: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite() && tau > 0.0 && tau.is_finite()) {
            return Err(Error::Argument(format!("time grid needs T > 0 and tau > 0, got T = {horizon}, tau = {tau}")));
        }
        Ok(TimeGrid { horizon, tau })
    }

    pub fn steps(&self) -> usize {
        let n = self.horizon / self.tau;
        if (n - n.round()).abs() <= 1e-9 * n.max(1.0) {
            (n.round() as usize).max(1)
        } else {
            n.ceil() as usize
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        let n = self.steps();
        let mut t: Vec<f64> = (0..=n).map(|k| (k as f64 * self.tau).min(self.horizon)).collect();
        t[n] = self.horizon;
        t
    }
}

const TIE: f64 = 1e-9;

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).find(|(x, y)| x != y).is_some_and(|(x, y)| x < y)
}

/// Coordinate-wise golden-section descent inside the box, starting from `x`.
fn coordinate_descent(f: &dyn Fn(&[f64]) -> f64, bx: &SearchBox, mut x: Vec<f64>) -> Vec<f64> {
    let mut fx = f(&x);
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..x.len() {
            let h = bx.spacing(i);
            let (lo, hi) = ((x[i] - h).max(bx.lower[i]), (x[i] + h).min(bx.upper[i]));
            let (xi, fi) = golden_section(
                |s| {
                    let mut y = x.clone();
                    y[i] = s;
                    f(&y)
                },
                lo,
                hi,
                1e-13 * (1.0 + x[i].abs()),
            );
            if fi < fx {
                moved = moved.max((xi - x[i]).abs());
                x[i] = xi;
                fx = fi;
            }
        }
        if moved <= 1e-12 {
            break;
        }
    }
    x
}

/// Global minimizer over the box of U ↦ Ψ₀(U − u_prev) + E(t,U): lattice scan, refinement of
/// every lattice basin, tie-break by distance to `u_prev` then lexicographic order.
pub fn ip0_step<E: EnergyFunctional + ?Sized>(
    energy: &E,
    gauge: &Gauge,
    t: f64,
    u_prev: &[f64],
    bx: &SearchBox,
) -> Result<Vec<f64>> {
    let d = bx.dim();
    if u_prev.len() != d || gauge.dim() != d || energy.dim() != d {
        return Err(Error::Argument("state, gauge, energy and box dimensions differ".into()));
    }
    if !bx.contains(u_prev) {
        return Err(Error::Argument(format!("previous state {u_prev:?} lies outside the search box")));
    }
    let f = |z: &[f64]| gauge.eval(&sub(z, u_prev)) + energy.value(t, z);
    let m = bx.cells + 1;
    let vals: Vec<f64> = (0..bx.lattice_len()).map(|k| f(&bx.lattice_point(k))).collect();

    let mut basins: Vec<usize> = (0..vals.len())
        .filter(|&k| {
            let mut stride = 1;
            let mut rem = k;
            for _ in 0..d {
                let c = rem % m;
                rem /= m;
                if c > 0 && vals[k - stride] < vals[k] || c + 1 < m && vals[k + stride] < vals[k] {
                    return false;
                }
                stride *= m;
            }
            true
        })
        .collect();
    basins.sort_by(|a, b| vals[*a].total_cmp(&vals[*b]));
    basins.truncate(32);

    let mut cands: Vec<(Vec<f64>, f64)> = vec![(u_prev.to_vec(), f(u_prev))];
    for &k in &basins {
        let z = bx.lattice_point(k);
        let x = if d == 1 {
            let h = bx.spacing(0);
            let (lo, hi) = ((z[0] - h).max(bx.lower[0]), (z[0] + h).min(bx.upper[0]));
            let x = golden_section(|s| f(&[s]), lo, hi, 1e-13 * (1.0 + z[0].abs())).0;
            // polish to round-off: the right derivative changes sign at the minimizer (kinks included)
            let slope = |s: f64| gauge.dir_deriv(&[s - u_prev[0]], &[1.0]) + energy.gradient(t, &[s])[0];
            let w = 1e-6 * (1.0 + x.abs());
            let (a, b) = ((x - w).max(lo), (x + w).min(hi));
            if slope(a) < 0.0 && slope(b) >= 0.0 {
                vec![bisect(|s| slope(s) < 0.0, a, b, 200)]
            } else {
                vec![x]
            }
        } else {
            coordinate_descent(&f, bx, z)
        };
        let fx = f(&x);
        cands.push((x, fx));
    }
    let best = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let (x, _) = cands
        .into_iter()
        .filter(|c| c.1 <= best + TIE)
        .min_by(|a, b| {
            let (da, db) = (norm2(&sub(&a.0, u_prev)), norm2(&sub(&b.0, u_prev)));
            da.total_cmp(&db).then_with(|| {
                if lex_less(&a.0, &b.0) {
                    std::cmp::Ordering::Less
                } else {
                    std::cmp::Ordering::Greater
                }
            })
        })
        .expect("u_prev is always a candidate");
    let on_boundary = (0..d).any(|i| {
        let tol = 1e-9 * bx.spacing(i);
        (x[i] - bx.lower[i]).abs() <= tol || (bx.upper[i] - x[i]).abs() <= tol
    });
    if on_boundary && x != u_prev {
        return Err(Error::Coercivity { time: t, point: x });
    }
    Ok(x)
}

/// Certification threshold for the Fenchel residual of a viscous step.
pub const STEP_TOL: f64 = 1e-8;

/// One viscous step: a local minimizer of U ↦ τΨ_ε((U − u_prev)/τ) + E(t,U) reached by
/// descent from `u_prev`. Returns the state and its Fenchel residual.
pub fn ip_eps_step<E: EnergyFunctional + ?Sized>(
    energy: &E,
    psi: &ViscousPotential,
    eps: f64,
    tau: f64,
    t: f64,
    u_prev: &[f64],
) -> Result<(Vec<f64>, f64)> {
    if !(eps > 0.0 && tau > 0.0) {
        return Err(Error::Argument(format!("eps and tau must be positive, got {eps}, {tau}")));
    }
    ensure_finite("state", u_prev)?;
    let mu = eps / tau;
    // F(u_prev + s d) has right derivative Ψ′(μΔ; d) + ⟨DE, d⟩
    let slope = |x: &[f64], d: &[f64]| psi.dir_deriv(&scale(&sub(x, u_prev), mu), d) + dot(&energy.gradient(t, x), d);
    let residual = |x: &[f64]| {
        let v = scale(&sub(x, u_prev), 1.0 / tau);
        psi.fenchel_gap_eps(eps, &v, &energy.force(t, x)).expect("eps checked")
    };
    let ray = |x0: &[f64], d: &[f64], h0: f64| -> Result<Vec<f64>> {
        if slope(x0, d) >= 0.0 {
            return Ok(x0.to_vec());
        }
        let cap = 1e-2 * (1.0 + norm2(x0));
        let (mut s, mut h) = (0.0, h0.clamp(1e-15 * (1.0 + norm2(x0)), cap));
        for _ in 0..10_000_000 {
            let s1 = s + h;
            if slope(&axpy(x0, s1, d), d) >= 0.0 {
                let r = bisect(|r| slope(&axpy(x0, r, d), d) < 0.0, s, s1, 200);
                return Ok(axpy(x0, r, d));
            }
            s = s1;
            h = (2.0 * h).min(cap);
        }
        Err(Error::Convergence { iterations: 10_000_000, residual: residual(&axpy(x0, s, d)) })
    };

    let w0 = energy.force(t, u_prev);
    if psi.conj(&w0) == 0.0 {
        return Ok((u_prev.to_vec(), 0.0));
    }
    let est = scale(&psi.conj_grad(&w0), 1.0 / mu);
    let n0 = norm2(&est);
    let mut u = if n0 > 0.0 { ray(u_prev, &scale(&est, 1.0 / n0), 0.5 * n0)? } else { u_prev.to_vec() };
    let mut res = residual(&u);
    const MAX_SWEEPS: usize = 200;
    for _ in 0..MAX_SWEEPS {
        if res <= STEP_TOL {
            return Ok((u, res));
        }
        // fixed-point direction of the optimality system, then coordinate directions
        let target = axpy(u_prev, 1.0 / mu, &psi.conj_grad(&energy.force(t, &u)));
        let r = sub(&target, &u);
        let nr = norm2(&r);
        let mut dirs = Vec::new();
        if nr > 0.0 {
            dirs.push((scale(&r, 1.0 / nr), nr));
        }
        for i in 0..u.len() {
            for sgn in [1.0, -1.0] {
                let mut e = vec![0.0; u.len()];
                e[i] = sgn;
                dirs.push((e, nr.max(1e-12)));
            }
        }
        let before = u.clone();
        for (d, h) in dirs {
            u = ray(&u, &d, 0.5 * h)?;
        }
        res = residual(&u);
        if u == before {
            break;
        }
    }
    if res <= STEP_TOL {
        Ok((u, res))
    } else {
        Err(Error::Convergence { iterations: MAX_SWEEPS, residual: res })
    }
}

/// Node sequence of a discrete scheme with per-step certificates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteSolution {
    pub curve: BvCurve,
    /// Fenchel residual of each step (0 at the initial node and for IP₀)
    pub step_residuals: Vec<f64>,
    /// discrete energy estimate per step; nonpositive up to round-off
    pub energy_residuals: Vec<f64>,
}

impl DiscreteSolution {
    pub fn times(&self) -> &[f64] {
        &self.curve.times
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.curve.values
    }
}

/// Slack for the discrete energy estimate.
pub const ESTIMATE_TOL: f64 = 1e-9;

fn run_scheme<E: EnergyFunctional + ?Sized>(
    energy: &E,
    grid: &TimeGrid,
    u0: &[f64],
    dissipation: impl Fn(f64, &[f64]) -> f64,
    mut step: impl FnMut(f64, f64, &[f64]) -> Result<(Vec<f64>, f64)>,
) -> Result<DiscreteSolution> {
    check_vec("initial state", u0, energy.dim())?;
    if grid.horizon > energy.horizon() * (1.0 + 1e-12) {
        return Err(Error::Argument("time grid extends beyond the energy horizon".into()));
    }
    let times = grid.nodes();
    let mut values = vec![u0.to_vec()];
    let mut step_residuals = vec![0.0];
    let mut energy_residuals = vec![0.0];
    for n in 1..times.len() {
        let (t, h) = (times[n], times[n] - times[n - 1]);
        let prev = &values[n - 1];
        let (u, r) = step(t, h, prev)?;
        // loading is affine on each step, so the power integral at frozen U_{n-1} is exact
        let est = dissipation(h, &sub(&u, prev)) + energy.value(t, &u) - energy.value(t, prev);
        if est > ESTIMATE_TOL * (1.0 + energy.value(t, prev).abs()) {
            return Err(Error::EnergyEstimate { step: n, residual: est });
        }
        values.push(u);
        step_residuals.push(r);
        energy_residuals.push(est);
    }
    Ok(DiscreteSolution { curve: BvCurve::continuous(times, values)?, step_residuals, energy_residuals })
}

/// IP₀ on the grid with global minimization in the box.
pub fn solve_ip0<E: EnergyFunctional + ?Sized>(
    energy: &E,
    gauge: &Gauge,
    grid: &TimeGrid,
    u0: &[f64],
    bx: &SearchBox,
) -> Result<DiscreteSolution> {
    if !bx.contains(u0) {
        return Err(Error::Argument("initial state lies outside the search box".into()));
    }
    run_scheme(energy, grid, u0, |_, du| gauge.eval(du), |t, _, prev| Ok((ip0_step(energy, gauge, t, prev, bx)?, 0.0)))
}

/// IP_ε on the grid with local descent at every step.
pub fn solve_ip_eps<E: EnergyFunctional + ?Sized>(
    energy: &E,
    psi: &ViscousPotential,
    eps: f64,
    grid: &TimeGrid,
    u0: &[f64],
) -> Result<DiscreteSolution> {
    run_scheme(
        energy,
        grid,
        u0,
        |h, du| h * psi.eval_scaled(eps, &scale(du, 1.0 / h)),
        |t, h, prev| ip_eps_step(energy, psi, eps, h, t, prev),
    )
}

/// |∫(Ψ_ε(u̇) + Ψ_ε*(−DE) − ∂ₜE) dt + E(T,u(T)) − E(0,u(0))| for a discrete viscous curve,
/// read as the left-continuous piecewise-constant interpolant (state U_n on (t_{n−1}, t_n])
/// with piecewise-constant velocities; the power is integrated by the trapezoid rule in t.
pub fn viscous_energy_identity_residual<E: EnergyFunctional + ?Sized>(
    c: &BvCurve,
    energy: &E,
    psi: &ViscousPotential,
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Argument(format!("eps must be positive, got {eps}")));
    }
    let n = c.len();
    let mut total = 0.0;
    for k in 1..n {
        let (t0, t1) = (c.times[k - 1], c.times[k]);
        let h = t1 - t0;
        let (a, b) = (&c.values[k - 1], &c.values[k]);
        let v = scale(&sub(b, a), 1.0 / h);
        total += h * psi.eval_scaled(eps, &v);
        total += h * psi.conj(&energy.force(t1, b)) / eps;
        total -= 0.5 * h * (energy.power(t0, b) + energy.power_left(t1, b));
    }
    Ok((total + energy.value(c.times[n - 1], &c.values[n - 1]) - energy.value(c.times[0], &c.values[0])).abs())
}

/// (ε_k, τ_k) pairs with ε_k decreasing and ε_k/τ_k strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSchedule {
    entries: Vec<(f64, f64)>,
}

impl SweepSchedule {
    pub fn new(entries: Vec<(f64, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Argument("schedule needs at least one entry".into()));
        }
        if let Some((e, t)) = entries.iter().find(|(e, t)| !(*e > 0.0 && *t > 0.0 && e.is_finite() && t.is_finite())) {
            return Err(Error::Argument(format!("schedule entry (eps {e}, tau {t}) must be positive")));
        }
        for (k, p) in entries.windows(2).enumerate() {
            if p[1].0 >= p[0].0 {
                return Err(Error::Argument(format!("schedule eps must decrease (entries {k}, {})", k + 1)));
            }
            if p[1].0 / p[1].1 <= p[0].0 / p[0].1 {
                return Err(Error::Argument(format!(
                    "schedule eps/tau must strictly increase (entries {k}, {})",
                    k + 1
                )));
            }
        }
        Ok(SweepSchedule { entries })
    }

    /// ε_k = ε₀ 2^{−k}, τ_k = ε_k^{exponent} for k = 0..levels−1 (exponent > 1).
    pub fn geometric(eps0: f64, levels: usize, exponent: f64) -> Result<Self> {
        if !(exponent > 1.0) {
            return Err(Error::Argument(format!("tau exponent must exceed 1, got {exponent}")));
        }
        Self::new((0..levels).map(|k| {
            let e = eps0 * 0.5f64.powi(k as i32);
            (e, e.powf(exponent))
        }).collect())
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// half-width of the excluded window around jump times in the distance diagnostics
    pub delta: f64,
    /// uniform sample times for the distance diagnostics
    pub samples: usize,
    /// worker threads; 0 uses the available parallelism
    pub threads: usize,
    pub threshold: JumpThreshold,
    /// flow control for relaxation and jump filling; derived from the curve extent if absent
    pub flow: Option<FlowOptions>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { delta: 0.1, samples: 1000, threads: 0, threshold: JumpThreshold::default(), flow: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpSummary {
    pub time: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepLevel {
    pub k: usize,
    pub eps: f64,
    pub tau: f64,
    pub solution: DiscreteSolution,
    /// jumps of the relaxed curve
    pub jumps: Vec<JumpSummary>,
    /// time windows excluded from the distance diagnostics
    pub windows: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub levels: Vec<SweepLevel>,
    /// sup-distance between levels k and k+1 away from jump times
    pub distances: Vec<f64>,
    pub warning: Option<String>,
    /// the limit candidate with filled jumps
    pub limit: BvCurve,
}

fn flow_for(c: &BvCurve, opts: &SweepOptions) -> FlowOptions {
    opts.flow.unwrap_or_else(|| {
        let d = c.dim();
        let extent = (0..d)
            .map(|i| {
                let (lo, hi) = c.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), u| (a.min(u[i]), b.max(u[i])));
                hi - lo
            })
            .fold(0.0, f64::max);
        FlowOptions::for_diameter(extent.max(1.0))
    })
}

/// Move every node with −DE outside K* along the frozen-time viscous flow back onto ∂K*.
pub fn relax_to_stable<E: EnergyFunctional + ?Sized>(
    c: &BvCurve,
    energy: &E,
    psi: &ViscousPotential,
    flow: &FlowOptions,
) -> Result<BvCurve> {
    let g = psi.gauge();
    let values = c
        .times
        .iter()
        .zip(&c.values)
        .map(|(t, u)| {
            if g.polar(&energy.force(*t, u)) > 1.0 {
                viscous_flow_endpoint(energy, psi, *t, u, flow)
            } else {
                Ok(u.clone())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    BvCurve::continuous(c.times.clone(), values)
}

/// Relax, detect jumps, and fill each jump by the viscous flow from its left limit
/// (falling back to a geodesic when the flow precondition fails).
pub fn limit_candidate<E: EnergyFunctional + ?Sized>(
    c: &BvCurve,
    energy: &E,
    cp: &ContactPotential,
    opts: &SweepOptions,
) -> Result<BvCurve> {
    let flow = flow_for(c, opts);
    let relaxed = relax_to_stable(c, energy, cp.psi(), &flow)?;
    let mut out = detect_jumps_sharp(&relaxed.times, &relaxed.values, cp.gauge(), opts.threshold)?;
    for j in &mut out.jumps {
        let path = match viscous_jump_integrate(energy, cp, j.time, &j.left, &flow) {
            Ok(p) => p,
            Err(Error::Precondition(_)) => jump_cost(energy, cp, j.time, &j.left, &j.right, 256)?.1,
            Err(e) => return Err(e),
        };
        j.right = path.end().to_vec();
        j.middle = j.left.clone();
        out.values[j.index] = j.left.clone();
        j.path = Some(path);
    }
    Ok(out)
}

fn parallel_map<T: Send, R: Send>(items: Vec<T>, threads: usize, f: impl Fn(T) -> R + Sync) -> Vec<R> {
    let n = items.len();
    let workers = if threads == 0 { std::thread::available_parallelism().map_or(1, |p| p.get()) } else { threads }.min(n).max(1);
    if workers == 1 {
        // also the path taken on targets without threads
        return items.into_iter().map(f).collect();
    }
    let queue: Mutex<Vec<(usize, T)>> = Mutex::new(items.into_iter().enumerate().rev().collect());
    let results: Mutex<Vec<Option<R>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let Some((i, item)) = queue.lock().unwrap().pop() else { break };
                let r = f(item);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    results.into_inner().unwrap().into_iter().map(|r| r.expect("every item processed")).collect()
}

/// Solve IP_ε for every schedule entry (concurrently), compare successive curves away from
/// jumps, and build the limit candidate from the finest curve.
pub fn vv_sweep<E: EnergyFunctional + ?Sized>(
    energy: &E,
    cp: &ContactPotential,
    schedule: &SweepSchedule,
    horizon: f64,
    u0: &[f64],
    opts: &SweepOptions,
) -> Result<SweepReport> {
    let jobs: Vec<(usize, f64, f64)> = schedule.entries().iter().enumerate().map(|(k, &(e, t))| (k, e, t)).collect();
    let levels = parallel_map(jobs, opts.threads, |(k, eps, tau)| -> Result<SweepLevel> {
        let grid = TimeGrid::new(horizon, tau)?;
        let solution = solve_ip_eps(energy, cp.psi(), eps, &grid, u0)?;
        let flow = flow_for(&solution.curve, opts);
        let relaxed = relax_to_stable(&solution.curve, energy, cp.psi(), &flow)?;
        let jumps: Vec<JumpSummary> = detect_jumps_sharp(&relaxed.times, &relaxed.values, cp.gauge(), opts.threshold)?
            .jumps
            .into_iter()
            .map(|j| JumpSummary { time: j.time, left: j.left, right: j.right })
            .collect();
        // the raw curve crosses over during a transit window that starts at the relaxed jump
        let raw = detect_jumps(solution.times(), solution.values(), cp.gauge(), opts.threshold)?;
        let mut windows: Vec<(f64, f64)> = raw.jumps.iter().map(|j| (raw.times[j.index.saturating_sub(1)], j.time)).collect();
        windows.extend(jumps.iter().map(|j| (j.time, j.time)));
        Ok(SweepLevel { k, eps, tau, solution, jumps, windows })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let distances: Vec<f64> = levels
        .windows(2)
        .map(|p| {
            let w: Vec<(f64, f64)> = p.iter().flat_map(|l| l.windows.iter().copied()).collect();
            sup_distance_off_jumps(&p[0].solution.curve, &p[1].solution.curve, &w, opts.delta, opts.samples)
        })
        .collect();
    let warning = distances
        .windows(2)
        .position(|p| p[1] >= p[0])
        .map(|k| format!("successive distances do not decrease between levels {} and {}", k + 1, k + 2));
    let limit = limit_candidate(&levels.last().expect("schedule nonempty").solution.curve, energy, cp, opts)?;
    Ok(SweepReport { levels, distances, warning, limit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{Energy, Loading};

    fn play() -> Energy {
        Energy::quadratic_1d(Loading::ramp(vec![2.0], 1.0), 1.0).unwrap()
    }

    fn well() -> Energy {
        Energy::double_well(Loading::ramp(vec![1.0], 2.0), 2.0).unwrap()
    }

    fn bx1() -> SearchBox {
        SearchBox::new(vec![-3.0], vec![3.0], 400).unwrap()
    }

    /// Fine-grid minimizer of the IP₀ step functional.
    fn grid_argmin(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).min_by(|a, b| f(*a).total_cmp(&f(*b))).unwrap()
    }

    #[test]
    fn time_grid_nodes() {
        let g = TimeGrid::new(1.0, 1e-3).unwrap();
        assert_eq!(g.steps(), 1000);
        let t = g.nodes();
        assert_eq!(t[1000], 1.0);
        let g = TimeGrid::new(1.0, 0.3).unwrap();
        assert_eq!(g.nodes(), vec![0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
        assert!(TimeGrid::new(1.0, 0.0).is_err());
    }

    #[test]
    fn ip0_step_examples() {
        let e = play();
        let g = Gauge::abs();
        assert_eq!(ip0_step(&e, &g, 0.25, &[0.0], &bx1()).unwrap(), vec![0.0]);
        let u = ip0_step(&e, &g, 1.0, &[0.0], &bx1()).unwrap()[0];
        let oracle = grid_argmin(|z| z.abs() + 0.5 * (z - 2.0).powi(2), -3.0, 3.0, 600_000);
        assert!((u - 1.0).abs() < 1e-9 && (u - oracle).abs() < 2e-5);
        assert!(Gauge::weighted_l1(vec![0.0]).is_err());
    }

    #[test]
    fn ip0_boundary_minimizer_is_coercivity_error() {
        let e = play();
        let small = SearchBox::new(vec![-0.5], vec![0.5], 50).unwrap();
        assert!(matches!(ip0_step(&e, &Gauge::abs(), 1.0, &[0.0], &small), Err(Error::Coercivity { .. })));
    }

    #[test]
    fn ip0_double_well_matches_global_scan() {
        let e = well();
        let g = Gauge::abs();
        for (t, prev) in [(0.5, -1.0), (1.2, -1.0), (1.7, -0.4)] {
            let u = ip0_step(&e, &g, t, &[prev], &bx1()).unwrap()[0];
            let f = |z: f64| (z - prev).abs() + e.value(t, &[z]);
            let oracle = grid_argmin(f, -3.0, 3.0, 600_000);
            assert!((u - oracle).abs() < 2e-5, "t {t}: {u} vs {oracle}");
        }
    }

    #[test]
    fn ip0_two_dimensional() {
        let e = Energy::new(
            crate::energy::EnergyKind::QuadraticTracking { matrix: vec![vec![2.0, 0.5], vec![0.5, 1.0]] },
            Loading::ramp(vec![2.0, -1.0], 1.0),
            1.0,
        )
        .unwrap();
        let g = Gauge::l1(2).unwrap();
        let bx = SearchBox::new(vec![-3.0, -3.0], vec![3.0, 3.0], 60).unwrap();
        let u = ip0_step(&e, &g, 1.0, &[0.0, 0.0], &bx).unwrap();
        let f = |z: &[f64]| g.eval(z) + e.value(1.0, z);
        let n = 1200;
        let mut best = f64::INFINITY;
        for i in 0..=n {
            for j in 0..=n {
                let z = [-3.0 + 6.0 * i as f64 / n as f64, -3.0 + 6.0 * j as f64 / n as f64];
                best = best.min(f(&z));
            }
        }
        assert!(f(&u) <= best + 1e-9);
    }

    #[test]
    fn ip_eps_step_examples() {
        let e = play();
        let psi = ViscousPotential::quadratic_1d();
        let (u, r) = ip_eps_step(&e, &psi, 0.1, 0.01, 0.25, &[0.0]).unwrap();
        assert_eq!(u, vec![0.0]);
        assert_eq!(r, 0.0);

        let (u, r) = ip_eps_step(&e, &psi, 0.1, 0.01, 1.0, &[0.0]).unwrap();
        let oracle = grid_argmin(|z| 0.01 * psi.eval_scaled(0.1, &[z / 0.01]) + e.value(1.0, &[z]), -1.0, 2.0, 3_000_000);
        assert!((u[0] - oracle).abs() < 2e-6 && r <= STEP_TOL);
        assert!(ip_eps_step(&e, &psi, 0.0, 0.01, 1.0, &[0.0]).is_err());
    }

    #[test]
    fn ip_eps_past_the_fold_moves_right() {
        let e = well();
        let psi = ViscousPotential::quadratic_1d();
        let fold = -1.0 / 3f64.sqrt();
        let (u, r) = ip_eps_step(&e, &psi, 1e-2, 1e-3, 1.5, &[fold]).unwrap();
        assert!(u[0] > fold && r <= STEP_TOL);
    }

    #[test]
    fn ip_eps_two_dimensional_is_certified() {
        let e = Energy::new(
            crate::energy::EnergyKind::QuadraticTracking { matrix: vec![vec![2.0, 0.5], vec![0.5, 1.0]] },
            Loading::ramp(vec![2.0, -1.0], 1.0),
            1.0,
        )
        .unwrap();
        let psi = ViscousPotential::new(
            Gauge::l1(2).unwrap(),
            crate::space::Viscosity::NormPower { norm: crate::space::Norm::Euclid, p: 2.0 },
        )
        .unwrap();
        let (_, r) = ip_eps_step(&e, &psi, 0.1, 0.01, 1.0, &[0.0, 0.0]).unwrap();
        assert!(r <= STEP_TOL);
    }

    #[test]
    fn play_problem_schemes() {
        let e = play();
        let grid = TimeGrid::new(1.0, 1e-3).unwrap();
        let exact = |t: f64| (2.0 * t - 1.0).max(0.0);
        let sol = solve_ip0(&e, &Gauge::abs(), &grid, &[0.0], &bx1()).unwrap();
        let err = sol.times().iter().zip(sol.values()).map(|(t, u)| (u[0] - exact(*t)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        assert!(sol.energy_residuals.iter().all(|r| *r <= ESTIMATE_TOL));

        let psi = ViscousPotential::quadratic_1d();
        let sol = solve_ip_eps(&e, &psi, 1e-2, &grid, &[0.0]).unwrap();
        let err = sol.times().iter().zip(sol.values()).map(|(t, u)| (u[0] - exact(*t)).abs()).fold(0.0, f64::max);
        assert!(err < 5e-2);
        assert!(sol.step_residuals.iter().all(|r| *r <= STEP_TOL));
        assert!(sol.energy_residuals.iter().all(|r| *r <= ESTIMATE_TOL));
    }

    #[test]
    fn sticking_forever_under_constant_loading() {
        let e = Energy::double_well(Loading::constant(vec![0.3]), 1.0).unwrap();
        let grid = TimeGrid::new(1.0, 0.01).unwrap();
        let psi = ViscousPotential::quadratic_1d();
        let sol = solve_ip_eps(&e, &psi, 0.1, &grid, &[1.0]).unwrap();
        assert!(sol.values().iter().all(|u| u[0] == 1.0));
        let sol = solve_ip0(&e, &Gauge::abs(), &grid, &[1.0], &bx1()).unwrap();
        assert!(sol.values().iter().all(|u| u[0] == 1.0));
        assert!(viscous_energy_identity_residual(&sol.curve, &e, &psi, 0.1).unwrap() <= 1e-12);
    }

    #[test]
    fn ip0_double_well_jumps_early() {
        let e = well();
        let grid = TimeGrid::new(2.0, 1e-3).unwrap();
        let sol = solve_ip0(&e, &Gauge::abs(), &grid, &[-1.0], &bx1()).unwrap();
        let k = sol.values().iter().position(|u| u[0] > 0.0).unwrap();
        let t = sol.times()[k];
        assert!(t > 0.99 && t < 1.01, "{t}");
    }

    #[test]
    fn energy_identity_residual_play() {
        let e = play();
        let psi = ViscousPotential::quadratic_1d();
        let sol = solve_ip_eps(&e, &psi, 1e-2, &TimeGrid::new(1.0, 1e-3).unwrap(), &[0.0]).unwrap();
        let r = viscous_energy_identity_residual(&sol.curve, &e, &psi, 1e-2).unwrap();
        assert!(r <= 1e-2, "{r}");
        let mut bad = sol.curve.clone();
        bad.values[500][0] += 0.5;
        assert!(viscous_energy_identity_residual(&bad, &e, &psi, 1e-2).unwrap() > 10.0 * r);
    }

    #[test]
    fn schedule_validation() {
        assert!(SweepSchedule::new(vec![(0.1, 0.01), (0.05, 0.0025)]).is_ok());
        assert!(SweepSchedule::new(vec![(0.1, 0.01), (0.05, 0.01)]).is_err());
        assert!(SweepSchedule::new(vec![]).is_err());
        let s = SweepSchedule::geometric(0.1, 4, 1.5).unwrap();
        assert_eq!(s.entries().len(), 4);
        assert!(SweepSchedule::geometric(0.1, 4, 1.0).is_err());
    }

    #[test]
    fn play_sweep_distances_decrease() {
        let e = play();
        let cp = ContactPotential::new(ViscousPotential::quadratic_1d());
        let sched = SweepSchedule::geometric(0.1, 4, 1.5).unwrap();
        let rep = vv_sweep(&e, &cp, &sched, 1.0, &[0.0], &SweepOptions::default()).unwrap();
        assert_eq!(rep.levels.len(), 4);
        assert!(rep.levels.windows(2).all(|p| p[0].k < p[1].k));
        assert!(rep.distances.windows(2).all(|p| p[1] < p[0]), "{:?}", rep.distances);
        assert!(rep.warning.is_none());
        assert!(rep.limit.jumps.is_empty());

        let single = SweepSchedule::new(vec![(0.05, 0.01)]).unwrap();
        let rep = vv_sweep(&e, &cp, &single, 1.0, &[0.0], &SweepOptions::default()).unwrap();
        assert!(rep.distances.is_empty() && rep.warning.is_none());
    }
}
