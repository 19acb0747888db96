//! Discrete BV curves: jump detection, total variations, energy balances,
//! jump conditions, and the local / energetic / BV solution classifiers.

use serde::{Deserialize, Serialize};

use crate::contact::ContactPotential;
use crate::energy::{EnergyFunctional, SearchBox};
use crate::error::{Error, Result};
use crate::numeric::{interp_table, lerp, sub};
use crate::space::Gauge;
use crate::transitions::{jump_cost, TransitionPath};

/// A jump at node `index`: left limit, value at the jump time, right limit, and optionally
/// the transition path connecting them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub index: usize,
    pub time: f64,
    pub left: Vec<f64>,
    pub middle: Vec<f64>,
    pub right: Vec<f64>,
    pub path: Option<TransitionPath>,
}

/// Node values on a strictly increasing time grid, piecewise linear between nodes,
/// with jump records supplying one-sided limits at jump nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BvCurve {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub jumps: Vec<JumpRecord>,
}

/// One (t, u) row of the tabular encoding; a jump occupies two or three rows with equal t.
pub type Row = (f64, Vec<f64>);

impl BvCurve {
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>, jumps: Vec<JumpRecord>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::Argument("curve needs equally many (at least one) times and values".into()));
        }
        if times.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Argument("curve times must be strictly increasing".into()));
        }
        let d = values[0].len();
        if values.iter().any(|v| v.len() != d) {
            return Err(Error::Argument("curve values have inconsistent dimensions".into()));
        }
        let mut last: Option<usize> = None;
        for j in &jumps {
            if last.is_some_and(|l| j.index <= l) || j.index >= times.len() {
                return Err(Error::Argument(format!("jump index {} out of order or range", j.index)));
            }
            if j.time != times[j.index] || j.middle != values[j.index] {
                return Err(Error::Argument(format!("jump record at index {} disagrees with its node", j.index)));
            }
            last = Some(j.index);
        }
        Ok(BvCurve { times, values, jumps })
    }

    pub fn continuous(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(times, values, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn jump_at(&self, index: usize) -> Option<&JumpRecord> {
        self.jumps.iter().find(|j| j.index == index)
    }

    pub fn left_limit(&self, index: usize) -> &[f64] {
        self.jump_at(index).map_or(&self.values[index], |j| &j.left)
    }

    pub fn right_limit(&self, index: usize) -> &[f64] {
        self.jump_at(index).map_or(&self.values[index], |j| &j.right)
    }

    /// u(t): node value at node times, linear interpolation of one-sided limits in between.
    pub fn value_at(&self, t: f64) -> Vec<f64> {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0].clone();
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1].clone();
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        if self.times[k] == t {
            return self.values[k].clone();
        }
        let s = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        lerp(self.right_limit(k), self.left_limit(k + 1), s)
    }

    /// Tabular encoding: one row per node, jumps as rows (t,u₋), [(t,u),] (t,u₊).
    pub fn to_rows(&self) -> Vec<Row> {
        let mut rows = Vec::with_capacity(self.len() + 2 * self.jumps.len());
        for (n, (t, u)) in self.times.iter().zip(&self.values).enumerate() {
            match self.jump_at(n) {
                Some(j) => {
                    rows.push((*t, j.left.clone()));
                    if j.middle != j.left {
                        rows.push((*t, j.middle.clone()));
                    }
                    rows.push((*t, j.right.clone()));
                }
                None => rows.push((*t, u.clone())),
            }
        }
        rows
    }

    /// Inverse of [`BvCurve::to_rows`]; paths are not part of the tabular form.
    pub fn from_rows(rows: &[Row]) -> Result<Self> {
        let mut times = Vec::new();
        let mut values = Vec::new();
        let mut jumps = Vec::new();
        let mut i = 0;
        while i < rows.len() {
            let t = rows[i].0;
            let mut j = i;
            while j + 1 < rows.len() && rows[j + 1].0 == t {
                j += 1;
            }
            let group = &rows[i..=j];
            let index = times.len();
            let (left, middle, right) = match group.len() {
                1 => (None, group[0].1.clone(), None),
                2 => (Some(group[0].1.clone()), group[0].1.clone(), Some(group[1].1.clone())),
                3 => (Some(group[0].1.clone()), group[1].1.clone(), Some(group[2].1.clone())),
                k => return Err(Error::Argument(format!("{k} rows share time {t}; at most 3 allowed"))),
            };
            if let (Some(left), Some(right)) = (left, right) {
                jumps.push(JumpRecord { index, time: t, left, middle: middle.clone(), right, path: None });
            }
            times.push(t);
            values.push(middle);
            i = j + 1;
        }
        Self::new(times, values, jumps)
    }
}

/// How large an increment must be to count as a jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum JumpThreshold {
    /// multiple of the median nonzero increment
    Relative(f64),
    /// fixed dissipation distance
    Absolute(f64),
}

impl Default for JumpThreshold {
    fn default() -> Self {
        JumpThreshold::Relative(10.0)
    }
}

/// Like [`detect_jumps`], but each run of large increments yields a single jump at its
/// largest increment and keeps all other nodes; suited to curves whose jumps are one step wide.
pub fn detect_jumps_sharp(times: &[f64], values: &[Vec<f64>], gauge: &Gauge, threshold: JumpThreshold) -> Result<BvCurve> {
    let coarse = detect_jumps(times, values, gauge, threshold)?;
    let incs: Vec<f64> = values.windows(2).map(|p| gauge.eval(&sub(&p[1], &p[0]))).collect();
    let mut jumps = Vec::new();
    for j in &coarse.jumps {
        // the run spans original nodes from the jump's predecessor to the jump node
        let a = times.partition_point(|&t| t < coarse.times[j.index.saturating_sub(1)]);
        let b = times.partition_point(|&t| t < j.time);
        let k = (a..b).max_by(|x, y| incs[*x].total_cmp(&incs[*y])).unwrap_or(b.saturating_sub(1));
        jumps.push(JumpRecord {
            index: k + 1,
            time: times[k + 1],
            left: values[k].clone(),
            middle: values[k + 1].clone(),
            right: values[k + 1].clone(),
            path: None,
        });
    }
    BvCurve::new(times.to_vec(), values.to_vec(), jumps)
}

/// Mark runs of increments with Ψ₀(Δu) above the threshold as jumps. Interior nodes of a run
/// are dropped; the jump sits at the run's last node with u₋ from its first node.
pub fn detect_jumps(times: &[f64], values: &[Vec<f64>], gauge: &Gauge, threshold: JumpThreshold) -> Result<BvCurve> {
    let incs: Vec<f64> = values.windows(2).map(|p| gauge.eval(&sub(&p[1], &p[0]))).collect();
    let limit = match threshold {
        JumpThreshold::Absolute(a) if a > 0.0 => a,
        JumpThreshold::Relative(r) if r > 0.0 => {
            let mut nz: Vec<f64> = incs.iter().copied().filter(|x| *x > 0.0).collect();
            if nz.is_empty() {
                return BvCurve::continuous(times.to_vec(), values.to_vec());
            }
            nz.sort_by(f64::total_cmp);
            r * nz[nz.len() / 2]
        }
        _ => return Err(Error::Argument("jump threshold must be positive".into())),
    };
    let mut out_t = vec![times[0]];
    let mut out_u = vec![values[0].clone()];
    let mut jumps = Vec::new();
    let mut n = 0;
    while n + 1 < values.len() {
        if incs[n] > limit {
            let a = n;
            let mut b = n + 1;
            while b < incs.len() && incs[b] > limit {
                b += 1;
            }
            jumps.push(JumpRecord {
                index: out_t.len(),
                time: times[b],
                left: values[a].clone(),
                middle: values[b].clone(),
                right: values[b].clone(),
                path: None,
            });
            out_t.push(times[b]);
            out_u.push(values[b].clone());
            n = b;
        } else {
            out_t.push(times[n + 1]);
            out_u.push(values[n + 1].clone());
            n += 1;
        }
    }
    BvCurve::new(out_t, out_u, jumps)
}

/// Σ over continuous segments in [a,b] of `seg` (prorated by time overlap) plus jump halves
/// inside [a,b] following the endpoint convention.
fn variation(
    c: &BvCurve,
    a: f64,
    b: f64,
    mut seg: impl FnMut(&[f64], &[f64]) -> f64,
    mut half: impl FnMut(f64, &[f64], &[f64]) -> Result<f64>,
) -> Result<f64> {
    let mut total = 0.0;
    for n in 1..c.len() {
        let (t0, t1) = (c.times[n - 1], c.times[n]);
        let overlap = (t1.min(b) - t0.max(a)).max(0.0);
        if overlap > 0.0 {
            total += seg(c.right_limit(n - 1), c.left_limit(n)) * overlap / (t1 - t0);
        }
    }
    for j in &c.jumps {
        if j.time > a && j.time <= b {
            total += half(j.time, &j.left, &j.middle)?;
        }
        if j.time >= a && j.time < b {
            total += half(j.time, &j.middle, &j.right)?;
        }
    }
    Ok(total)
}

/// Var_Ψ₀(u; a, b).
pub fn var_psi0(c: &BvCurve, gauge: &Gauge, a: f64, b: f64) -> f64 {
    let d = |x: &[f64], y: &[f64]| gauge.eval(&sub(y, x));
    variation(c, a, b, d, |_, x, y| Ok(d(x, y))).expect("infallible")
}

/// pVar(u; a, b): Ψ₀-variation of the continuous part plus Finsler jump costs with `nodes` path segments.
pub fn pvar<E: EnergyFunctional + ?Sized>(
    c: &BvCurve,
    energy: &E,
    cp: &ContactPotential,
    a: f64,
    b: f64,
    nodes: usize,
) -> Result<f64> {
    let g = cp.gauge();
    variation(
        c,
        a,
        b,
        |x, y| g.eval(&sub(y, x)),
        |t, x, y| Ok(jump_cost(energy, cp, t, x, y, nodes)?.0),
    )
}

/// Points where local stability must hold: all nodes except jump nodes, whose right limits are used.
fn stability_points(c: &BvCurve) -> impl Iterator<Item = (f64, &[f64])> {
    (0..c.len()).map(move |n| (c.times[n], c.right_limit(n)))
}

/// Var_ℬ₀(u; a, b): pVar plus the K*-indicator of the force on the continuous part.
pub fn var_b0<E: EnergyFunctional + ?Sized>(
    c: &BvCurve,
    energy: &E,
    cp: &ContactPotential,
    a: f64,
    b: f64,
    nodes: usize,
    tol: f64,
) -> Result<f64> {
    let g = cp.gauge();
    let unstable = stability_points(c)
        .filter(|(t, _)| *t >= a && *t <= b)
        .any(|(t, u)| !g.kstar_contains(&energy.force(t, u), tol));
    if unstable {
        return Ok(f64::INFINITY);
    }
    pvar(c, energy, cp, a, b, nodes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub value: f64,
    pub time: f64,
}

/// max over continuous-part nodes of (Ψ₀*(−DE) − 1)₊, with its location.
pub fn local_stability_report<E: EnergyFunctional + ?Sized>(c: &BvCurve, energy: &E, gauge: &Gauge) -> Violation {
    stability_points(c).fold(Violation { value: 0.0, time: c.times[0] }, |worst, (t, u)| {
        let v = (gauge.polar(&energy.force(t, u)) - 1.0).max(0.0);
        if v > worst.value {
            Violation { value: v, time: t }
        } else {
            worst
        }
    })
}

/// Signed balance residual var(0,t) + E(t,u(t)) − E(0,u(0)) − ∫₀ᵗ ∂ₜE at every node.
fn balance_series<E: EnergyFunctional + ?Sized>(
    c: &BvCurve,
    energy: &E,
    seg: impl Fn(&[f64], &[f64]) -> f64,
    mut half: impl FnMut(f64, &[f64], &[f64]) -> Result<f64>,
) -> Result<Vec<f64>> {
    let e0 = energy.value(c.times[0], &c.values[0]);
    let mut var = 0.0;
    let mut work = 0.0;
    let mut out = vec![0.0];
    for n in 1..c.len() {
        let (t0, t1) = (c.times[n - 1], c.times[n]);
        if let Some(j) = c.jump_at(n - 1) {
            var += half(t0, &j.middle, &j.right)?;
        }
        let (ua, ub) = (c.right_limit(n - 1), c.left_limit(n));
        var += seg(ua, ub);
        work += 0.5 * (t1 - t0) * (energy.power(t0, ua) + energy.power_left(t1, ub));
        if let Some(j) = c.jump_at(n) {
            var += half(t1, &j.left, &j.middle)?;
        }
        out.push(var + energy.value(t1, &c.values[n]) - e0 - work);
    }
    Ok(out)
}

fn max_abs(xs: &[f64], times: &[f64]) -> Violation {
    xs.iter().zip(times).fold(Violation { value: 0.0, time: times[0] }, |w, (x, t)| {
        if x.abs() > w.value {
            Violation { value: x.abs(), time: *t }
        } else {
            w
        }
    })
}

/// max over nodes of |pVar(0,t) + E(t,u(t)) − E(0,u(0)) − ∫₀ᵗ ∂ₜE|.
pub fn bv_energy_balance_residual<E: EnergyFunctional + ?Sized>(
    c: &BvCurve,
    energy: &E,
    cp: &ContactPotential,
    nodes: usize,
) -> Result<Violation> {
    let g = cp.gauge();
    let series = balance_series(c, energy, |x, y| g.eval(&sub(y, x)), |t, x, y| Ok(jump_cost(energy, cp, t, x, y, nodes)?.0))?;
    Ok(max_abs(&series, &c.times))
}

/// The same balance with Var_Ψ₀ in place of pVar.
pub fn energetic_balance_residual<E: EnergyFunctional + ?Sized>(c: &BvCurve, energy: &E, gauge: &Gauge) -> Violation {
    let d = |x: &[f64], y: &[f64]| gauge.eval(&sub(y, x));
    let series = balance_series(c, energy, d, |_, x, y| Ok(d(x, y))).expect("infallible");
    max_abs(&series, &c.times)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpCheck {
    pub index: usize,
    pub time: f64,
    /// residuals of (u₋→u), (u→u₊), (u₋→u₊)
    pub residuals: [f64; 3],
    pub passed: bool,
}

/// E(t,y) − E(t,x) + Δ(t;x,y) for the three pairs of each jump.
pub fn jump_conditions_check<E: EnergyFunctional + ?Sized>(
    c: &BvCurve,
    energy: &E,
    cp: &ContactPotential,
    nodes: usize,
    tol: f64,
) -> Result<Vec<JumpCheck>> {
    c.jumps
        .iter()
        .map(|j| {
            let t = j.time;
            let res = |x: &[f64], y: &[f64]| -> Result<f64> {
                let cost = jump_cost(energy, cp, t, x, y, nodes)?.0;
                Ok(energy.value(t, y) - energy.value(t, x) + cost)
            };
            let residuals = [res(&j.left, &j.middle)?, res(&j.middle, &j.right)?, res(&j.left, &j.right)?];
            Ok(JumpCheck { index: j.index, time: t, passed: residuals.iter().all(|r| r.abs() <= tol), residuals })
        })
        .collect()
}

/// max over nodes of E(t,u) − min_z [E(t,z) + Ψ₀(z − u)] on the box lattice; stops at the
/// first node exceeding `stop_above`.
pub fn global_stability_violation<E: EnergyFunctional + ?Sized>(
    c: &BvCurve,
    energy: &E,
    gauge: &Gauge,
    bx: &SearchBox,
    stop_above: f64,
) -> Violation {
    let mut worst = Violation { value: 0.0, time: c.times[0] };
    for (t, u) in c.times.iter().zip(&c.values) {
        let e = energy.value(*t, u);
        let best = (0..bx.lattice_len())
            .map(|k| {
                let z = bx.lattice_point(k);
                energy.value(*t, &z) + gauge.eval(&sub(&z, u))
            })
            .fold(e, f64::min);
        let v = e - best;
        if v > worst.value {
            worst = Violation { value: v, time: *t };
        }
        if v > stop_above {
            break;
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolutionLabel {
    Energetic,
    #[serde(rename = "BV")]
    Bv,
    LocalOnly,
    NotASolution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionReport {
    pub label: SolutionLabel,
    pub local_stability: Violation,
    pub global_stability: Violation,
    pub energetic_balance: Violation,
    pub bv_balance: Violation,
    /// max over nodes of the one-sided Ψ₀-energy inequality defect
    pub energy_inequality: f64,
    pub note: String,
}

/// Return the strongest solution notion whose checks pass at `tol`.
pub fn classify_solution<E: EnergyFunctional + ?Sized>(
    c: &BvCurve,
    energy: &E,
    cp: &ContactPotential,
    bx: &SearchBox,
    nodes: usize,
    tol: f64,
) -> Result<SolutionReport> {
    let g = cp.gauge();
    let local_stability = local_stability_report(c, energy, g);
    let global_stability = global_stability_violation(c, energy, g, bx, tol);
    let energetic_balance = energetic_balance_residual(c, energy, g);
    let bv_balance = bv_energy_balance_residual(c, energy, cp, nodes)?;
    let d = |x: &[f64], y: &[f64]| g.eval(&sub(y, x));
    let energy_inequality = balance_series(c, energy, d, |_, x, y| Ok(d(x, y)))?
        .into_iter()
        .fold(0.0, f64::max);

    let label = if local_stability.value > tol {
        SolutionLabel::NotASolution
    } else if global_stability.value <= tol && energetic_balance.value <= tol {
        SolutionLabel::Energetic
    } else if bv_balance.value <= tol {
        SolutionLabel::Bv
    } else if energy_inequality <= tol {
        SolutionLabel::LocalOnly
    } else {
        SolutionLabel::NotASolution
    };
    let spacing: Vec<String> = (0..bx.dim()).map(|i| format!("{:e}", bx.spacing(i))).collect();
    Ok(SolutionReport {
        label,
        local_stability,
        global_stability,
        energetic_balance,
        bv_balance,
        energy_inequality,
        note: format!("global stability certified up to scan resolution (lattice spacing {})", spacing.join(", ")),
    })
}

/// Sup-distance between two curves at `samples` uniform times, skipping times within
/// `delta` of any of the given jump windows [start, end].
pub fn sup_distance_off_jumps(a: &BvCurve, b: &BvCurve, windows: &[(f64, f64)], delta: f64, samples: usize) -> f64 {
    let (t0, t1) = (a.times[0].max(b.times[0]), a.times[a.len() - 1].min(b.times[b.len() - 1]));
    (0..=samples)
        .map(|k| t0 + (t1 - t0) * k as f64 / samples as f64)
        .filter(|t| windows.iter().all(|(lo, hi)| *t < lo - delta || *t > hi + delta))
        .map(|t| crate::numeric::dist_sup(&a.value_at(t), &b.value_at(t)))
        .fold(0.0, f64::max)
}

/// Linear interpolation of raw node values (used for curves without jump structure).
pub fn interpolate_nodes(times: &[f64], values: &[Vec<f64>], t: f64) -> Vec<f64> {
    interp_table(times, values, t)
}
