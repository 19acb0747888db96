//! One function per subcommand; each fills an [`Artifacts`] collector.

use anyhow::{bail, Context, Result};
use ris_core::analysis::{
    bv_energy_balance_residual, classify_solution, jump_conditions_check, BvCurve, JumpCheck,
    Row, SolutionReport,
};
use ris_core::param::{bv_to_param, normalization_profile, param_residuals, param_to_bv, ParamCurve, ParamReport};
use ris_core::solver::{solve_ip0, solve_ip_eps, viscous_energy_identity_residual, vv_sweep, SweepOptions};
use ris_core::transitions::{classify_transition, jump_cost, verify_optimal_transition, TransitionKind, TransitionReport};
use ris_core::{ContactClass, Energy, EnergyFunctional, Gauge};
use serde::Serialize;

use crate::config::{ConfigError, RunConfig, Scheme, Tolerances};
use crate::output::{indexed, num, Artifacts, CsvColumns, Table};

pub struct RunContext<'a> {
    pub cfg: &'a RunConfig,
    pub tol: Tolerances,
    pub threads: usize,
}

fn curve_header(d: usize, residual: bool) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(indexed("u", d));
    h.push("E".into());
    h.extend(indexed("DE", d));
    h.push("psi0star_w".into());
    if residual {
        h.push("step_residual".into());
    }
    h
}

/// Curve rows (t, u) with derived energy columns; jumps appear as repeated times.
fn curve_table(rows: &[Row], energy: &Energy, gauge: &Gauge, residuals: Option<&[f64]>) -> Table {
    let d = energy.dim();
    let mut table = Table::new(curve_header(d, residuals.is_some()));
    for (k, (t, u)) in rows.iter().enumerate() {
        let mut cells = vec![*t];
        cells.extend_from_slice(u);
        cells.push(energy.value(*t, u));
        cells.extend(energy.gradient(*t, u));
        cells.push(gauge.polar(&energy.force(*t, u)));
        if let Some(r) = residuals {
            cells.push(r[k]);
        }
        table.push_nums(cells);
    }
    table
}

fn read_curve(text: &str) -> Result<BvCurve> {
    let csv = CsvColumns::parse(text)?;
    let rows: Vec<Row> = csv.column("t")?.into_iter().zip(csv.vectors("u")?).collect();
    Ok(BvCurve::from_rows(&rows)?)
}

#[derive(Serialize)]
struct ContactSummary {
    rows: usize,
    rate_independent: usize,
    viscous: usize,
    not_contact: usize,
}

pub fn contact(ctx: &RunContext, out: &mut Artifacts) -> Result<()> {
    let cfg = ctx.cfg;
    let grid = cfg.contact.as_ref().ok_or_else(|| ConfigError::new("contact", "required by `contact`"))?;
    let cp = cfg.contact_potential()?;
    let d = cfg.space.dim;
    let mut header: Vec<String> = indexed("v", d).chain(indexed("w", d)).collect();
    header.extend(["p", "eps_lo", "eps_hi", "class"].map(String::from));
    let mut table = Table::new(header);
    let mut summary = ContactSummary { rows: 0, rate_independent: 0, viscous: 0, not_contact: 0 };
    for v in &grid.v {
        for w in &grid.w {
            let lambda = cp.lambda_set(v, w);
            let class = cp.classify(v, w, ctx.tol.membership);
            let name = match class {
                ContactClass::RateIndependent => {
                    summary.rate_independent += 1;
                    "rate_independent"
                }
                ContactClass::Viscous => {
                    summary.viscous += 1;
                    "viscous"
                }
                ContactClass::NotContact => {
                    summary.not_contact += 1;
                    "not_contact"
                }
            };
            summary.rows += 1;
            let mut cells: Vec<String> = v.iter().chain(w).map(|x| num(*x)).collect();
            cells.extend([cp.eval(v, w), lambda.lo, lambda.hi].map(num));
            cells.push(name.into());
            table.push(cells);
        }
    }
    out.add("contact.csv", table.render());
    out.add_json("report.json", &summary)
}

#[derive(Serialize)]
struct SolveReport {
    scheme: &'static str,
    eps: Option<f64>,
    tau: f64,
    steps: usize,
    max_step_residual: f64,
    fenchel_tolerance: f64,
    max_energy_estimate: f64,
    energy_identity_residual: Option<f64>,
    classification: SolutionReport,
}

pub fn solve(ctx: &RunContext, out: &mut Artifacts) -> Result<()> {
    let cfg = ctx.cfg;
    let energy = cfg.energy()?;
    let cp = cfg.contact_potential()?;
    let grid = cfg.grid()?;
    let bx = cfg.search_box()?;
    let (sol, eps) = match cfg.solve.scheme {
        Scheme::Ip0 => (solve_ip0(&energy, cp.gauge(), &grid, &cfg.initial, &bx)?, None),
        Scheme::Viscous => {
            let eps = cfg.eps()?;
            (solve_ip_eps(&energy, cp.psi(), eps, &grid, &cfg.initial)?, Some(eps))
        }
    };
    let max_step_residual = sol.step_residuals.iter().copied().fold(0.0, f64::max);
    if max_step_residual > ctx.tol.fenchel {
        bail!(ris_core::Error::Verification(format!(
            "max step residual {max_step_residual:e} exceeds the fenchel tolerance {:e}",
            ctx.tol.fenchel
        )));
    }
    let energy_identity_residual = match eps {
        Some(e) => Some(viscous_energy_identity_residual(&sol.curve, &energy, cp.psi(), e)?),
        None => None,
    };
    let classification = classify_solution(&sol.curve, &energy, &cp, &bx, cfg.analysis.nodes, ctx.tol.balance)?;
    let rows = sol.curve.to_rows();
    out.add("curve.csv", curve_table(&rows, &energy, cp.gauge(), Some(&sol.step_residuals)).render());
    out.add_json(
        "report.json",
        &SolveReport {
            scheme: if eps.is_some() { "viscous" } else { "ip0" },
            eps,
            tau: cfg.grid.tau,
            steps: sol.curve.len() - 1,
            max_step_residual,
            fenchel_tolerance: ctx.tol.fenchel,
            max_energy_estimate: sol.energy_residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            energy_identity_residual,
            classification,
        },
    )
}

#[derive(Serialize)]
struct LevelSummary {
    k: usize,
    eps: f64,
    tau: f64,
    jumps: Vec<ris_core::solver::JumpSummary>,
}

#[derive(Serialize)]
struct LimitJump {
    time: f64,
    left: Vec<f64>,
    right: Vec<f64>,
    cost: Option<f64>,
    kind: Option<TransitionKind>,
    transition: Option<TransitionReport>,
}

#[derive(Serialize)]
struct SweepSummary {
    levels: Vec<LevelSummary>,
    distances: Vec<f64>,
    warning: Option<String>,
    limit_jumps: Vec<LimitJump>,
    jump_conditions: Vec<JumpCheck>,
    bv_balance: f64,
}

pub fn sweep(ctx: &RunContext, out: &mut Artifacts) -> Result<()> {
    let cfg = ctx.cfg;
    let energy = cfg.energy()?;
    let cp = cfg.contact_potential()?;
    let schedule = cfg.schedule()?;
    let opts = SweepOptions { threads: ctx.threads, ..SweepOptions::default() };
    let report = vv_sweep(&energy, &cp, &schedule, cfg.grid.horizon, &cfg.initial, &opts)?;
    let d = energy.dim();

    for level in &report.levels {
        let rows = level.solution.curve.to_rows();
        let table = curve_table(&rows, &energy, cp.gauge(), Some(&level.solution.step_residuals));
        out.add(format!("level_{:02}.csv", level.k), table.render());
    }
    let limit = &report.limit;
    out.add("limit.csv", curve_table(&limit.to_rows(), &energy, cp.gauge(), None).render());

    let mut jumps = Table::new(
        ["t".to_string()].into_iter().chain(indexed("u_minus", d)).chain(indexed("u_plus", d)).collect(),
    );
    let mut limit_jumps = Vec::new();
    for j in &limit.jumps {
        jumps.push_nums(std::iter::once(j.time).chain(j.left.iter().copied()).chain(j.right.iter().copied()));
        let (cost, kind, transition) = match &j.path {
            Some(p) => (
                Some(p.cost),
                Some(classify_transition(p, &energy, &cp, ctx.tol.jump).kind),
                Some(verify_optimal_transition(p, &energy, &cp, ctx.tol.jump)),
            ),
            None => (None, None, None),
        };
        limit_jumps.push(LimitJump { time: j.time, left: j.left.clone(), right: j.right.clone(), cost, kind, transition });
    }
    out.add("jumps.csv", jumps.render());

    let nodes = cfg.analysis.nodes;
    let summary = SweepSummary {
        levels: report
            .levels
            .iter()
            .map(|l| LevelSummary { k: l.k, eps: l.eps, tau: l.tau, jumps: l.jumps.clone() })
            .collect(),
        distances: report.distances.clone(),
        warning: report.warning.clone(),
        limit_jumps,
        jump_conditions: jump_conditions_check(limit, &energy, &cp, nodes, ctx.tol.jump)?,
        bv_balance: bv_energy_balance_residual(limit, &energy, &cp, nodes)?.value,
    };
    out.add_json("report.json", &summary)
}

#[derive(Serialize)]
struct JumpReport {
    t: f64,
    cost: f64,
    kind: TransitionKind,
    verification: TransitionReport,
}

pub fn jump(ctx: &RunContext, out: &mut Artifacts) -> Result<()> {
    let cfg = ctx.cfg;
    let spec = cfg.jump.as_ref().ok_or_else(|| ConfigError::new("jump", "required by `jump`"))?;
    let energy = cfg.energy()?;
    let cp = cfg.contact_potential()?;
    let (cost, path) = jump_cost(&energy, &cp, spec.t, &spec.u0, &spec.u1, spec.nodes)?;
    let path = path.reparametrize_constant_speed(&energy, &cp);
    let class = classify_transition(&path, &energy, &cp, ctx.tol.jump);
    let d = energy.dim();

    let mut header = vec!["r".to_string()];
    header.extend(indexed("theta", d));
    header.extend(indexed("w", d));
    header.extend(["label", "segment_cost"].map(String::from));
    let mut table = Table::new(header);
    for k in 0..path.theta.len() {
        let mut cells: Vec<String> = std::iter::once(path.r[k])
            .chain(path.theta[k].iter().copied())
            .chain(path.w[k].iter().copied())
            .map(num)
            .collect();
        // segment k joins nodes k and k+1; the final node carries no segment
        match class.labels.get(k) {
            Some(l) => {
                cells.push(format!("{l:?}").to_lowercase());
                cells.push(num(path.segment_costs[k]));
            }
            None => cells.extend([String::new(), String::new()]),
        }
        table.push(cells);
    }
    out.add("path.csv", table.render());
    let verification = verify_optimal_transition(&path, &energy, &cp, ctx.tol.jump);
    out.add_json("report.json", &JumpReport { t: spec.t, cost, kind: class.kind, verification })
}

#[derive(Serialize)]
struct Located {
    check: &'static str,
    time: f64,
    value: f64,
}

#[derive(Serialize)]
struct VerifyReport {
    label: ris_core::analysis::SolutionLabel,
    residuals: SolutionReport,
    jumps: Vec<JumpCheck>,
    violations: Vec<Located>,
}

pub fn verify(ctx: &RunContext, curve: &str, out: &mut Artifacts) -> Result<()> {
    let cfg = ctx.cfg;
    let c = read_curve(curve).context("reading the curve")?;
    let energy = cfg.energy()?;
    let cp = cfg.contact_potential()?;
    let bx = cfg.search_box()?;
    let nodes = cfg.analysis.nodes;
    let tol = ctx.tol.balance;
    let report = classify_solution(&c, &energy, &cp, &bx, nodes, tol)?;
    let jumps = jump_conditions_check(&c, &energy, &cp, nodes, ctx.tol.jump)?;
    let mut violations: Vec<Located> = [
        ("local_stability", report.local_stability),
        ("global_stability", report.global_stability),
        ("energetic_balance", report.energetic_balance),
        ("bv_balance", report.bv_balance),
    ]
    .into_iter()
    .filter(|(_, v)| v.value > tol)
    .map(|(check, v)| Located { check, time: v.time, value: v.value })
    .collect();
    violations.extend(jumps.iter().filter(|j| !j.passed).map(|j| Located {
        check: "jump_conditions",
        time: j.time,
        value: j.residuals.iter().copied().fold(0.0, f64::max),
    }));
    out.add_json("report.json", &VerifyReport { label: report.label, residuals: report, jumps, violations })
}

#[derive(Serialize)]
struct ParamSummary {
    direction: &'static str,
    nodes: usize,
    length: f64,
    nondegenerate: bool,
    surjective: bool,
    normalized: bool,
    residuals: ParamReport,
}

fn param_table(pc: &ParamCurve, energy: &Energy, cp: &ris_core::ContactPotential) -> Table {
    let d = energy.dim();
    let mut header = vec!["s".to_string(), "t".to_string()];
    header.extend(indexed("u", d));
    header.extend(["tdot", "norm_defect"].map(String::from));
    let mut table = Table::new(header);
    let defects = normalization_profile(pc, energy, cp);
    for k in 0..pc.len() {
        // node quantities are those of the following segment (the last node repeats the previous one)
        let seg = k.min(pc.len() - 2);
        let mut cells = vec![pc.s[k], pc.t[k]];
        cells.extend_from_slice(&pc.u[k]);
        cells.extend([pc.tdot(seg), defects[seg]]);
        table.push_nums(cells);
    }
    table
}

fn summary(direction: &'static str, pc: &ParamCurve, report: ParamReport) -> ParamSummary {
    ParamSummary {
        direction,
        nodes: pc.len(),
        length: pc.length(),
        nondegenerate: pc.nondegenerate,
        surjective: pc.surjective,
        normalized: pc.normalized,
        residuals: report,
    }
}

pub fn bv_to_param_cmd(ctx: &RunContext, curve: &str, out: &mut Artifacts) -> Result<()> {
    let cfg = ctx.cfg;
    let mut c = read_curve(curve).context("reading the curve")?;
    let energy = cfg.energy()?;
    let cp = cfg.contact_potential()?;
    // CSV curves carry no transition paths: recompute optimal ones
    for j in c.jumps.iter_mut() {
        let (_, path) = jump_cost(&energy, &cp, j.time, &j.left, &j.right, cfg.analysis.nodes)?;
        j.path = Some(path);
    }
    let pc = bv_to_param(&c, &energy, &cp)?;
    out.add("param.csv", param_table(&pc, &energy, &cp).render());
    let report = param_residuals(&pc, &energy, &cp, ctx.tol.jump);
    out.add_json("report.json", &summary("bv-to-param", &pc, report))
}

pub fn param_to_bv_cmd(ctx: &RunContext, curve: &str, out: &mut Artifacts) -> Result<()> {
    let cfg = ctx.cfg;
    let csv = CsvColumns::parse(curve).context("reading the parametrized curve")?;
    let energy = cfg.energy()?;
    let cp = cfg.contact_potential()?;
    let pc = ParamCurve::from_nodes(csv.column("s")?, csv.column("t")?, csv.vectors("u")?, &energy, &cp)?;
    let c = param_to_bv(&pc, &energy, &cp)?;
    out.add("curve.csv", curve_table(&c.to_rows(), &energy, cp.gauge(), None).render());
    let report = param_residuals(&pc, &energy, &cp, ctx.tol.jump);
    out.add_json("report.json", &summary("param-to-bv", &pc, report))
}
