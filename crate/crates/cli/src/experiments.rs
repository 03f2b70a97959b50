//! One driver per experiment tag. Each returns the results section, the
//! invariant checks and the CSV tables; numerical failures propagate as
//! [`rslab_core::Error`].

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::Value;

use rslab_core::dynamics::{SemigroupOptions, Solver};
use rslab_core::kernel::log_space;
use rslab_core::longtime::{
    absorption_run, dissipativity_check, kernel_stability_experiment, omega_limit_approx, DissipativityCertificate,
    OmegaOptions,
};
use rslab_core::spectral::{decay_check, decay_fit, resolvent_diagnostics};
use rslab_core::{
    metric_rho, picard_solve, semigroup_apply, Error, Field, HistoryFunction, KernelSpec, Nonlinearity,
    PicardOptions, RelaxationEvaluator, Result, TorusGrid,
};

use crate::config::{Experiment, Scenario, Shape};
use crate::report::{num, opt, Check, Table};

pub struct Outcome {
    pub results: Value,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    /// Named field snapshots, written when the scenario asks for them.
    pub fields: Vec<(String, Field)>,
}

fn outcome<T: Serialize>(results: &T, checks: Vec<Check>, tables: Vec<Table>) -> Result<Outcome> {
    let results = serde_json::to_value(results).map_err(|e| Error::Parameter(e.to_string()))?;
    Ok(Outcome {
        results,
        checks,
        tables,
        fields: Vec::new(),
    })
}

/// Relative slack on monotonicity of `s`, the evaluator's own accuracy.
const MONOTONE_SLACK: f64 = 2e-9;

/// Inputs shared by every driver, built once from a validated scenario.
struct Setup {
    grid: TorusGrid,
    kernel: KernelSpec,
    f: Nonlinearity,
    members: Vec<Field>,
}

impl Setup {
    fn new(sc: &Scenario) -> Result<Self> {
        let grid = sc.grid().map_err(Error::Parameter)?;
        let kernel = sc.kernel.build()?;
        let f = sc.nonlinearity.build(&grid).map_err(Error::Parameter)?;
        Ok(Self {
            grid,
            kernel,
            f,
            members: initial_members(sc, grid),
        })
    }

    fn evaluator(&self) -> Arc<RelaxationEvaluator> {
        Arc::new(RelaxationEvaluator::new(self.kernel.clone()))
    }

    fn first(&self) -> Result<&Field> {
        self.members
            .first()
            .ok_or_else(|| Error::Parameter("experiment needs at least one initial member".into()))
    }
}

/// Draws the initial ensemble; all randomness comes from one ChaCha8 stream
/// seeded by the scenario, consumed in member order.
pub fn initial_members(sc: &Scenario, grid: TorusGrid) -> Vec<Field> {
    let init = &sc.initial;
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    (0..init.members)
        .map(|i| {
            let mean = init.member_mean(i);
            match init.shape {
                Shape::Constant => Field::constant(grid, mean),
                Shape::Gaussian => {
                    let s2 = 2.0 * init.width * init.width;
                    Field::from_fn(grid, |x, y| mean + init.amplitude * (-(x * x + y * y) / s2).exp())
                }
                Shape::Random => Field::smooth_random(grid, init.modes, init.decay, mean, || {
                    init.amplitude * rng.sample::<f64, _>(StandardNormal)
                }),
            }
        })
        .collect()
}

pub fn run(sc: &Scenario) -> Result<Outcome> {
    let setup = Setup::new(sc)?;
    let mut out = match sc.experiment {
        Experiment::RelaxationTable => relaxation_table(sc, &setup),
        Experiment::Wellposedness => wellposedness(sc, &setup),
        Experiment::SemigroupLaw => semigroup_law(sc, &setup),
        Experiment::Absorption => absorption(sc, &setup),
        Experiment::KernelStability => kernel_stability(sc, &setup),
        Experiment::OmegaLimit => omega_limit(sc, &setup),
        Experiment::Diagnostics => diagnostics(sc, &setup),
    }?;
    let initial = setup.members.iter().enumerate().map(|(i, u)| (format!("initial_{i}"), u.clone()));
    out.fields.splice(0..0, initial);
    Ok(out)
}

fn sorted(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

#[derive(Serialize)]
struct RelaxationResults {
    kernel: String,
    times: Vec<f64>,
    mus: Vec<f64>,
    min_value: f64,
    max_value: f64,
}

fn relaxation_table(sc: &Scenario, setup: &Setup) -> Result<Outcome> {
    let times = sorted(sc.params.times.clone().unwrap_or_else(|| log_space(1e-2, 10.0, 50)));
    let mus = sorted(sc.params.mus.clone().unwrap_or_else(|| vec![0.0, 0.1, 1.0, 10.0, 100.0]));
    let ev = setup.evaluator();
    let mut header = vec!["t".to_string()];
    header.extend(mus.iter().map(|m| format!("mu={}", num(*m))));
    let mut table = Table {
        name: "relaxation".into(),
        header,
        rows: Vec::new(),
    };
    let mut values = Vec::with_capacity(times.len());
    for &t in &times {
        let row = ev.s_many(t, &mus)?;
        let mut cells = vec![num(t)];
        cells.extend(row.iter().map(|v| num(*v)));
        table.push(cells);
        values.push(row);
    }
    let flat = values.iter().flatten().copied();
    let (lo, hi) = flat.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = if values.iter().all(|r| r.is_empty()) { (0.0, 0.0) } else { (lo, hi) };

    let mut time_rises: f64 = 0.0;
    for w in values.windows(2) {
        for (a, b) in w[0].iter().zip(&w[1]) {
            time_rises = time_rises.max(b - a);
        }
    }
    let mut mu_rises: f64 = 0.0;
    for row in &values {
        for w in row.windows(2) {
            mu_rises = mu_rises.max(w[1] - w[0]);
        }
    }
    let mut checks = vec![
        Check::flag(
            "relaxation-in-unit-interval",
            lo >= 0.0 && hi <= 1.0,
            format!("s ranges over [{lo:.3e}, {hi:.3e}]"),
        ),
        Check::at_most(
            "relaxation-nonincreasing-in-t",
            time_rises,
            MONOTONE_SLACK,
            "largest rise of s between consecutive times",
        ),
        Check::at_most(
            "relaxation-nonincreasing-in-mu",
            mu_rises,
            MONOTONE_SLACK,
            "largest rise of s between consecutive μ",
        ),
    ];
    if matches!(setup.kernel, KernelSpec::Zero) {
        let mut gap: f64 = 0.0;
        for (t, row) in times.iter().zip(&values) {
            for (mu, s) in mus.iter().zip(row) {
                gap = gap.max((s - (-mu * t).exp()).abs());
            }
        }
        checks.push(Check::at_most(
            "heat-limit",
            gap,
            1e-8,
            "max |s(t, μ) − e^(−μt)| for the zero kernel",
        ));
    }
    let results = RelaxationResults {
        kernel: setup.kernel.describe(),
        times,
        mus,
        min_value: lo,
        max_value: hi,
    };
    outcome(&results, checks, vec![table])
}

#[derive(Serialize)]
struct MemberRun {
    iterations: usize,
    converged: bool,
    max_ratio: Option<f64>,
    sampled_lipschitz: f64,
    lipschitz_warning: bool,
    final_norm: f64,
}

#[derive(Serialize)]
struct WellposednessResults {
    lipschitz: f64,
    gamma: f64,
    horizon: f64,
    step: f64,
    members: Vec<MemberRun>,
    max_growth_ratio: f64,
    max_dependence_ratio: Option<f64>,
}

fn wellposedness(sc: &Scenario, setup: &Setup) -> Result<Outcome> {
    let l = setup
        .f
        .lipschitz()
        .ok_or_else(|| Error::Parameter("nonlinearity has no Lipschitz constant".into()))?;
    let gamma = sc.params.gamma.unwrap_or(if l > 0.0 { 2.0 * l } else { 1.0 });
    let ev = setup.evaluator();
    let mut opts = PicardOptions::new(sc.horizon(), sc.step()).gamma(gamma);
    if let Some(tol) = sc.params.tolerance {
        opts = opts.tol(tol);
    }
    let used = &setup.members[..setup.members.len().min(2)];
    if used.is_empty() {
        return Err(Error::Parameter("wellposedness needs at least one initial member".into()));
    }
    let histories: Vec<HistoryFunction> =
        used.iter().map(|u| HistoryFunction::resolvent(ev.clone(), u.clone())).collect();
    let runs = histories
        .iter()
        .map(|phi| picard_solve(&ev, phi, &setup.f, &opts))
        .collect::<Result<Vec<_>>>()?;

    let times = runs[0].trajectory.times();
    let mut header = vec!["t"];
    header.extend(["norm_0", "growth_bound_0"]);
    if runs.len() == 2 {
        header.extend(["norm_1", "growth_bound_1", "gap", "dependence_bound"]);
    }
    let mut table = Table::new("trajectory", &header);
    let mut m_phi = vec![0.0f64; runs.len()];
    let mut sup_gap: f64 = 0.0;
    let mut growth: f64 = 0.0;
    let mut dependence: f64 = 0.0;
    for (n, &t) in times.iter().enumerate() {
        let mut row = vec![num(t)];
        let phis = histories.iter().map(|h| h.eval(t)).collect::<Result<Vec<_>>>()?;
        for (k, run) in runs.iter().enumerate() {
            m_phi[k] = m_phi[k].max(phis[k].l2());
            let bound = m_phi[k] * (l * t).exp();
            let norm = run.trajectory.field(n).l2();
            if bound > 0.0 {
                growth = growth.max(norm / bound);
            } else if norm > 0.0 {
                growth = f64::INFINITY;
            }
            row.extend([num(norm), num(bound)]);
        }
        if runs.len() == 2 {
            sup_gap = sup_gap.max(phis[0].l2_dist(&phis[1])?);
            let gap = runs[0].trajectory.field(n).l2_dist(runs[1].trajectory.field(n))?;
            let bound = sup_gap * (l * t).exp();
            if bound > 0.0 {
                dependence = dependence.max(gap / bound);
            } else if gap > 0.0 {
                dependence = f64::INFINITY;
            }
            row.extend([num(gap), num(bound)]);
        }
        table.push(row);
    }

    let max_ratio = runs
        .iter()
        .flat_map(|r| r.iterations.iter().filter_map(|i| i.ratio))
        .fold(0.0, f64::max);
    let mut checks = vec![
        Check::flag(
            "picard-converged",
            runs.iter().all(|r| r.converged),
            format!("γ = {gamma}, L_f = {l}"),
        ),
        Check::at_most(
            "picard-contraction",
            max_ratio,
            1.1 * l / gamma,
            "largest Bielecki increment ratio against 1.1·L_f/γ",
        ),
        Check::at_most(
            "growth-bound",
            growth,
            1.0 + 1e-6,
            "max ‖u(t)‖ / (M_φ(t) e^(L_f t))",
        ),
        Check::flag(
            "sampled-lipschitz",
            runs.iter().all(|r| !r.lipschitz_warning),
            "difference quotients of f along the solution stay below 1.01·L_f",
        ),
    ];
    if runs.len() == 2 {
        checks.push(Check::at_most(
            "continuous-dependence",
            dependence,
            1.0 + 1e-6,
            "max ‖u − ū‖ / (sup‖φ − φ̄‖ e^(L_f t))",
        ));
    }
    let results = WellposednessResults {
        lipschitz: l,
        gamma,
        horizon: sc.horizon(),
        step: sc.step(),
        members: runs
            .iter()
            .map(|r| MemberRun {
                iterations: r.iterations.len(),
                converged: r.converged,
                max_ratio: r.iterations.iter().filter_map(|i| i.ratio).reduce(f64::max),
                sampled_lipschitz: r.sampled_lipschitz,
                lipschitz_warning: r.lipschitz_warning,
                final_norm: r.trajectory.last().l2(),
            })
            .collect(),
        max_growth_ratio: growth,
        max_dependence_ratio: (runs.len() == 2).then_some(dependence),
    };
    outcome(&results, checks, vec![table])
}

#[derive(Serialize)]
struct SemigroupResults {
    step: f64,
    n_max: usize,
    identity_gap: f64,
    max_gap: f64,
    pairs: Vec<(f64, f64, f64)>,
}

fn semigroup_law(sc: &Scenario, setup: &Setup) -> Result<Outcome> {
    let h = sc.step();
    let n_max = sc.params.n_max.unwrap_or(2);
    let splits = sorted(sc.params.split_times.clone().unwrap_or_else(|| vec![0.25, 0.5]));
    let tol = sc.params.tolerance.unwrap_or(1e-4);
    let ev = setup.evaluator();
    let phi = HistoryFunction::resolvent(ev.clone(), setup.first()?.clone());
    let mut opts = SemigroupOptions::new(h);
    opts.solver = Solver::March;
    let thetas = |end: f64| -> Vec<f64> { (0..=(end / h).round() as usize).map(|i| i as f64 * h).collect() };

    let span = thetas(n_max as f64);
    let identity = semigroup_apply(&ev, &setup.f, &phi, 0.0, &span, &opts)?;
    let direct = HistoryFunction::sampled(span.clone(), phi.eval_many(&span)?)?;
    let identity_gap = metric_rho(&identity, &direct, n_max)?.value;

    let mut table = Table::new("semigroup", &["t", "s", "rho"]);
    let mut pairs = Vec::new();
    for &t in &splits {
        for &s in &splits {
            let whole = semigroup_apply(&ev, &setup.f, &phi, t + s, &span, &opts)?;
            let inner = semigroup_apply(&ev, &setup.f, &phi, s, &thetas(t + n_max as f64), &opts)?;
            let outer = semigroup_apply(&ev, &setup.f, &inner, t, &span, &opts)?;
            let rho = metric_rho(&whole, &outer, n_max)?.value;
            table.push(vec![num(t), num(s), num(rho)]);
            pairs.push((t, s, rho));
        }
    }
    let max_gap = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
    let checks = vec![
        Check::at_most("semigroup-identity", identity_gap, 0.0, "ρ(T_0 φ, φ)"),
        Check::at_most("semigroup-law", max_gap, tol, "max ρ(T_(t+s) φ, T_t T_s φ)"),
    ];
    let results = SemigroupResults {
        step: h,
        n_max,
        identity_gap,
        max_gap,
        pairs,
    };
    outcome(&results, checks, vec![table])
}

/// Dense amplitude sweep of constants and modulated constants, used to fit
/// a certificate when none is declared.
fn certificate_samples(grid: TorusGrid) -> Vec<Field> {
    let two_pi_l = 2.0 * PI / grid.length();
    (-60..=40)
        .flat_map(|e| {
            let c = 10f64.powf(e as f64 / 20.0);
            [
                Field::constant(grid, c),
                Field::constant(grid, -c),
                Field::from_fn(grid, |x, _| c * (1.0 + 0.5 * (two_pi_l * x).cos())),
            ]
        })
        .collect()
}

fn certificate(sc: &Scenario, setup: &Setup) -> Result<Option<DissipativityCertificate>> {
    if let Some(c) = sc.nonlinearity.declared_certificate().map_err(Error::Parameter)? {
        return Ok(Some(c));
    }
    match &sc.nonlinearity.certificate {
        Some(c) => dissipativity_check(&setup.f, c.p, c.sigma, &certificate_samples(setup.grid)).map(Some),
        None => Ok(None),
    }
}

#[derive(Serialize)]
struct MemberSummary {
    index: usize,
    initial_norm: f64,
    entry_time: Option<f64>,
    stays: bool,
    monotone_outside: bool,
    energy_excess: f64,
}

#[derive(Serialize)]
struct AbsorptionResults {
    certificate: DissipativityCertificate,
    r_star: f64,
    t_r: Option<f64>,
    all_invariant: bool,
    b_r: f64,
    b_f: f64,
    k_r: f64,
    horizon: f64,
    step: f64,
    members: Vec<MemberSummary>,
}

fn absorption(sc: &Scenario, setup: &Setup) -> Result<Outcome> {
    let cert = certificate(sc, setup)?.ok_or_else(|| Error::Parameter("absorption needs a certificate".into()))?;
    let tol = sc.params.tolerance.unwrap_or(1e-2);
    let ev = setup.evaluator();
    let rep = absorption_run(&ev, &setup.f, &cert, &setup.members, sc.horizon(), sc.step())?;

    let mut header = vec!["t".to_string()];
    header.extend((0..rep.members.len()).map(|i| format!("norm_{i}")));
    let mut table = Table {
        name: "absorption".into(),
        header,
        rows: Vec::new(),
    };
    let nodes = rep.members.first().map_or(0, |m| m.norms.len());
    for n in 0..nodes {
        let mut row = vec![num(n as f64 * rep.step)];
        row.extend(rep.members.iter().map(|m| num(m.norms[n])));
        table.push(row);
    }

    let excess = rep.members.iter().map(|m| m.energy_excess).fold(0.0, f64::max);
    let checks = vec![
        Check::flag(
            "certificate-in-assumption",
            !cert.out_of_assumption,
            format!("σ = {} (σ > 2 required)", cert.sigma),
        ),
        Check::flag(
            "absorbing-ball-entry",
            rep.members.iter().all(|m| m.entry_time.is_some()),
            format!("every member enters ‖u‖_{} ≤ R* = {} by T", rep.p, num(rep.r_star)),
        ),
        Check::flag(
            "absorbing-ball-invariance",
            rep.all_invariant,
            "no member leaves the ball after entry",
        ),
        Check::flag(
            "monotone-outside-ball",
            rep.members.iter().all(|m| m.monotone_outside),
            "‖u‖_p does not increase while outside the ball",
        ),
        Check::at_most(
            "energy-inequality",
            excess,
            tol,
            "max scaled excess of d/dt ‖u‖_p^p over p(β_d − α_d ‖u‖_p^(p+σ−2))",
        ),
    ];
    let results = AbsorptionResults {
        r_star: rep.r_star,
        t_r: rep.t_r,
        all_invariant: rep.all_invariant,
        b_r: rep.b_r,
        b_f: rep.b_f,
        k_r: rep.k_r,
        horizon: rep.horizon,
        step: rep.step,
        members: rep
            .members
            .iter()
            .map(|m| MemberSummary {
                index: m.index,
                initial_norm: m.initial_norm,
                entry_time: m.entry_time,
                stays: m.stays,
                monotone_outside: m.monotone_outside,
                energy_excess: m.energy_excess,
            })
            .collect(),
        certificate: cert,
    };
    outcome(&results, checks, vec![table])
}

#[derive(Serialize)]
struct StabilityResults {
    comparison_kernel: String,
    laplace_gap: f64,
    epsilon: f64,
    gamma: f64,
    lipschitz: f64,
    solution_bound: f64,
    history_gap: f64,
    max_gap: f64,
}

fn kernel_stability(sc: &Scenario, setup: &Setup) -> Result<Outcome> {
    let other = sc
        .comparison_kernel
        .as_ref()
        .ok_or_else(|| Error::Parameter("kernel-stability needs a comparison kernel".into()))?
        .build()?;
    let ev = setup.evaluator();
    let ev_bar = RelaxationEvaluator::new(other.clone());
    let phi = HistoryFunction::resolvent(ev.clone(), setup.first()?.clone());
    let gamma = sc.params.gamma.unwrap_or(1.0);
    let rep = kernel_stability_experiment(&ev, &ev_bar, &setup.f, &phi, &phi, sc.horizon(), sc.step(), gamma)?;
    let mut table = Table::new("stability", &["t", "gap", "bound"]);
    for p in &rep.points {
        table.push(vec![num(p.t), num(p.gap), num(p.bound)]);
    }
    let worst = rep
        .points
        .iter()
        .map(|p| if p.bound > 0.0 { p.gap / p.bound } else if p.gap > 0.0 { f64::INFINITY } else { 0.0 })
        .fold(0.0, f64::max);
    let checks = vec![Check::at_most(
        "kernel-stability-bound",
        worst,
        1.0,
        "max gap / ((sup‖φ − φ̄‖ + L_f M e^(γt) ε) e^(L_f t)) over nodes",
    )];
    let results = StabilityResults {
        comparison_kernel: other.describe(),
        laplace_gap: rep.laplace_gap,
        epsilon: rep.epsilon,
        gamma: rep.gamma,
        lipschitz: rep.lipschitz,
        solution_bound: rep.solution_bound,
        history_gap: rep.history_gap,
        max_gap: rep.max_gap(),
    };
    outcome(&results, checks, vec![table])
}

#[derive(Serialize)]
struct OmegaResults {
    sample_time: f64,
    delta: f64,
    r_star: Option<f64>,
    clusters: usize,
    cluster_sizes: Vec<usize>,
    assignment: Vec<usize>,
    endpoint_norms: Vec<f64>,
    alpha: Option<f64>,
    alpha_norms: Option<Vec<f64>>,
}

fn omega_limit(sc: &Scenario, setup: &Setup) -> Result<Outcome> {
    let cert = certificate(sc, setup)?;
    let r_star = cert.as_ref().map(|c| c.r_star());
    let n_max = sc.params.n_max.unwrap_or(2);
    let sample_time = sc.params.sample_time.unwrap_or(sc.horizon());
    let mut opts = OmegaOptions::new(sc.step());
    opts.delta = sc.params.delta;
    opts.r_star = r_star;
    opts.alpha_norm = sc.params.alpha.map(|a| (a, n_max));
    let ev = setup.evaluator();
    let rep = omega_limit_approx(&ev, &setup.f, &setup.members, &[sample_time], &opts)?;

    let mut table = Table::new("omega", &["member", "cluster", "endpoint_norm", "alpha_norm"]);
    for (i, (&c, &norm)) in rep.assignment.iter().zip(&rep.endpoint_norms).enumerate() {
        let a = rep.alpha_norms.as_ref().map(|v| v[i]);
        table.push(vec![i.to_string(), c.to_string(), num(norm), opt(a)]);
    }
    let covered: usize = rep.cluster_sizes.iter().sum();
    let mut checks = vec![Check::flag(
        "cluster-partition",
        covered == setup.members.len() && rep.assignment.iter().all(|&c| c < rep.clusters()),
        format!("{} members in {} clusters of radius {}", setup.members.len(), rep.clusters(), num(rep.delta)),
    )];
    if let (Some(c), Some(r)) = (&cert, r_star) {
        if c.p == 2 {
            let worst = rep.endpoint_norms.iter().copied().fold(0.0, f64::max);
            checks.push(Check::at_most(
                "omega-limit-in-absorbing-ball",
                worst,
                r * (1.0 + 1e-9),
                "max ‖u(t_n)‖_2 against R*",
            ));
        }
        if let Some(a) = rep.max_alpha_norm() {
            checks.push(Check::at_most(
                "history-norm-in-absorbing-ball",
                a,
                2.0 * r,
                "max ‖χ‖_α of the sampled segments against 2R* ≤ R̂*",
            ));
        }
    }
    let results = OmegaResults {
        sample_time,
        delta: rep.delta,
        r_star,
        clusters: rep.clusters(),
        cluster_sizes: rep.cluster_sizes.clone(),
        assignment: rep.assignment.clone(),
        endpoint_norms: rep.endpoint_norms.clone(),
        alpha: sc.params.alpha,
        alpha_norms: rep.alpha_norms.clone(),
    };
    let mut out = outcome(&results, checks, vec![table])?;
    out.fields = rep
        .representatives
        .iter()
        .enumerate()
        .map(|(c, u)| (format!("cluster_{c}"), u.clone()))
        .collect();
    Ok(out)
}

#[derive(Serialize)]
struct Fitted {
    value: f64,
    t_window: (f64, f64),
}

#[derive(Serialize)]
struct HolderSummary {
    c1: f64,
    alpha: f64,
    t_window: (f64, f64),
    theta_window: (f64, f64),
    held_out_fraction: f64,
}

#[derive(Serialize)]
struct DecaySummary {
    c4: f64,
    rate: f64,
    p: u32,
    norm: f64,
    t_window: (f64, f64),
    radius_window: (f64, f64),
    rate_defaulted: bool,
    checked: usize,
    satisfied: usize,
}

#[derive(Serialize)]
struct DiagnosticsResults {
    mu_max: f64,
    holder: HolderSummary,
    c3: Fitted,
    c5: Fitted,
    decay: DecaySummary,
}

fn diagnostics(sc: &Scenario, setup: &Setup) -> Result<Outcome> {
    let p = &sc.params;
    let mu_max = p.mu_max.unwrap_or(1e3);
    let [t_lo, t_hi] = p.t_window.unwrap_or([0.1, 2.0]);
    let [th_lo, th_hi] = p.theta_window.unwrap_or([0.01, 1.0]);
    let [r_lo, r_hi] = sc.decay_radius_window();
    let fit_n = p.fit_points.unwrap_or(13);
    let check_n = p.check_points.unwrap_or(37);

    let ev = RelaxationEvaluator::new(setup.kernel.clone()).cached();
    let diag = resolvent_diagnostics(&ev, &log_space(t_lo, t_hi, fit_n), &log_space(th_lo, th_hi, 5), mu_max)?;

    let width = sc.initial.width;
    let bump = Field::from_fn(setup.grid, |x, y| (-0.5 * (x * x + y * y) / (width * width)).exp());
    let fit = decay_fit(&ev, &bump, &log_space(t_lo, t_hi, fit_n), &log_space(r_lo, r_hi, fit_n), 2)?;
    let (points, good) = decay_check(
        &fit,
        &ev,
        &bump,
        &log_space(t_lo, t_hi, check_n),
        &log_space(r_lo, r_hi, check_n),
    )?;

    let h = &diag.holder;
    let mut holder = Table::new("holder", &["t", "theta", "sup_diff", "bound", "held_out"]);
    for q in &h.points {
        holder.push(vec![
            num(q.t),
            num(q.theta),
            num(q.sup_diff),
            num(h.bound(q.t, q.theta)),
            u8::from(q.held_out).to_string(),
        ]);
    }
    let mut derivative = Table::new("derivative", &["t", "t_sup_ds_dt"]);
    for &(t, v) in &diag.derivative.samples {
        derivative.push(vec![num(t), num(v)]);
    }
    let mut gradient = Table::new("gradient", &["t", "scaled_sup"]);
    for &(t, v) in &diag.gradient.samples {
        gradient.push(vec![num(t), num(v)]);
    }
    let mut decay = Table::new("decay", &["t", "radius", "excess", "bound"]);
    for q in &points {
        decay.push(vec![num(q.t), num(q.radius), num(q.excess), num(fit.bound(q.t, q.radius))]);
    }

    let checks = vec![
        Check::flag(
            "holder-exponent",
            h.alpha > 0.0 && h.alpha.is_finite(),
            format!("α = {}", num(h.alpha)),
        ),
        Check::at_most(
            "holder-held-out",
            1.0 - h.held_out_fraction(),
            0.01,
            format!("{}/{} held-out points satisfy the fitted bound", h.held_out_satisfied, h.held_out_total),
        ),
        Check::flag(
            "derivative-constant",
            diag.derivative.constant > 0.0 && diag.derivative.constant.is_finite(),
            format!("C3 = {}", num(diag.derivative.constant)),
        ),
        Check::flag(
            "gradient-constant",
            diag.gradient.constant > 0.0 && diag.gradient.constant.is_finite(),
            format!("C5 = {}", num(diag.gradient.constant)),
        ),
        Check::flag(
            "decay-rate",
            fit.rate > 0.0 && !fit.rate_defaulted,
            format!("c4 = {}", num(fit.rate)),
        ),
        Check::flag(
            "decay-held-out",
            good == points.len(),
            format!("{good}/{} fresh (t, R) points satisfy the fitted bound", points.len()),
        ),
    ];
    let results = DiagnosticsResults {
        mu_max: diag.mu_max,
        holder: HolderSummary {
            c1: h.c1,
            alpha: h.alpha,
            t_window: h.t_window,
            theta_window: h.theta_window,
            held_out_fraction: h.held_out_fraction(),
        },
        c3: Fitted {
            value: diag.derivative.constant,
            t_window: diag.derivative.t_window,
        },
        c5: Fitted {
            value: diag.gradient.constant,
            t_window: diag.gradient.t_window,
        },
        decay: DecaySummary {
            c4: fit.prefactor,
            rate: fit.rate,
            p: fit.p,
            norm: fit.norm,
            t_window: fit.t_window,
            radius_window: fit.radius_window,
            rate_defaulted: fit.rate_defaulted,
            checked: points.len(),
            satisfied: good,
        },
    };
    outcome(&results, checks, vec![holder, derivative, gradient, decay])
}
