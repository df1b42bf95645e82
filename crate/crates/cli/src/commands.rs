//! Subcommand implementations.

use std::fmt;

use rad_core::accounting::TradeoffFunction;
use rad_core::attacks::{ObliviousPriorAttack, OptimalAttack};
use rad_core::auditor::{audit as run_audit, AuditConfig, EpsEstimate};
use rad_core::bounds::{
    bound_closed_form, bound_epsdelta, bound_fdp, bound_gdp_composition, bound_optimal_enumerated,
    bound_perfect_reco_bb, bound_rero_eps, bound_rero_fdp, bound_uniform_bb, bound_worst_case, calibrate as run_calibrate,
    BoundSource, CalibrationSpec, ClosedFormMechanism, PriorSummary,
};
use rad_core::continuous::{nested_mc_bound, InnerSampling, NestedMcPlan};
use rad_core::domain::PriorStats;
use rad_core::estimator::{estimate, EstimationPlan};
use rad_core::mechanisms::{
    GaussianMechanism, GrrMechanism, LaplaceMechanism, LdpKind, Mechanism, OueMechanism, SsMechanism,
    ExponentialMechanism1D,
};
use rad_core::Error;

use crate::report::{Cell, Report};
use crate::setup::{parse_continuous_prior, parse_grid, Discrete, PriorArgs};
use crate::{
    AttackArgs, AttackKind, AuditArgs, BoundArgs, CalMech, CalibrateArgs, CompareArgs, CompareMech, EstimandArg,
    LdpArg, McArgs, Mech, MechArgs, OutputArgs, PriorFitArgs, SamplingArg, Status,
};

#[derive(Debug)]
pub enum Failure {
    Lib(Error),
    Io(std::io::Error),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "cannot write report: {e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type CmdResult = Result<Status, Failure>;

fn config_error(msg: impl Into<String>) -> Failure {
    Failure::Lib(Error::Config(msg.into()))
}

fn emit(report: &Report, out: &OutputArgs) -> Result<(), Failure> {
    report.emit(out.format, out.output.as_deref())?;
    Ok(())
}

fn uses_sigma(mech: Mech) -> bool {
    matches!(mech, Mech::Gaussian | Mech::GdpSgd)
}

fn mech_name(mech: Mech) -> &'static str {
    match mech {
        Mech::Grr => "grr",
        Mech::Oue => "oue",
        Mech::Ss => "ss",
        Mech::Laplace => "laplace",
        Mech::Gaussian => "gaussian",
        Mech::GdpSgd => "gdp-sgd",
    }
}

/// Parameter values to sweep: ε for ε-mechanisms, σ for Gaussian ones.
fn parameter_values(a: &BoundArgs) -> Result<Vec<f64>, Failure> {
    let sigma = uses_sigma(a.mech.mech);
    let (grid, single, want) = if sigma {
        (&a.sigma_grid, a.mech.sigma, "--sigma or --sigma-grid")
    } else {
        (&a.eps_grid, a.mech.eps, "--eps or --eps-grid")
    };
    if let Some(g) = grid {
        return Ok(parse_grid(g)?);
    }
    single.map(|v| vec![v]).ok_or_else(|| config_error(format!("{} needs {want}", mech_name(a.mech.mech))))
}

fn tradeoff(a: &MechArgs, x: f64) -> Result<TradeoffFunction, Error> {
    match a.mech {
        Mech::Gaussian => TradeoffFunction::gaussian(1.0 / x),
        Mech::GdpSgd => TradeoffFunction::gaussian((a.steps as f64).sqrt() / x),
        _ => TradeoffFunction::eps_delta(x, a.delta),
    }
}

fn mechanism_tv(a: &MechArgs, x: f64, m: usize) -> Result<f64, Error> {
    Ok(match a.mech {
        Mech::Grr => GrrMechanism::new(m, x)?.total_variation(),
        Mech::Oue => OueMechanism::new(m, x)?.total_variation(),
        Mech::Ss => SsMechanism::new(m, x)?.total_variation(),
        Mech::Laplace => LaplaceMechanism::new(1.0, x)?.with_unit_grid(m)?.total_variation(),
        Mech::Gaussian => GaussianMechanism::new(1.0, x)?.with_unit_grid(m)?.total_variation(),
        Mech::GdpSgd => tradeoff(a, x)?.total_variation(),
    })
}

fn contract(msg: String) -> Error {
    Error::Contract(msg)
}

fn require_uniform_exact(d: &Discrete, what: &str) -> Result<(), Error> {
    if !(d.prior.is_uniform() && d.threat.is_exact_match() && d.threat.aux().fiber_count() == 1) {
        return Err(contract(format!(
            "the {what} bound assumes a uniform prior, exact match and no side information"
        )));
    }
    Ok(())
}

fn require_eps_mech(a: &MechArgs, src: BoundSource) -> Result<(), Error> {
    if uses_sigma(a.mech) {
        return Err(contract(format!("the {src} bound needs an (ε, δ) mechanism, not {}", mech_name(a.mech))));
    }
    Ok(())
}

fn source_value(src: BoundSource, a: &MechArgs, x: f64, d: &Discrete, summary: &PriorSummary) -> Result<f64, Error> {
    let m = d.m();
    match src {
        BoundSource::WorstCase => Ok(bound_worst_case(mechanism_tv(a, x, m)?, &d.prior).value),
        BoundSource::Optimal => match a.mech {
            Mech::Grr => Ok(bound_optimal_enumerated(&GrrMechanism::new(m, x)?, &d.prior, &d.threat)?.value),
            Mech::Oue => Ok(bound_optimal_enumerated(&OueMechanism::new(m, x)?, &d.prior, &d.threat)?.value),
            Mech::Ss => Ok(bound_optimal_enumerated(&SsMechanism::new(m, x)?, &d.prior, &d.threat)?.value),
            other => Err(contract(format!("the optimal bound needs a finite output space; {} has none", mech_name(other)))),
        },
        BoundSource::ClosedForm => {
            let cf = match a.mech {
                Mech::Grr => ClosedFormMechanism::Grr { epsilon: x },
                Mech::Oue => ClosedFormMechanism::Oue { epsilon: x },
                Mech::Ss => ClosedFormMechanism::Ss { epsilon: x },
                Mech::Laplace => ClosedFormMechanism::Laplace { epsilon: x },
                Mech::Gaussian => ClosedFormMechanism::Gaussian { sigma: x },
                Mech::GdpSgd => return Err(Error::NoClosedForm("composed Gaussian noise; use the gdp source".into())),
            };
            Ok(bound_closed_form(cf, &d.prior, &d.threat)?.value)
        }
        BoundSource::Fdp => Ok(bound_fdp(&tradeoff(a, x)?, summary)?.value),
        BoundSource::EpsDelta => {
            require_eps_mech(a, src)?;
            Ok(bound_epsdelta(x, a.delta, summary)?.value)
        }
        BoundSource::PerfectReco => {
            require_eps_mech(a, src)?;
            Ok(bound_perfect_reco_bb(x, a.delta, &d.prior, &d.threat)?.value)
        }
        BoundSource::UniformBlackBox => {
            require_eps_mech(a, src)?;
            require_uniform_exact(d, "uniform black-box")?;
            Ok(bound_uniform_bb(x, a.delta, m).value)
        }
        BoundSource::Gdp => {
            if !uses_sigma(a.mech) {
                return Err(contract("the gdp bound needs a Gaussian mechanism".into()));
            }
            require_uniform_exact(d, "gdp")?;
            let steps = if a.mech == Mech::Gaussian { 1 } else { a.steps };
            Ok(bound_gdp_composition(x, steps, m)?.value)
        }
        BoundSource::ReroEps => {
            require_eps_mech(a, src)?;
            if a.delta != 0.0 {
                return Err(contract("the rero-eps bound needs δ = 0".into()));
            }
            Ok(bound_rero_eps(x, summary))
        }
        BoundSource::ReroFdp => Ok(bound_rero_fdp(&tradeoff(a, x)?, summary)),
    }
}

pub fn bound(a: &BoundArgs) -> CmdResult {
    let d = a.prior.build()?;
    let summary = PriorSummary::discrete(&d.prior, &d.threat)?;
    let xs = parameter_values(a)?;
    let explicit: Vec<BoundSource> = a.source.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
    let strict = !explicit.is_empty() && !a.all_applicable;
    let sources: Vec<BoundSource> = if explicit.is_empty() {
        BoundSource::ALL.into_iter().filter(|s| !s.is_rero()).collect()
    } else {
        explicit
    };
    let param = if uses_sigma(a.mech.mech) { "sigma" } else { "epsilon" };
    let mut report = Report::new("bound", vec![param, "source", "measure", "value"]);
    report.config("args", format!("{a:?}"));
    report.summary("mechanism", mech_name(a.mech.mech));
    report.summary("m", d.m());
    report.summary("prior", d.prior_label.as_str());
    report.summary("aux", a.prior.aux.as_str());
    report.summary("eta", a.prior.eta);
    report.summary("kappa_pi", summary.kappa_pi);
    report.summary("kappa_plus", summary.kappa_plus);
    report.summary("kappa_minus", summary.kappa_minus);
    let mut skipped: Vec<String> = Vec::new();
    for &x in &xs {
        for &src in &sources {
            match source_value(src, &a.mech, x, &d, &summary) {
                Ok(v) => report.row(vec![
                    x.into(),
                    src.name().into(),
                    (if src.is_rero() { "rero" } else { "rad" }).into(),
                    v.into(),
                ]),
                Err(e) if strict => return Err(e.into()),
                Err(e) => {
                    let note = format!("{src}: {e}");
                    if !skipped.contains(&note) {
                        skipped.push(note);
                    }
                }
            }
        }
    }
    if !skipped.is_empty() {
        report.summary("skipped", skipped.join("; "));
    }
    emit(&report, &a.out)?;
    Ok(Status::Ok)
}

pub fn calibrate(a: &CalibrateArgs) -> CmdResult {
    let d = a.prior.build()?;
    let m = d.m();
    let summary = PriorSummary::discrete(&d.prior, &d.threat)?;
    let uniform_exact = d.prior.is_uniform() && d.threat.is_exact_match() && d.threat.aux().fiber_count() == 1;
    let need_uniform = |what: &str| -> Result<(), Failure> {
        if uniform_exact {
            Ok(())
        } else {
            Err(Error::Contract(format!("{what} calibration assumes a uniform prior, exact match and no side information")).into())
        }
    };
    let spec = match a.mech {
        CalMech::Grr => {
            let full = d.threat.aux().fiber_count() == m && d.threat.is_exact_match();
            if !(full || uniform_exact) {
                return Err(Error::Contract(
                    "GRR calibration needs full side information, or a uniform prior with exact match".into(),
                )
                .into());
            }
            CalibrationSpec::Grr { m, kappa_pi: d.prior.kappa_pi() }
        }
        CalMech::Oue => {
            need_uniform("OUE")?;
            CalibrationSpec::Oue { m }
        }
        CalMech::Ss => {
            need_uniform("SS")?;
            CalibrationSpec::Ss { m }
        }
        CalMech::SsP => {
            need_uniform("SS")?;
            let omega = a.omega.ok_or_else(|| config_error("ss-p needs --omega"))?;
            if omega == 0 || omega >= m {
                return Err(config_error(format!("subset size {omega} must lie in 1..{m}")));
            }
            CalibrationSpec::SsInclusion { m, omega }
        }
        CalMech::Laplace => {
            need_uniform("Laplace")?;
            CalibrationSpec::Laplace { m }
        }
        CalMech::Gaussian => {
            need_uniform("Gaussian")?;
            CalibrationSpec::Gaussian { m }
        }
        CalMech::UniformBb => {
            need_uniform("uniform black-box")?;
            CalibrationSpec::UniformBlackBox { m, delta: a.delta }
        }
        CalMech::GdpSgd => {
            need_uniform("gdp-sgd")?;
            CalibrationSpec::GdpComposition { m, steps: a.steps }
        }
        CalMech::ReroEps => CalibrationSpec::ReroEps { kappa_plus: summary.kappa_plus },
    };
    let c = run_calibrate(&spec, a.risk)?;
    let mut report = Report::new("calibrate", vec!["solve_for", "parameter", "achieved", "target", "closed_form"]);
    report.config("args", format!("{a:?}"));
    report.summary("m", m);
    report.summary("supremum", spec.supremum());
    let solve = match c.solve_for {
        rad_core::bounds::SolveFor::Epsilon => "epsilon",
        rad_core::bounds::SolveFor::Sigma => "sigma",
        rad_core::bounds::SolveFor::InclusionProbability => "p",
    };
    report.row(vec![
        solve.into(),
        c.parameter.into(),
        c.achieved.into(),
        a.risk.into(),
        (if c.closed_form { "true" } else { "false" }).into(),
    ]);
    emit(&report, &a.out)?;
    Ok(Status::Ok)
}

/// Exact ReRo of the oblivious attack: per fiber, the heaviest success ball.
fn oblivious_rero(d: &Discrete) -> Option<f64> {
    let m = d.m();
    if m > 4096 {
        return None;
    }
    let pi = d.prior.weights();
    let mut total = 0.0;
    for fiber in d.threat.aux().fibers() {
        let best = (0..m)
            .map(|g| fiber.iter().filter(|&&z| d.threat.success(z, g)).map(|&z| pi[z]).sum::<f64>())
            .fold(0.0, f64::max);
        total += best;
    }
    Some(total)
}

fn run_attack<M: Mechanism>(a: &AttackArgs, d: &Discrete, mech: &M, theory: Option<f64>) -> CmdResult {
    let m = d.m();
    let mut plan = match a.trials {
        Some(j) => {
            let mut p = EstimationPlan::new(j, a.seed);
            p.trials_per_pair = a.pair_trials;
            p
        }
        None => {
            let mut p = EstimationPlan::from_budget(a.budget, m, a.seed)?;
            if a.pair_trials.is_some() {
                p.trials_per_pair = a.pair_trials;
            }
            p
        }
    };
    plan = plan.with_threads(a.threads);
    let result = match a.attack {
        AttackKind::Optimal => estimate(&plan, mech, &d.prior, &d.threat, &OptimalAttack::new(mech, &d.prior, &d.threat)?)?,
        AttackKind::Oblivious => estimate(&plan, mech, &d.prior, &d.threat, &ObliviousPriorAttack::new(&d.prior, &d.threat)?)?,
    };
    let rero_se = result.term1.variance.sqrt();
    let mut report = Report::new("attack", vec!["record", "label", "prior_weight", "successes", "trials"]);
    report.config("args", format!("{a:?}"));
    report.config("seed", a.seed);
    let (headline, headline_se) = match a.estimand {
        EstimandArg::Rad => (result.estimate, result.standard_error),
        EstimandArg::Rero => (result.rero(), rero_se),
    };
    report.summary("estimand", if a.estimand == EstimandArg::Rad { "rad" } else { "rero" });
    report.summary("estimate", headline);
    report.summary("standard_error", headline_se);
    report.summary("rad", result.estimate);
    report.summary("rad_standard_error", result.standard_error);
    report.summary("rero", result.rero());
    report.summary("rero_standard_error", rero_se);
    report.summary("challenger_success", result.term2.as_ref().map(|t| t.value));
    match a.attack {
        AttackKind::Optimal => report.summary("theory_rad", theory),
        AttackKind::Oblivious => {
            report.summary("theory_rad", 0.0);
            report.summary("theory_rero", oblivious_rero(d));
        }
    }
    report.summary("trials_per_target", plan.trials_per_target);
    report.summary("trials_per_pair", plan.pair_trials());
    report.summary("total_trials", result.total_trials);
    for (z, &s) in result.target_successes.iter().enumerate() {
        report.row(vec![
            z.into(),
            d.universe.labels()[z].as_str().into(),
            d.prior.weight(z).into(),
            s.into(),
            plan.trials_per_target.into(),
        ]);
    }
    emit(&report, &a.out)?;
    Ok(Status::Ok)
}

pub fn attack(a: &AttackArgs) -> CmdResult {
    let d = a.prior.build()?;
    let m = d.m();
    let eps = || a.mech.eps.ok_or_else(|| config_error(format!("{} needs --eps", mech_name(a.mech.mech))));
    let sigma = || a.mech.sigma.ok_or_else(|| config_error("gaussian needs --sigma"));
    let optimal = |r: Result<f64, Error>| r.ok();
    match a.mech.mech {
        Mech::Grr => {
            let mech = GrrMechanism::new(m, eps()?)?;
            let t = optimal(bound_optimal_enumerated(&mech, &d.prior, &d.threat).map(|b| b.value));
            run_attack(a, &d, &mech, t)
        }
        Mech::Oue => {
            let e = eps()?;
            let mech = OueMechanism::new(m, e)?;
            let t = optimal(bound_optimal_enumerated(&mech, &d.prior, &d.threat).map(|b| b.value))
                .or_else(|| optimal(bound_closed_form(ClosedFormMechanism::Oue { epsilon: e }, &d.prior, &d.threat).map(|b| b.value)));
            run_attack(a, &d, &mech, t)
        }
        Mech::Ss => {
            let e = eps()?;
            let mech = SsMechanism::new(m, e)?;
            let t = optimal(bound_optimal_enumerated(&mech, &d.prior, &d.threat).map(|b| b.value))
                .or_else(|| optimal(bound_closed_form(ClosedFormMechanism::Ss { epsilon: e }, &d.prior, &d.threat).map(|b| b.value)));
            run_attack(a, &d, &mech, t)
        }
        Mech::Laplace => {
            let e = eps()?;
            let mech = LaplaceMechanism::new(1.0, e)?.with_unit_grid(m)?;
            let t = optimal(bound_closed_form(ClosedFormMechanism::Laplace { epsilon: e }, &d.prior, &d.threat).map(|b| b.value));
            run_attack(a, &d, &mech, t)
        }
        Mech::Gaussian => {
            let s = sigma()?;
            let mech = GaussianMechanism::new(1.0, s)?.with_unit_grid(m)?;
            let t = optimal(bound_closed_form(ClosedFormMechanism::Gaussian { sigma: s }, &d.prior, &d.threat).map(|b| b.value));
            run_attack(a, &d, &mech, t)
        }
        Mech::GdpSgd => Err(config_error("attack simulation is not available for composed Gaussian noise")),
    }
}

fn eps_cells(e: EpsEstimate) -> (&'static str, Cell) {
    match e {
        EpsEstimate::Defined(v) => ("defined", v.into()),
        EpsEstimate::Saturated => ("saturated", Cell::Empty),
        EpsEstimate::Undefined => ("undefined", Cell::Empty),
    }
}

pub fn audit(a: &AuditArgs) -> CmdResult {
    let kind = match a.mech {
        LdpArg::Grr => LdpKind::Grr,
        LdpArg::Oue => LdpKind::Oue,
        LdpArg::Ss => LdpKind::Ss,
    };
    let mut cfg = AuditConfig::new(kind, a.eps, a.m, a.seed);
    cfg.repetitions = a.repetitions;
    cfg.budget = a.budget;
    cfg.threads = a.threads;
    let rep = run_audit(&cfg)?;
    let mut report = Report::new("audit", vec!["repetition", "gamma_hat", "standard_error", "status", "eps_hat"]);
    report.config("args", format!("{a:?}"));
    report.config("seed", a.seed);
    report.summary("mechanism", kind.to_string());
    report.summary("epsilon", a.eps);
    report.summary("m", a.m);
    report.summary("mean_eps_hat", rep.mean_eps);
    report.summary("std_eps_hat", rep.std_eps);
    report.summary("undefined", rep.undefined_count);
    report.summary("saturated", rep.saturated_count);
    report.summary("trials_per_target", rep.trials_per_target);
    report.summary("trials_per_pair", rep.trials_per_pair);
    let mut status = if rep.mean_eps.is_none() { Status::Undefined } else { Status::Ok };
    if let Some(claimed) = a.claimed_eps {
        let pass = rep.mean_eps.is_some_and(|e| (e - claimed).abs() <= a.threshold);
        report.summary("claimed_epsilon", claimed);
        report.summary("threshold", a.threshold);
        report.summary("verdict", if pass { "PASS" } else { "FAIL" });
        status = if pass { Status::Ok } else { Status::AuditFail };
    }
    for row in &rep.rows {
        let (label, value) = eps_cells(row.eps_hat);
        report.row(vec![row.repetition.into(), row.gamma_hat.into(), row.standard_error.into(), label.into(), value]);
    }
    emit(&report, &a.out)?;
    Ok(status)
}

pub fn mc(a: &McArgs) -> CmdResult {
    let prior = parse_continuous_prior(&a.prior)?;
    let sampling = match a.sampling {
        SamplingArg::PerOutput => InnerSampling::PerOutput,
        SamplingArg::SharedBatch => InnerSampling::SharedBatch,
        SamplingArg::ExactInner => InnerSampling::ExactInner,
    };
    let mut report = Report::new(
        "mc",
        vec![
            "epsilon",
            "eta",
            "N",
            "estimate",
            "ci_low",
            "ci_high",
            "ci_width",
            "std_dev",
            "density_cap",
            "kappa_plus",
            "max_candidates",
            "failure_probability",
        ],
    );
    report.config("args", format!("{a:?}"));
    report.config("seed", a.seed);
    report.summary("prior", a.prior.as_str());
    report.summary("repetitions", a.repetitions);
    let mut cell = 0u64;
    for &eps in &a.eps {
        let mech = ExponentialMechanism1D::new(eps)?;
        for &eta in &a.eta {
            for &n in &a.n {
                let mut plan = NestedMcPlan::new(n, eta, a.seed.wrapping_add(cell));
                cell += 1;
                plan.repetitions = a.repetitions;
                plan.sampling = sampling;
                plan.tolerance = a.tolerance;
                plan.threads = a.threads;
                let est = nested_mc_bound(&plan, &mech, &prior)?;
                report.row(vec![
                    eps.into(),
                    eta.into(),
                    n.into(),
                    est.estimate.into(),
                    est.ci_low.into(),
                    est.ci_high.into(),
                    est.ci_width().into(),
                    est.std_dev.into(),
                    est.density_cap.into(),
                    est.kappa_plus.into(),
                    est.max_candidates.into(),
                    est.failure_probability.into(),
                ]);
            }
        }
    }
    emit(&report, &a.out)?;
    Ok(Status::Ok)
}

pub fn compare(a: &CompareArgs) -> CmdResult {
    let m = a.m;
    if m < 2 {
        return Err(config_error("--m must be at least 2"));
    }
    let kappa = 1.0 / m as f64;
    let rad_spec = match a.mech {
        CompareMech::Grr => CalibrationSpec::Grr { m, kappa_pi: kappa },
        CompareMech::Oue => CalibrationSpec::Oue { m },
        CompareMech::Ss => CalibrationSpec::Ss { m },
        CompareMech::Laplace => CalibrationSpec::Laplace { m },
    };
    let rero_spec = CalibrationSpec::ReroEps { kappa_plus: kappa };
    let mut report = Report::new("compare", vec!["calibrated_to", "status", "epsilon", "rad_at_epsilon", "rero_at_epsilon"]);
    report.config("args", format!("{a:?}"));
    report.summary("m", m);
    report.summary("risk", a.risk);
    report.summary("prior_baseline", kappa);
    let mut any = false;
    for (name, spec) in [("rad", rad_spec), ("rero", rero_spec)] {
        match run_calibrate(&spec, a.risk) {
            Ok(c) => {
                any = true;
                let e = c.parameter;
                report.row(vec![
                    name.into(),
                    "ok".into(),
                    e.into(),
                    rad_spec.bound_at(e).into(),
                    rero_spec.bound_at(e).into(),
                ]);
            }
            Err(e) => {
                let status = match e {
                    Error::Unreachable { .. } => "unreachable",
                    _ => "below-baseline",
                };
                report.row(vec![name.into(), status.into(), Cell::Empty, Cell::Empty, Cell::Empty]);
            }
        }
    }
    emit(&report, &a.out)?;
    Ok(if any { Status::Ok } else { Status::Undefined })
}

pub fn prior_fit(a: &PriorFitArgs) -> CmdResult {
    let args = PriorArgs {
        m: None,
        prior: format!("csv:{}", a.csv.display()),
        column: a.column.clone(),
        no_header: a.no_header,
        aux: "none".into(),
        eta: 0.0,
    };
    let d = args.build()?;
    let mut report = Report::new("prior-fit", vec!["record", "label", "count", "weight"]);
    report.config("args", format!("{a:?}"));
    let counts = d.prior.counts().map(<[u64]>::to_vec).unwrap_or_default();
    report.summary("m", d.m());
    report.summary("observations", counts.iter().sum::<u64>());
    report.summary("kappa_pi", d.prior.kappa_pi());
    report.summary("max_weight", d.prior.max_weight());
    report.summary("min_weight", d.prior.min_weight());
    for z in 0..d.m() {
        report.row(vec![
            z.into(),
            d.universe.labels()[z].as_str().into(),
            counts.get(z).copied().into(),
            d.prior.weight(z).into(),
        ]);
    }
    emit(&report, &a.out)?;
    Ok(Status::Ok)
}
