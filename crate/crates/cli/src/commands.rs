use std::ops::RangeInclusive;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use qsm_core::entropy::{lambda_tau, mean_entropy, subadditivity_check};
use qsm_core::model::{check_assumption, ChainModel, LocalObservable};
use qsm_core::pressure::{gibbs_lower_bound, pressure_limit, variational_inequality};
use qsm_core::states::{FinitelyCorrelatedState, GibbsBlockState, ProductState, StateModel};
use qsm_core::typicality::{
    lower_deviation, lower_deviation_chain, upper_deviation_argument, verify_typicality,
};

use crate::config::{HermitianInput, LoadedConfig, StateKind};
use crate::error::CliError;
use crate::output::Report;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Entropy,
    Typicality,
    Deviation,
    Pressure,
    Variational,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Entropy => "entropy",
            Self::Typicality => "typicality",
            Self::Deviation => "deviation",
            Self::Pressure => "pressure",
            Self::Variational => "variational",
            Self::Validate => "validate",
        }
    }
}

pub struct NamedState {
    pub id: String,
    pub state: Box<dyn StateModel>,
}

pub struct NamedObservable {
    pub id: String,
    pub observable: LocalObservable,
}

/// Model, states and observables built from a validated config.
pub struct Context<'a> {
    pub cfg: &'a LoadedConfig,
    pub model: ChainModel,
    pub observables: Vec<NamedObservable>,
    pub states: Vec<NamedState>,
    pub seed: u64,
}

fn observable(model: &ChainModel, op: &HermitianInput) -> qsm_core::Result<LocalObservable> {
    match op {
        HermitianInput::Diagonal(v) => LocalObservable::diagonal(model, v),
        HermitianInput::Dense(m) => {
            let entries: Vec<Complex64> = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect();
            LocalObservable::dense(model, m.nrows(), &entries)
        }
    }
}

impl<'a> Context<'a> {
    pub fn build(cfg: &'a LoadedConfig, seed: u64) -> Result<Self, CliError> {
        let mc = &cfg.config.model;
        let model = ChainModel::with_cap(mc.d, mc.w, mc.cap).map_err(|e| cfg.error_at("model", e))?;
        let mut observables = Vec::new();
        for o in &cfg.config.observables {
            let a = observable(&model, &o.operator).map_err(|e| cfg.error_at(&o.id, format!("observable '{}': {e}", o.id)))?;
            observables.push(NamedObservable { id: o.id.clone(), observable: a });
        }
        let mut states = Vec::new();
        for s in &cfg.config.states {
            let built: qsm_core::Result<Box<dyn StateModel>> = match &s.kind {
                StateKind::Product { phi } => ProductState::new(phi.to_matrix()).map(|p| Box::new(p) as _),
                StateKind::Markov { transition } => FinitelyCorrelatedState::from_markov(transition).map(|p| Box::new(p) as _),
                StateKind::Fcs { kraus } => FinitelyCorrelatedState::new(kraus.clone()).map(|p| Box::new(p) as _),
                StateKind::GibbsBlock { m, observable } => {
                    let a = &observables.iter().find(|o| &o.id == observable).expect("checked at load").observable;
                    GibbsBlockState::new(&model, *m, a).map(|p| Box::new(p) as _)
                }
            };
            let state = built.map_err(|e| cfg.error_at(&s.id, format!("state '{}': {e}", s.id)))?;
            if state.site_dim() != model.site_dim() {
                return Err(cfg.error_at(
                    &s.id,
                    format!("state '{}' has site dimension {}, model has d = {}", s.id, state.site_dim(), model.site_dim()),
                ));
            }
            states.push(NamedState { id: s.id.clone(), state });
        }
        Ok(Self { cfg, model, observables, states, seed })
    }

    /// `params.n_range`, defaulting to `1..=n_max`; fails with a capacity
    /// error naming the first infeasible `n`.
    pub fn n_range(&self) -> Result<RangeInclusive<usize>, CliError> {
        let (lo, hi) = self.cfg.config.params.n_range.unwrap_or((1, self.model.n_max()));
        self.check_volume(hi)?;
        Ok(lo..=hi)
    }

    fn entropy_range(&self) -> Result<RangeInclusive<usize>, CliError> {
        let (lo, hi) = self.cfg.config.params.entropy_range.unwrap_or((1, self.model.n_max()));
        self.check_volume(hi)?;
        Ok(lo..=hi)
    }

    fn check_volume(&self, n: usize) -> Result<(), CliError> {
        if n > self.model.n_max() {
            let dim = (self.model.site_dim() as f64).powi(self.model.sites(n) as i32);
            return Err(CliError::Capacity(format!(
                "n = {n} exceeds the capacity: dim A_{n} = {dim} > cap {} (n_max = {})",
                self.model.dimension_cap(),
                self.model.n_max()
            )));
        }
        Ok(())
    }

    fn report(&self, command: Command) -> Report {
        Report::new(command.name(), &self.cfg.hash, self.seed)
    }

    fn tol(&self) -> f64 {
        self.cfg.config.params.tolerance
    }
}

pub fn execute(command: Command, ctx: &Context) -> Result<Report, CliError> {
    match command {
        Command::Entropy => entropy(ctx),
        Command::Typicality => typicality(ctx),
        Command::Deviation => deviation(ctx),
        Command::Pressure => pressure(ctx),
        Command::Variational => variational(ctx),
        Command::Validate => validate(ctx),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.6}"))
}

#[derive(Serialize)]
struct EntropyRowOut<'a> {
    state: &'a str,
    n: usize,
    entropy: f64,
    density: f64,
    increment: Option<f64>,
    log_dim: f64,
}

#[derive(Serialize)]
struct EntropySummary<'a> {
    state: &'a str,
    stride: usize,
    raw: f64,
    increment: Option<f64>,
    endpoint_fit: Option<f64>,
    method: &'static str,
    limit: f64,
    lambda_tau: f64,
}

#[derive(Serialize)]
struct SubadditivityOut<'a> {
    state: &'a str,
    m: usize,
    n: usize,
    blocks: usize,
    lhs: f64,
    rhs: f64,
    slack: f64,
}

fn entropy(ctx: &Context) -> Result<Report, CliError> {
    let range = ctx.n_range()?;
    let model = &ctx.model;
    let mut report = ctx.report(Command::Entropy);
    let lt = lambda_tau(model, range.clone())?;
    let lambda = model.lambda_tau();
    report.lines.push(format!("lambda_tau = {:.12} (max residual {:.2e})", lt.limit, lt.max_residual()));
    report.lines.push(format!("{:<16} {:>12} {:>12} {:>12} {:>12}  method", "state", "limit", "raw", "increment", "fit"));
    let mut rows = Vec::new();
    let mut sub = Vec::new();
    for ns in &ctx.states {
        let est = mean_entropy(ns.state.as_ref(), model, range.clone())?;
        for r in &est.rows {
            let log_dim = model.sites(r.n) as f64 * lambda;
            if r.entropy > log_dim + ctx.tol() {
                report.violations.push(format!("{}: S(A_{}) = {} exceeds log dim = {log_dim}", ns.id, r.n, r.entropy));
            }
            rows.push(EntropyRowOut { state: &ns.id, n: r.n, entropy: r.entropy, density: r.density, increment: r.increment, log_dim });
        }
        if est.limit > lambda + ctx.tol() {
            report.violations.push(format!("{}: mean entropy {} exceeds lambda_tau", ns.id, est.limit));
        }
        report.lines.push(format!(
            "{:<16} {:>12.8} {:>12.8} {:>12} {:>12}  {}",
            ns.id,
            est.limit,
            est.raw,
            opt(est.increment),
            opt(est.endpoint_fit),
            est.method.tag()
        ));
        report.push_summary(&EntropySummary {
            state: &ns.id,
            stride: est.stride,
            raw: est.raw,
            increment: est.increment,
            endpoint_fit: est.endpoint_fit,
            method: est.method.tag(),
            limit: est.limit,
            lambda_tau: lt.limit,
        });
        let n = *range.end();
        for &m in &ctx.cfg.config.params.m {
            if m > n {
                continue;
            }
            let rec = subadditivity_check(ns.state.as_ref(), model, m, n)?;
            if rec.slack < -ctx.tol() {
                report.violations.push(format!("{}: subadditivity slack {} at m = {m}, n = {n}", ns.id, rec.slack));
            }
            sub.push(SubadditivityOut { state: &ns.id, m, n, blocks: rec.blocks, lhs: rec.lhs, rhs: rec.rhs, slack: rec.slack });
        }
    }
    report.push_table("sweep", &rows);
    report.push_table("subadditivity", &sub);
    Ok(report)
}

#[derive(Serialize)]
struct TypicalityRowOut<'a> {
    state: &'a str,
    n: usize,
    omega_pn: f64,
    rank: usize,
    lower_bound: f64,
    upper_bound: f64,
    eig_min: Option<f64>,
    eig_max: Option<f64>,
    eig_lower_bound: f64,
    eig_upper_bound: f64,
    flag_i: bool,
    flag_ii: bool,
    flag_iii: bool,
    finite_s: f64,
    omega_pn_finite: f64,
    rank_finite: usize,
}

#[derive(Serialize)]
struct TypicalitySummary<'a> {
    state: &'a str,
    entropy: f64,
    delta: f64,
    ergodic: bool,
    gap: f64,
    ii_violations: usize,
    iii_from: Option<usize>,
    warning: Option<String>,
}

fn typicality(ctx: &Context) -> Result<Report, CliError> {
    let range = ctx.n_range()?;
    let params = &ctx.cfg.config.params;
    let mut report = ctx.report(Command::Typicality);
    report.lines.push(format!("{:<16} {:>10} {:>10} {:>10} {:>8}", "state", "s", "omega(p_N)", "(ii) fails", "(iii) from"));
    let mut rows = Vec::new();
    for ns in &ctx.states {
        let rep = verify_typicality(ns.state.as_ref(), &ctx.model, params.delta, range.clone(), params.entropy)?;
        for r in &rep.rows {
            rows.push(TypicalityRowOut {
                state: &ns.id,
                n: r.n,
                omega_pn: r.omega_pn,
                rank: r.rank,
                lower_bound: r.lower_bound,
                upper_bound: r.upper_bound,
                eig_min: r.eig_min,
                eig_max: r.eig_max,
                eig_lower_bound: r.eig_lower_bound,
                eig_upper_bound: r.eig_upper_bound,
                flag_i: r.flags.i,
                flag_ii: r.flags.ii,
                flag_iii: r.flags.iii,
                finite_s: r.finite_s,
                omega_pn_finite: r.omega_pn_finite,
                rank_finite: r.rank_finite,
            });
        }
        let fails = rep.ii_violations();
        if fails > 0 {
            report.violations.push(format!("{}: eigenvalue bounds on ran p_n fail at {fails} volumes", ns.id));
        }
        if let Some(w) = &rep.warning {
            report.warnings.push(w.clone());
        }
        report.lines.push(format!(
            "{:<16} {:>10.6} {:>10.6} {:>10} {:>8}",
            ns.id,
            rep.entropy,
            rep.rows.last().map_or(f64::NAN, |r| r.omega_pn),
            fails,
            rep.iii_from.map_or_else(|| "-".into(), |n| n.to_string())
        ));
        report.push_summary(&TypicalitySummary {
            state: &ns.id,
            entropy: rep.entropy,
            delta: rep.delta,
            ergodic: rep.ergodicity.ergodic,
            gap: rep.ergodicity.gap,
            ii_violations: fails,
            iii_from: rep.iii_from,
            warning: rep.warning.clone(),
        });
    }
    report.push_table("rows", &rows);
    Ok(report)
}

#[derive(Serialize)]
struct UpperOut<'a> {
    state: &'a str,
    n: usize,
    q_minus: f64,
    q_plus: f64,
    nc: f64,
    nc_lower: f64,
    omega_r: f64,
    q_plus_bound: f64,
    limit_bound: f64,
    holds: bool,
}

#[derive(Serialize)]
struct LowerOut<'a> {
    state: &'a str,
    n: usize,
    t: f64,
    lower_deviation: f64,
}

#[derive(Serialize)]
struct ChainOut<'a> {
    state: &'a str,
    observable: &'a str,
    n: usize,
    t: f64,
    lower_deviation: f64,
    omega_a: f64,
    omega_f: f64,
    tau_f: f64,
    omega_q: f64,
    first_term: f64,
    second_term: f64,
    bound: f64,
    rk_lhs: f64,
    rk_rhs: f64,
    holds: bool,
}

#[derive(Serialize)]
struct DeviationSummary<'a> {
    state: &'a str,
    entropy: f64,
    t: f64,
    lower_first: f64,
    lower_last: f64,
    lower_decreasing: bool,
    nc_first: f64,
    nc_last: f64,
}

fn deviation(ctx: &Context) -> Result<Report, CliError> {
    let range = ctx.n_range()?;
    let params = &ctx.cfg.config.params;
    let model = &ctx.model;
    let lambda = model.lambda_tau();
    let ns_list: Vec<usize> = range.clone().collect();
    let mut report = ctx.report(Command::Deviation);
    report.lines.push(format!("{:<16} {:>10} {:>10} {:>12} {:>12}", "state", "s", "t", "lower(n_lo)", "lower(n_hi)"));
    let (mut upper, mut lower, mut chains) = (Vec::new(), Vec::new(), Vec::new());
    for ns in &ctx.states {
        let state = ns.state.as_ref();
        let s = match params.entropy {
            Some(s) => s,
            None => mean_entropy(state, model, 1..=*range.end())?.limit,
        };
        let t = params.t.unwrap_or(lambda - s - params.delta);
        let ups = ns_list
            .par_iter()
            .map(|&n| upper_deviation_argument(state, model, s, params.delta, params.delta_prime, n))
            .collect::<qsm_core::Result<Vec<_>>>()?;
        let lows =
            ns_list.par_iter().map(|&n| lower_deviation(state, model, t, n)).collect::<qsm_core::Result<Vec<_>>>()?;
        for u in &ups {
            if !u.chain_holds() {
                report.violations.push(format!("{}: upper-deviation chain fails at n = {}", ns.id, u.n));
            }
            upper.push(UpperOut {
                state: &ns.id,
                n: u.n,
                q_minus: u.q_minus,
                q_plus: u.q_plus,
                nc: u.nc,
                nc_lower: u.nc_lower,
                omega_r: u.omega_r,
                q_plus_bound: u.q_plus_bound,
                limit_bound: u.limit_bound,
                holds: u.chain_holds(),
            });
        }
        for (&n, &v) in ns_list.iter().zip(&lows) {
            lower.push(LowerOut { state: &ns.id, n, t, lower_deviation: v });
        }
        for no in &ctx.observables {
            let a = &no.observable;
            let feasible: Vec<usize> = ns_list.iter().copied().filter(|&n| n >= a.locality()).collect();
            let recs = feasible
                .par_iter()
                .map(|&n| lower_deviation_chain(state, model, a, t, params.delta, n))
                .collect::<qsm_core::Result<Vec<_>>>()?;
            for c in recs {
                if !c.holds() {
                    report.violations.push(format!("{}/{}: lower-deviation chain fails at n = {}", ns.id, no.id, c.n));
                }
                chains.push(ChainOut {
                    state: &ns.id,
                    observable: &no.id,
                    n: c.n,
                    t,
                    lower_deviation: c.lower_deviation,
                    omega_a: c.omega_a,
                    omega_f: c.omega_f,
                    tau_f: c.tau_f,
                    omega_q: c.omega_q,
                    first_term: c.first_term,
                    second_term: c.second_term,
                    bound: c.bound(),
                    rk_lhs: c.rk_lhs,
                    rk_rhs: c.rk_rhs,
                    holds: c.holds(),
                });
            }
        }
        let (first, last) = (lows[0], *lows.last().expect("non-empty range"));
        report.lines.push(format!("{:<16} {:>10.6} {:>10.6} {:>12.4e} {:>12.4e}", ns.id, s, t, first, last));
        report.push_summary(&DeviationSummary {
            state: &ns.id,
            entropy: s,
            t,
            lower_first: first,
            lower_last: last,
            lower_decreasing: last < first,
            nc_first: ups[0].nc,
            nc_last: ups.last().expect("non-empty range").nc,
        });
    }
    report.push_table("upper", &upper);
    report.push_table("lower", &lower);
    report.push_table("chain", &chains);
    Ok(report)
}

#[derive(Serialize)]
struct PressureRowOut<'a> {
    observable: &'a str,
    n: usize,
    bulk: f64,
    full: Option<f64>,
    oracle_gap: Option<f64>,
}

#[derive(Serialize)]
struct PressureSummary<'a> {
    observable: &'a str,
    locality: usize,
    limit: f64,
    oracle: Option<f64>,
    oracle_gap: Option<f64>,
    fitted_c: Option<f64>,
    max_c: Option<f64>,
    gap_decreasing: Option<bool>,
}

fn pressure_range(ctx: &Context, a: &LocalObservable) -> Result<RangeInclusive<usize>, CliError> {
    let r = ctx.n_range()?;
    Ok((*r.start()).max(a.locality())..=*r.end())
}

fn pressure(ctx: &Context) -> Result<Report, CliError> {
    let mut report = ctx.report(Command::Pressure);
    report.lines.push(format!("{:<16} {:>12} {:>12} {:>12}  gap shrinking", "observable", "limit", "oracle", "gap"));
    let mut rows = Vec::new();
    for no in &ctx.observables {
        let rep = pressure_limit(&ctx.model, &no.observable, pressure_range(ctx, &no.observable)?)?;
        for r in &rep.rows {
            rows.push(PressureRowOut { observable: &no.id, n: r.n, bulk: r.bulk, full: r.full, oracle_gap: r.oracle_gap });
        }
        report.lines.push(format!(
            "{:<16} {:>12.8} {:>12} {:>12}  {}",
            no.id,
            rep.limit,
            opt(rep.oracle),
            rep.oracle_gap.map_or_else(|| "-".into(), |g| format!("{g:.2e}")),
            rep.gap_decreasing.map_or_else(|| "-".into(), |b| b.to_string())
        ));
        report.push_summary(&PressureSummary {
            observable: &no.id,
            locality: no.observable.locality(),
            limit: rep.limit,
            oracle: rep.oracle,
            oracle_gap: rep.oracle_gap,
            fitted_c: rep.fitted_c,
            max_c: rep.max_c,
            gap_decreasing: rep.gap_decreasing,
        });
    }
    report.push_table("sweep", &rows);
    Ok(report)
}

#[derive(Serialize)]
struct VariationalOut<'a> {
    observable: &'a str,
    candidate: String,
    mean_entropy: f64,
    expectation: f64,
    gap: f64,
}

#[derive(Serialize)]
struct GibbsBoundOut<'a> {
    observable: &'a str,
    m: usize,
    period: usize,
    entropy_closed_form: f64,
    entropy_direct: f64,
    cross_check: f64,
    psi_a: f64,
    pressure: f64,
    penalty: f64,
    rhs: f64,
    slack: f64,
}

#[derive(Serialize)]
struct VariationalSummary<'a> {
    observable: &'a str,
    pressure: f64,
    pressure_source: &'static str,
    best_candidate: String,
    best_gap: f64,
    candidates: usize,
    sandwich_upper: Option<f64>,
}

/// `diag(p, (1−p)/(d−1), …)` for `p` on a midpoint grid of `(0, 1)`.
pub fn product_grid(d: usize, points: usize) -> Vec<(String, ProductState)> {
    (0..points)
        .map(|i| {
            let p = (i as f64 + 0.5) / points as f64;
            let mut diag = vec![(1.0 - p) / (d - 1) as f64; d];
            diag[0] = p;
            (format!("grid(p={p:.4})"), ProductState::diagonal(&diag).expect("probability vector"))
        })
        .collect()
}

/// Product of single-site Gibbs densities `e^{−a}/Tr e^{−a}` for a
/// one-site observable on a `w = 1` chain.
pub fn product_gibbs(model: &ChainModel, a: &LocalObservable) -> Option<ProductState> {
    if model.window_width() != 1 || a.locality() != 1 {
        return None;
    }
    let g = qsm_core::algebra::matrix_exp(&a.element().scale(-1.0));
    let g = g.scale(1.0 / g.trace());
    let m: DMatrix<Complex64> = g.block(0).to_dense();
    ProductState::new(m).ok()
}

fn variational(ctx: &Context) -> Result<Report, CliError> {
    let model = &ctx.model;
    let params = &ctx.cfg.config.params;
    let entropy_range = ctx.entropy_range()?;
    let grid = product_grid(model.site_dim(), params.grid);
    let mut report = ctx.report(Command::Variational);
    report.lines.push(format!("{:<16} {:>12} {:>10} {:>12}  best candidate", "observable", "P(a)", "source", "min gap"));
    let (mut rows, mut bounds) = (Vec::new(), Vec::new());
    for no in &ctx.observables {
        let a = &no.observable;
        let pr = pressure_limit(model, a, pressure_range(ctx, a)?)?;
        let (p, source) = match pr.oracle {
            Some(p) => (p, "oracle"),
            None => (pr.limit, "extrapolated"),
        };
        let gibbs_product = product_gibbs(model, a);
        let gibbs_blocks: Vec<(usize, GibbsBlockState)> = params
            .m
            .iter()
            .filter(|&&m| m >= a.locality() && m + model.window_width() < model.n_max())
            .map(|&m| GibbsBlockState::new(model, m, a).map(|g| (m, g)))
            .collect::<qsm_core::Result<_>>()?;
        let mut candidates: Vec<(String, &dyn StateModel)> =
            ctx.states.iter().map(|s| (s.id.clone(), s.state.as_ref())).collect();
        candidates.extend(grid.iter().map(|(id, s)| (id.clone(), s as &dyn StateModel)));
        if let Some(g) = &gibbs_product {
            candidates.push(("product_gibbs".into(), g));
        }
        candidates.extend(gibbs_blocks.iter().map(|(m, g)| (format!("gibbs_block(m={m})"), g as &dyn StateModel)));
        let recs = variational_inequality(model, &candidates, a, p, entropy_range.clone())?;
        for r in &recs {
            if r.gap < -params.tolerance {
                report.violations.push(format!("{}: candidate {} has variational gap {}", no.id, r.candidate, r.gap));
            }
        }
        let mut sandwich_upper = None;
        for (m, _) in &gibbs_blocks {
            let b = gibbs_lower_bound(model, *m, a, p)?;
            if b.slack < -params.tolerance {
                report.violations.push(format!("{}: Gibbs lower bound slack {} at m = {m}", no.id, b.slack));
            }
            sandwich_upper = Some(sandwich_upper.map_or(b.penalty, |p: f64| p.min(b.penalty)));
            bounds.push(GibbsBoundOut {
                observable: &no.id,
                m: b.m,
                period: b.period,
                entropy_closed_form: b.entropy_closed_form,
                entropy_direct: b.entropy_direct,
                cross_check: b.cross_check,
                psi_a: b.psi_a,
                pressure: b.pressure,
                penalty: b.penalty,
                rhs: b.rhs,
                slack: b.slack,
            });
        }
        let best = &recs[0];
        let best_value = best.mean_entropy - best.expectation - model.lambda_tau();
        report.lines.push(format!("{:<16} {:>12.8} {:>10} {:>12.3e}  {}", no.id, p, source, best.gap, best.candidate));
        report.push_summary(&VariationalSummary {
            observable: &no.id,
            pressure: p,
            pressure_source: source,
            best_candidate: best.candidate.clone(),
            best_gap: best.gap,
            candidates: recs.len(),
            sandwich_upper: sandwich_upper.map(|pen| best_value + pen),
        });
        rows.extend(recs.into_iter().map(|r| VariationalOut {
            observable: &no.id,
            candidate: r.candidate,
            mean_entropy: r.mean_entropy,
            expectation: r.expectation,
            gap: r.gap,
        }));
    }
    report.push_table("candidates", &rows);
    report.push_table("gibbs_bound", &bounds);
    Ok(report)
}

#[derive(Serialize)]
struct CheckOut {
    id: &'static str,
    name: &'static str,
    passed: bool,
    residual: f64,
    detail: String,
}

#[derive(Serialize)]
struct ValidateSummary {
    d: usize,
    w: usize,
    n0: usize,
    n_max: usize,
    all_passed: bool,
    lambda_tau: f64,
    lambda_tau_residual: f64,
    tightness_distance: Option<usize>,
    tightness_commutator: Option<f64>,
    tightness_factorization: Option<f64>,
}

fn validate(ctx: &Context) -> Result<Report, CliError> {
    let model = &ctx.model;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let rep = check_assumption(model, &mut rng)?;
    let lt = lambda_tau(model, 1..=model.n_max())?;
    let mut report = ctx.report(Command::Validate);
    let rows: Vec<CheckOut> = rep
        .checks
        .iter()
        .map(|c| CheckOut { id: c.id, name: c.name, passed: c.passed, residual: c.residual, detail: c.detail.clone() })
        .collect();
    for c in &rep.checks {
        report.lines.push(format!("({:<3}) {:<6} {:>10.2e}  {}", c.id, if c.passed { "pass" } else { "FAIL" }, c.residual, c.name));
        if !c.passed {
            report.violations.push(format!("check ({}) failed: {} (residual {:e})", c.id, c.name, c.residual));
        }
    }
    if let Some(t) = &rep.tightness {
        report.lines.push(format!(
            "distance {} witness: ||[x,y]|| = {:.3e}, factorization residual = {:.3e}",
            t.distance, t.commutator_norm, t.factorization_residual
        ));
    }
    report.lines.push(format!("lambda_tau = {:.12}", lt.limit));
    report.push_table("checks", &rows);
    report.push_summary(&ValidateSummary {
        d: model.site_dim(),
        w: model.window_width(),
        n0: model.commutation_distance(),
        n_max: model.n_max(),
        all_passed: rep.all_passed(),
        lambda_tau: lt.limit,
        lambda_tau_residual: lt.max_residual(),
        tightness_distance: rep.tightness.as_ref().map(|t| t.distance),
        tightness_commutator: rep.tightness.as_ref().map(|t| t.commutator_norm),
        tightness_factorization: rep.tightness.as_ref().map(|t| t.factorization_residual),
    });
    Ok(report)
}
