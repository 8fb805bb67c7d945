//! One function per subcommand: configuration in, report out.

use std::path::Path;

use serde_json::json;
use tracelab_core::kernels::run_kernel_checks;
use tracelab_core::quadratic::{
    berry_esseen_empirical, clt_monte_carlo, ldp_rate_function, sample_normalized_forms, LdpRate,
    QuadraticFormSpec, DEFAULT_CONTINUOUS_SAMPLES,
};
use tracelab_core::rate_lab::{
    default_continuous_grid, default_discrete_grid, operator_trace_grid, run_rate_experiment,
    run_rate_experiment_continuous, run_second_order_experiment,
};
use tracelab_core::special::normal_cdf;
use tracelab_core::toeplitz::trace_grid;
use tracelab_core::{Domain, NystromOptions, SpectralDensity, TraceSpec};

use crate::config::{
    integer_grid, CltSimConfig, KernelCheckConfig, LdpConfig, ModelRef, RateFitConfig, SecondOrderConfig, Theorem,
    ToleranceOverrides, TraceApproxConfig,
};
use crate::error::CliError;
use crate::report::{num, opt, Report, Table};

/// Points of the CDF comparison written for plotting.
const CDF_POINTS: usize = 161;

fn trace_spec(models: &[ModelRef], exponents: &Option<Vec<i32>>, base: &Path) -> Result<TraceSpec, CliError> {
    let generators = models.iter().map(|m| m.resolve(base)).collect::<Result<Vec<SpectralDensity>, _>>()?;
    let exponents = exponents.clone().unwrap_or_else(|| vec![1; generators.len()]);
    Ok(TraceSpec::new(generators, exponents)?)
}

fn nystrom_options(t: &Option<ToleranceOverrides>) -> NystromOptions {
    let mut opts = NystromOptions::default();
    if let Some(t) = t {
        if let Some(v) = t.nystrom_rel_tol {
            opts.rel_tol = v;
        }
        if let Some(v) = t.nystrom_initial_nodes {
            opts.initial_nodes = v;
        }
        if t.nystrom_max_nodes.is_some() {
            opts.max_nodes = t.nystrom_max_nodes;
        }
    }
    opts
}

fn trace_table(points: &[tracelab_core::toeplitz::TracePoint]) -> Table {
    let mut table = Table::new("", &["t", "s", "m", "delta"]);
    for p in points {
        table.push(vec![num(p.t), num(p.s), num(p.m), num(p.delta)]);
    }
    table
}

pub fn trace_approx(cfg: &TraceApproxConfig, base: &Path) -> Result<Report, CliError> {
    let spec = trace_spec(&cfg.models, &cfg.exponents, base)?;
    let points = match spec.domain() {
        Domain::Circle => trace_grid(&spec, &integer_grid(&cfg.grid)?)?,
        Domain::Line => operator_trace_grid(&spec, &cfg.grid, nystrom_options(&cfg.tolerances))?,
    };
    let mut report = Report::new("trace-approx", cfg)?;
    report.results(&json!({ "points": points }))?;
    report.tables.push(trace_table(&points));
    for p in &points {
        report.summary.push(format!("T = {:<8} S = {:<22} M = {:<22} delta = {:e}", p.t, p.s, p.m, p.delta));
    }
    Ok(report)
}

pub fn rate_fit(cfg: &RateFitConfig, base: &Path) -> Result<Report, CliError> {
    let spec = trace_spec(&cfg.models, &cfg.exponents, base)?;
    let fit = match (spec.domain(), cfg.theorem) {
        (Domain::Circle, Theorem::Discrete(theorem)) => {
            let grid = match &cfg.grid {
                Some(g) => integer_grid(g)?,
                None => default_discrete_grid(),
            };
            run_rate_experiment(&cfg.model_id, &spec, &grid, theorem)?
        }
        (Domain::Line, Theorem::Continuous(theorem)) => {
            let grid = cfg.grid.clone().unwrap_or_else(default_continuous_grid);
            run_rate_experiment_continuous(&cfg.model_id, &spec, &grid, theorem, nystrom_options(&cfg.tolerances))?
        }
        (domain, _) => {
            return Err(CliError::Config(format!("the theorem does not belong to generators on the {domain:?}")));
        }
    };
    let mut report = Report::new("rate-fit", cfg)?;
    report.results(&fit)?;
    let mut table = Table::new("", &["t", "s", "m", "delta", "used"]);
    for p in &fit.points {
        let used = !fit.excluded.contains(&p.t);
        table.push(vec![num(p.t), num(p.s), num(p.m), num(p.delta), used.to_string()]);
    }
    report.tables.push(table);
    report.summary.push(format!(
        "{}: slope {:.4} +- {:.4} over {} points, theory {}, verdict {:?}",
        fit.model_id,
        fit.fitted_slope,
        fit.slope_stderr,
        fit.grid.len(),
        fit.theoretical_gamma.map_or("o(1) only".to_string(), |g| format!("-{g:.4}")),
        fit.verdict
    ));
    Ok(report)
}

pub fn second_order(cfg: &SecondOrderConfig) -> Result<Report, CliError> {
    let table = run_second_order_experiment(cfg.expansion, &cfg.grid)?;
    let mut report = Report::new("second-order", cfg)?;
    report.results(&table)?;
    let mut csv = Table::new("", &["t", "exact", "predicted", "residual", "normalized_residual", "ratio"]);
    for r in &table.rows {
        csv.push(vec![num(r.t), num(r.exact), num(r.predicted), num(r.residual), num(r.normalized_residual), num(r.ratio)]);
    }
    report.tables.push(csv);
    for r in &table.rows {
        report.summary.push(format!("T = {:<8} normalized residual = {:e}", r.t, r.normalized_residual));
    }
    report.summary.push(format!(
        "decreasing: {}, reduction first/last: {:.3}, worst predicted/exact ratio: {:.4}",
        table.decreasing, table.reduction, table.worst_ratio
    ));
    Ok(report)
}

pub fn clt_sim(cfg: &CltSimConfig, base: &Path, seed_override: Option<u64>) -> Result<Report, CliError> {
    let f = cfg.f.resolve(base)?;
    let g = cfg.g.resolve(base)?;
    let seed = seed_override.or(cfg.seed).unwrap_or(0);
    let spec = match f.domain() {
        Domain::Circle => {
            let t = integer_grid(&[cfg.horizon])?[0];
            QuadraticFormSpec::discrete(f.clone(), g.clone(), t)?
        }
        Domain::Line => QuadraticFormSpec::continuous(
            f.clone(),
            g.clone(),
            cfg.horizon,
            cfg.samples.unwrap_or(DEFAULT_CONTINUOUS_SAMPLES),
        )?,
    };
    let study = clt_monte_carlo(&spec, cfg.replicates, seed, cfg.force)?;
    let mut forms = sample_normalized_forms(&spec, cfg.replicates, seed)?;
    forms.sort_by(|a, b| a.total_cmp(b));
    let sd = study.sigma0_squared.sqrt();
    let mut cdf = Table::new("", &["z", "empirical_cdf", "normal_cdf"]);
    for i in 0..CDF_POINTS {
        let z = sd * (-4.0 + 8.0 * i as f64 / (CDF_POINTS - 1) as f64);
        let below = forms.partition_point(|x| *x <= z);
        cdf.push(vec![num(z), num(below as f64 / forms.len() as f64), num(normal_cdf(z / sd))]);
    }
    let mut report = Report::new("clt-sim", cfg)?;
    report.seed = Some(seed);
    report.tables.push(cdf);
    report.summary.push(format!(
        "variance = {:.4} (limit sigma0^2 = {:.4}, exact finite-T chi2 = {:.4}), KS distance = {:.4}, {} replicates",
        study.variance, study.sigma0_squared, study.chi2, study.ks_distance, study.replicates
    ));
    let mut berry = None;
    if let Some(be) = &cfg.berry_esseen {
        let points = berry_esseen_empirical(&f, &g, &be.grid, be.replicates, seed)?;
        let mut sup = Table::new("berry-esseen", &["t", "sqrt_t_gap", "noise_band", "edgeworth_sup"]);
        let mut curve = Table::new("gap-curve", &["t", "z", "empirical_gap", "be3_limit", "edgeworth"]);
        for p in &points {
            sup.push(vec![p.t.to_string(), num(p.sqrt_t_gap), num(p.noise_band), num(p.edgeworth_sup)]);
            for c in &p.curve {
                curve.push(vec![p.t.to_string(), num(c.z), num(c.empirical_gap), num(c.be3_limit), num(c.edgeworth)]);
            }
            report.summary.push(format!(
                "T = {:<6} sqrt(T) sup gap = {:.4} (noise band {:.4}, Edgeworth sup {:.4})",
                p.t, p.sqrt_t_gap, p.noise_band, p.edgeworth_sup
            ));
        }
        report.tables.push(sup);
        report.tables.push(curve);
        berry = Some(points);
    }
    report.results(&json!({ "study": study, "berry_esseen": berry }))?;
    Ok(report)
}

pub fn ldp(cfg: &LdpConfig, base: &Path) -> Result<Report, CliError> {
    let f = cfg.f.resolve(base)?;
    let g = cfg.g.resolve(base)?;
    let problem = LdpRate::new(&f, &g)?;
    let mean = problem.mean()?;
    let points = ldp_rate_function(&f, &g, &cfg.x)?;
    let mut table = Table::new("", &["x", "rate", "argmax"]);
    for p in &points {
        table.push(vec![num(p.x), opt(p.rate), opt(p.argmax)]);
    }
    let mut report = Report::new("ldp", cfg)?;
    report.results(&json!({
        "mean": mean,
        "domain": [problem.lower, problem.upper],
        "points": points,
    }))?;
    report.tables.push(table);
    report.summary.push(format!("law-of-large-numbers limit {mean:.6}; V finite on ({}, {})", problem.lower, problem.upper));
    for p in &points {
        let rate = p.rate.map_or("inf".to_string(), |r| format!("{r:.8}"));
        report.summary.push(format!("I({}) = {rate}", p.x));
    }
    Ok(report)
}

/// The report, and whether every check passed.
pub fn kernel_check(cfg: &KernelCheckConfig) -> Result<(Report, bool), CliError> {
    let checks = run_kernel_checks(&cfg.grid)?;
    let mut table = Table::new("", &["name", "statement", "value", "reference", "achieved", "tolerance", "passed"]);
    for c in &checks {
        table.push(vec![
            c.name.clone(),
            c.statement.clone(),
            num(c.value),
            num(c.reference),
            num(c.achieved),
            num(c.tolerance),
            c.passed.to_string(),
        ]);
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    let mut report = Report::new("kernel-check", cfg)?;
    report.results(&json!({ "checks": checks, "passed": passed, "total": checks.len() }))?;
    report.tables.push(table);
    for c in &checks {
        report.summary.push(format!("{:<5} {:<28} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.statement));
    }
    report.summary.push(format!("{passed}/{} checks passed", checks.len()));
    Ok((report, passed == checks.len()))
}
