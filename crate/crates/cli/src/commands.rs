use hitfun::density::{laplace_ratio, DensityEvaluator, TailConstant, TailRegime};
use hitfun::mc::{validation_suite, MCConfig};
use hitfun::poisson::PoissonKernel;
use hitfun::quad::QuadratureSpec;
use hitfun::specfun::{k_zero_set, Order};
use hitfun::wlambda::{build_w, ModelParams};
use hitfun::Error;

use crate::args::{points, Cli, Command, Grid, Switch};
use crate::report::{num, Cell, Report};
use crate::CliError;

const DEFAULT_T: Grid = Grid::log(1e-2, 1e4, 13);
const DEFAULT_V: Grid = Grid::linear(0.0, 10.0, 101);
const DEFAULT_R: Grid = Grid::log(0.1, 10.0, 9);
const DEFAULT_RHO: Grid = Grid::log(0.1, 10.0, 9);

pub fn run(cli: &Cli, workers: usize) -> Result<Report, CliError> {
    match cli.command {
        Command::Density => density(cli),
        Command::Wlambda => wlambda(cli),
        Command::Zeros => zeros(cli),
        Command::LaplaceCheck => laplace_check(cli),
        Command::Tail => tail(cli),
        Command::Kernel => kernel(cli),
        Command::KernelTail => kernel_tail(cli),
        Command::McValidate => mc_validate(cli, workers),
    }
}

fn require(v: Option<f64>, flag: &str, cmd: Command) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("{} requires --{flag}", cmd.name())))
}

fn model(cli: &Cli) -> Result<ModelParams, CliError> {
    let mu = require(cli.mu, "mu", cli.command)?;
    let x = require(cli.x, "x", cli.command)?;
    Ok(ModelParams::new(mu, x)?)
}

fn quad(cli: &Cli) -> Result<QuadratureSpec, CliError> {
    Ok(QuadratureSpec::new(QuadratureSpec::default().abs_tol, cli.tol)?)
}

fn evaluator(cli: &Cli) -> Result<DensityEvaluator, CliError> {
    Ok(DensityEvaluator::with_quad(model(cli)?, quad(cli)?)?)
}

fn base_parameters(cli: &Cli, p: &ModelParams) -> Vec<(&'static str, String)> {
    let q = QuadratureSpec::default();
    vec![
        ("mu", format!("{}", p.mu)),
        ("x", format!("{}", p.x)),
        ("lambda", num(p.lambda)),
        ("tol", format!("{:e}", cli.tol)),
        ("abs_tol", format!("{:e}", q.abs_tol)),
        ("max_subdivisions", q.max_subdivisions.to_string()),
    ]
}

fn density(cli: &Cli) -> Result<Report, CliError> {
    let ev = evaluator(cli)?;
    let (ts, grid) = points(cli.t, cli.t_grid, DEFAULT_T);
    let mut params = base_parameters(cli, &ev.params);
    params.push(("t", grid));
    let mut report = Report::new("density", params, vec!["t", "q"]);
    for (t, q) in ts.iter().zip(ev.density_batch(&ts)) {
        report.rows.push(vec![Cell::Num(*t), Cell::Num(q?)]);
    }
    Ok(report)
}

fn wlambda(cli: &Cli) -> Result<Report, CliError> {
    let p = model(cli)?;
    let w = build_w(&p)?;
    let (vs, grid) = points(cli.v, cli.v_grid, DEFAULT_V);
    let mut params = base_parameters(cli, &p);
    params.push(("v", grid));
    let mut report = Report::new("wlambda", params, vec!["v", "w", "w1", "w2"]);
    for v in vs {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("v must be finite and >= 0, got {v}")).into());
        }
        let (w1, w2) = (w.w1(v), w.w2(v));
        report.rows.push(vec![Cell::Num(v), Cell::Num(w1 + w2), Cell::Num(w1), Cell::Num(w2)]);
    }
    Ok(report)
}

fn zeros(cli: &Cli) -> Result<Report, CliError> {
    let mu = require(cli.mu, "mu", cli.command)?;
    let set = k_zero_set(Order::new(mu)?)?;
    let mut report = Report::new("zeros", vec![("mu", format!("{mu}"))], vec!["index", "re", "im"]);
    for (i, z) in set.zeros.iter().enumerate() {
        report.rows.push(vec![Cell::Int(i as i64 + 1), Cell::Num(z.re), Cell::Num(z.im)]);
    }
    report.summary.push(("count", Cell::Int(set.count() as i64)));
    Ok(report)
}

fn laplace_check(cli: &Cli) -> Result<Report, CliError> {
    let ev = evaluator(cli)?;
    let p = ev.params;
    let (rs, grid) = points(cli.r, cli.r_grid, DEFAULT_R);
    let mut params = base_parameters(cli, &p);
    params.push(("r", grid));
    let mut report = Report::new("laplace-check", params, vec!["r", "analytic", "numeric", "diff"]);
    let mut worst: f64 = 0.0;
    for r in rs {
        let analytic = laplace_ratio(p.mu, p.x, r)?;
        let numeric = ev.laplace(r)?;
        worst = worst.max((analytic - numeric).abs());
        report.rows.push(vec![
            Cell::Num(r),
            Cell::Num(analytic),
            Cell::Num(numeric),
            Cell::Num(analytic - numeric),
        ]);
    }
    report.summary.push(("max_abs_diff", Cell::Num(worst)));
    Ok(report)
}

fn regime_name(r: TailRegime) -> &'static str {
    match r {
        TailRegime::PowerLaw => "power_law",
        TailRegime::LogCorrected => "log_corrected",
    }
}

fn tail_report(
    command: &'static str,
    params: Vec<(&'static str, String)>,
    columns: Vec<&'static str>,
    tc: TailConstant,
) -> Report {
    let mut report = Report::new(command, params, columns);
    report.summary.extend([
        ("constant", Cell::Num(tc.value)),
        ("error_estimate", Cell::Num(tc.error_estimate)),
        ("regime", Cell::Text(regime_name(tc.regime).into())),
        ("analytic", Cell::Bool(tc.analytic)),
    ]);
    for (s, g) in tc.table {
        report.rows.push(vec![Cell::Num(s), Cell::Num(g)]);
    }
    report
}

fn tail(cli: &Cli) -> Result<Report, CliError> {
    let ev = evaluator(cli)?;
    let params = base_parameters(cli, &ev.params);
    let tc = ev.tail_constant()?;
    Ok(tail_report("tail", params, vec!["t", "scaled_density"], tc))
}

fn kernel_parameters(cli: &Cli, k: &PoissonKernel) -> Vec<(&'static str, String)> {
    let mut params = base_parameters(cli, &k.density.params);
    params.insert(0, ("n", k.n.to_string()));
    params
}

fn poisson(cli: &Cli) -> Result<PoissonKernel, CliError> {
    Ok(PoissonKernel::from_density(cli.n, evaluator(cli)?)?)
}

fn kernel(cli: &Cli) -> Result<Report, CliError> {
    let k = poisson(cli)?;
    let (rhos, grid) = points(cli.rho, cli.rho_grid, DEFAULT_RHO);
    let mut params = kernel_parameters(cli, &k);
    params.push(("rho", grid));
    let mut report = Report::new("kernel", params, vec!["rho", "p_subordination", "p_closed", "rel_diff"]);
    for rho in rhos {
        let sub = k.subordination(rho)?;
        let row = match k.closed(rho) {
            Ok(c) => vec![Cell::Num(rho), Cell::Num(sub), Cell::Num(c), Cell::Num((c - sub) / sub)],
            // the closed form does not exist on this branch; report the oracle alone
            Err(Error::Branch(_)) => vec![Cell::Num(rho), Cell::Num(sub), Cell::Missing, Cell::Missing],
            Err(e) => return Err(e.into()),
        };
        report.rows.push(row);
    }
    Ok(report)
}

fn kernel_tail(cli: &Cli) -> Result<Report, CliError> {
    let k = poisson(cli)?;
    let params = kernel_parameters(cli, &k);
    let tc = k.tail()?;
    Ok(tail_report("kernel-tail", params, vec!["rho", "scaled_kernel"], tc))
}

pub fn mc_config(cli: &Cli, workers: usize) -> MCConfig {
    MCConfig {
        seed: cli.seed,
        paths: cli.paths,
        dt: cli.dt,
        bridge_correction: cli.bridge == Switch::On,
        workers,
        ..MCConfig::default()
    }
}

fn mc_validate(cli: &Cli, workers: usize) -> Result<Report, CliError> {
    let cfg = mc_config(cli, workers);
    let records = validation_suite(&cfg)?;
    // the worker count is left out: the report must not depend on it
    let params = vec![
        ("seed", cfg.seed.to_string()),
        ("paths", cfg.paths.to_string()),
        ("dt", format!("{:e}", cfg.dt)),
        ("bridge", if cfg.bridge_correction { "on" } else { "off" }.to_string()),
        ("t_max", format!("{:e}", cfg.t_max)),
    ];
    let mut report = Report::new("mc-validate", params, vec!["test", "statistic", "threshold", "pass"]);
    let passed = records.iter().filter(|r| r.pass).count();
    for r in records {
        report.rows.push(vec![
            Cell::Text(r.test),
            Cell::Num(r.statistic),
            Cell::Num(r.threshold),
            Cell::Bool(r.pass),
        ]);
    }
    report.summary.push(("passed", Cell::Int(passed as i64)));
    report.summary.push(("total", Cell::Int(report.rows.len() as i64)));
    Ok(report)
}
