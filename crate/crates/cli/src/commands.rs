use crate::args::*;
use crate::error::CliError;
use ict_core::asymptotic::{asymptotic_ci_for_z, asymptotic_table};
use ict_core::curve::{CurveTable, SCHEMA_VERSION};
use ict_core::planner::{self, length_profile, length_vs_lambda_curve, Construction, Design, IntervalTable, PlanOptions};
use ict_core::privacy::{self, PrivacyConfig, PrivacySpec};
use ict_core::simulate::{self, SimConfig};
use ict_core::{ConfidenceSpec, ExactCi, IctModel, LengthCriterion, Method, ModelConfig, TailRule};
use log::info;
use serde_json::{json, Map, Value};

/// What a command produced.
pub enum Output {
    /// A single result with the parameters that produced it.
    Record { command: &'static str, params: Value, result: Value },
    Curve(CurveTable),
    /// Preformatted text (raw simulation export).
    Text(String),
}

fn method(m: MethodArg) -> Method {
    match m {
        MethodArg::Exact => Method::Exact,
        MethodArg::Asymptotic => Method::Asymptotic,
    }
}

fn construction(m: MethodArg) -> Construction {
    match m {
        MethodArg::Exact => Construction::Exact(TailRule::Inclusive),
        MethodArg::Asymptotic => Construction::Asymptotic,
    }
}

fn guarantee(m: MethodArg) -> &'static str {
    match m {
        MethodArg::Exact => "coverage at least gamma for every pi and every n",
        MethodArg::Asymptotic => "none; normal approximation, may under-cover",
    }
}

fn model_config(d: &DesignArgs) -> Result<ModelConfig, CliError> {
    let cfg = match (d.n, d.n1, d.n2) {
        (Some(n), _, _) => ModelConfig::equal_split(n, d.lambda)?,
        (None, Some(n1), Some(n2)) => ModelConfig::new(n1, n2, d.lambda)?,
        _ => return Err(CliError::Usage("give --n, or both --n1 and --n2".into())),
    };
    Ok(cfg)
}

fn design_params(cfg: &ModelConfig) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("n1".into(), cfg.n1.into());
    m.insert("n2".into(), cfg.n2.into());
    m.insert("lambda".into(), cfg.lambda.into());
    m
}

fn with_design(mut table: CurveTable, cfg: &ModelConfig) -> CurveTable {
    for (k, v) in design_params(cfg) {
        table.set_meta(&k, v);
    }
    table
}

/// Parses `start:stop:step` (stop included) or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("bad grid `{spec}`"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let (start, stop, step) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        // round away the representation noise of i·step
        return Ok((0..=count)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect());
    }
    spec.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}

pub fn run(cmd: &Command) -> Result<Output, CliError> {
    match cmd {
        Command::Ci(a) => ci(a),
        Command::LambdaMin(a) => lambda_min(a),
        Command::SampleSize(a) => sample_size(a),
        Command::Coverage(a) => coverage(a),
        Command::LengthProfile(a) => profile(a),
        Command::LengthVsLambda(a) => length_vs_lambda(a),
        Command::Simulate(a) => simulate(a),
    }
}

fn ci(a: &CiArgs) -> Result<Output, CliError> {
    let cfg = model_config(&a.design)?;
    let spec = ConfidenceSpec::new(a.gamma)?;
    let result = match a.method {
        MethodArg::Exact => {
            let model = IctModel::new(cfg);
            let rule = match a.tail_rule {
                TailArg::Inclusive => TailRule::Inclusive,
                TailArg::Strict => TailRule::Strict,
            };
            ExactCi::with_rule(&model, spec, rule).interval(a.z)?
        }
        MethodArg::Asymptotic => asymptotic_ci_for_z(a.z, spec, &cfg)?,
    };
    let mut params = design_params(&cfg);
    params.insert("z".into(), a.z.into());
    params.insert("gamma".into(), a.gamma.into());
    params.insert("method".into(), method(a.method).to_string().into());
    if a.method == MethodArg::Exact {
        params.insert("tail_rule".into(), format!("{:?}", a.tail_rule).to_lowercase().into());
    }
    params.insert("coverage_guarantee".into(), guarantee(a.method).into());
    Ok(Output::Record {
        command: "ci",
        params: params.into(),
        result: json!({
            "lower": result.lower,
            "upper": result.upper,
            "length": result.length,
        }),
    })
}

fn lambda_min(a: &LambdaMinArgs) -> Result<Output, CliError> {
    let spec = PrivacySpec::new(a.delta, a.tau, a.pi0)?;
    let cfg = PrivacyConfig {
        pi_step: a.pi_step,
        lambda_step: a.lambda_step,
        lambda_cap: a.lambda_cap,
        ..PrivacyConfig::default()
    };
    info!("scanning lambda up to {} in steps of {}", a.lambda_cap, a.lambda_step);
    let r = privacy::lambda_min(&spec, &cfg)?;
    Ok(Output::Record {
        command: "lambda-min",
        params: json!({
            "delta": a.delta,
            "tau": a.tau,
            "pi0": a.pi0,
            "pi_step": a.pi_step,
            "lambda_step": a.lambda_step,
            "lambda_cap": a.lambda_cap,
        }),
        result: json!({
            "lambda_min": r.lambda_min,
            "worst_protection": r.at_min.worst_protection,
            "binding_pi": r.at_min.binding_pi,
            "binding_group": r.at_min.binding_group.to_string(),
            "earlier_feasible_runs": r.earlier_feasible_runs,
        }),
    })
}

fn sample_size(a: &SampleSizeArgs) -> Result<Output, CliError> {
    let spec = ConfidenceSpec::new(a.gamma)?;
    let criterion = match a.criterion {
        CriterionArg::Expected => LengthCriterion::expected(a.d)?,
        CriterionArg::Quantile => LengthCriterion::quantile(a.d, a.level)?,
    };
    let opts = PlanOptions {
        pi_step: a.pi_step,
        n_cap: a.n_cap,
        construction: construction(a.method),
        ..PlanOptions::default()
    };
    let plan = planner::min_n(&criterion, spec, a.lambda, a.pi0, &opts)?;
    let mut profile = plan.profile;
    profile.set_meta("method", method(a.method).to_string());
    profile.set_meta("pi_step", a.pi_step);
    profile.set_meta("criterion_value_at_n", plan.criterion_value_at_n);
    profile.set_meta("binding_pi", plan.binding_pi);
    if let Some(v) = plan.criterion_value_below {
        profile.set_meta("criterion_value_below", v);
    }
    Ok(Output::Curve(profile))
}

fn interval_table(m: MethodArg, model: &IctModel, spec: ConfidenceSpec, lo: i64, hi: i64) -> Result<IntervalTable, CliError> {
    Ok(match m {
        MethodArg::Exact => IntervalTable::exact(&ExactCi::new(model, spec), lo, hi)?,
        MethodArg::Asymptotic => asymptotic_table(spec, model.config(), lo, hi)?,
    })
}

fn coverage(a: &CoverageArgs) -> Result<Output, CliError> {
    let cfg = model_config(&a.design)?;
    let spec = ConfidenceSpec::new(a.gamma)?;
    let grid = parse_grid(&a.pi_grid)?;
    if grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(CliError::Usage("pi grid must lie in [0, 1]".into()));
    }
    let pi_max = grid.iter().copied().fold(1e-12, f64::max);
    let model = IctModel::new(cfg);
    let support = model.build_support(pi_max, 1e-10)?;
    let table = interval_table(a.method, &model, spec, support.lo, support.hi)?;
    let design = Design { model, table, spec };
    let stats = design.sweep(&grid, a.d)?;
    let mut out = with_design(CurveTable::new(), &cfg)
        .with_meta("gamma", a.gamma)
        .with_meta("method", method(a.method).to_string())
        .with_meta("pi_grid", a.pi_grid.as_str())
        .with_meta("coverage_guarantee", guarantee(a.method))
        .with_column("pi", grid)?
        .with_column("coverage", stats.iter().map(|s| s.coverage).collect())?
        .with_column("expected_length", stats.iter().map(|s| s.expected_length).collect())?;
    if let Some(d) = a.d {
        out.set_meta("d", d);
        out.push_column("length_quantile_prob", stats.iter().map(|s| s.quantile_prob.unwrap_or(0.0)).collect())?;
    }
    Ok(Output::Curve(out))
}

fn profile(a: &LengthProfileArgs) -> Result<Output, CliError> {
    let cfg = model_config(&a.design)?;
    let spec = ConfidenceSpec::new(a.gamma)?;
    let model = IctModel::new(cfg);
    let support = model.build_support(a.pi_max, 1e-10)?;
    let table = interval_table(a.method, &model, spec, support.lo, support.hi)?;
    let out = with_design(length_profile(&table)?, &cfg)
        .with_meta("gamma", a.gamma)
        .with_meta("pi_max", a.pi_max);
    Ok(Output::Curve(out))
}

fn length_vs_lambda(a: &LengthVsLambdaArgs) -> Result<Output, CliError> {
    let spec = ConfidenceSpec::new(a.gamma)?;
    let lambdas = parse_grid(&a.lambdas)?;
    Ok(Output::Curve(length_vs_lambda_curve(a.pi, a.n, spec, &lambdas)?))
}

fn simulate(a: &SimulateArgs) -> Result<Output, CliError> {
    let cfg = model_config(&a.design)?;
    let sim = SimConfig::new(a.pi, cfg, a.replicates, a.seed)?;
    if a.raw {
        let mut buf = Vec::new();
        simulate::write_raw_csv(&mut buf, &simulate::simulate_raw(&sim))?;
        return Ok(Output::Text(String::from_utf8(buf).expect("csv is utf-8")));
    }
    if let Some(m) = a.coverage {
        let spec = ConfidenceSpec::new(a.gamma)?;
        let r = simulate::empirical_coverage(&sim, spec, method(m))?;
        let mut params = design_params(&cfg);
        params.insert("pi".into(), a.pi.into());
        params.insert("replicates".into(), a.replicates.into());
        params.insert("seed".into(), a.seed.into());
        params.insert("gamma".into(), a.gamma.into());
        params.insert("method".into(), method(m).to_string().into());
        return Ok(Output::Record {
            command: "simulate",
            params: params.into(),
            result: json!({
                "coverage": r.coverage,
                "coverage_se": r.coverage_se,
                "mean_length": r.mean_length,
                "length_se": r.length_se,
            }),
        });
    }
    let zs = simulate::simulate_statistics(&sim);
    let out = with_design(CurveTable::new(), &cfg)
        .with_meta("pi", a.pi)
        .with_meta("replicates", a.replicates)
        .with_meta("seed", a.seed)
        .with_meta("generator", "chacha8, stream = replicate index")
        .with_column("replicate", (0..a.replicates).map(|i| i as f64).collect())?
        .with_column("z", zs.iter().map(|&z| z as f64).collect())?;
    Ok(Output::Curve(out))
}

/// Renders an output in the requested format.
pub fn render(out: &Output, format: Format) -> Result<String, CliError> {
    Ok(match (out, format) {
        (Output::Text(s), _) => s.clone(),
        (Output::Curve(t), Format::Json) => t.to_json() + "\n",
        (Output::Curve(t), Format::Csv) => t.to_csv(),
        (Output::Record { command, params, result }, Format::Json) => {
            let v = json!({
                "schema_version": SCHEMA_VERSION,
                "version": env!("CARGO_PKG_VERSION"),
                "command": command,
                "params": params,
                "result": result,
            });
            serde_json::to_string_pretty(&v).expect("json values serialise") + "\n"
        }
        (Output::Record { command, params, result }, Format::Csv) => {
            // one-row table: numeric results as columns, everything else as metadata
            let mut t = CurveTable::new().with_meta("command", *command);
            for (k, v) in params.as_object().into_iter().flatten() {
                t.set_meta(k, v.clone());
            }
            for (k, v) in result.as_object().into_iter().flatten() {
                match v.as_f64() {
                    Some(x) => t.push_column(k, vec![x])?,
                    None => t.set_meta(k, v.clone()),
                }
            }
            t.to_csv()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.5,2,8").unwrap(), vec![0.5, 2.0, 8.0]);
        let g = parse_grid("0.001:0.999:0.001").unwrap();
        assert_eq!(g.len(), 999);
        assert_eq!(g[0], 0.001);
        assert_eq!(g[998], 0.999);
        assert_eq!(g[299], 0.3);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("a,b").is_err());
    }
}
