//! Subcommand implementations.

use std::path::Path;

use serde::Serialize;

use crtk_core::{
    convergence_study, critical_level_k, critical_level_mid, critical_volume_1, critical_volume_2,
    domain_scale, edges, estimate_exp_phi_term, estimate_exp_term, estimate_indicator_term,
    log_phi, oracle_small_d, spectral_moments, theta_k, theta_total, CovarianceModel, DomainSpec,
    GoeSpec, LandscapeParams, SpectralMoments,
};

use crate::output::{csv_table, emit, fmt_f64, Format};
use crate::{CliError, Command, DomainArgs, GridArgs, ModelArgs, OutArgs};

type CliResult<T> = Result<T, CliError>;

impl ModelArgs {
    fn parse(&self) -> CliResult<CovarianceModel> {
        let text = if let Some(path) = self.model_json.strip_prefix('@') {
            std::fs::read_to_string(path)?
        } else {
            self.model_json.clone()
        };
        let model: CovarianceModel = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("cannot parse --model-json: {e}")))?;
        model.validate()?;
        Ok(model)
    }
}

impl DomainArgs {
    fn resolve(&self) -> CliResult<DomainSpec> {
        let domain = match (self.volume_exponent, self.radius, self.side) {
            (Some(v), None, None) => DomainSpec::AbstractVolume { v },
            (None, Some(r), None) => DomainSpec::Ball { radius: r },
            (None, None, Some(l)) => DomainSpec::Cube { side: l },
            _ => {
                return Err(CliError::Config(
                    "exactly one of --V, --radius, --side is required".into(),
                ))
            }
        };
        domain.validate()?;
        Ok(domain)
    }
}

impl GridArgs {
    fn points(&self) -> CliResult<Vec<f64>> {
        if !(self.v_min < self.v_max) || self.steps < 2 {
            return Err(CliError::Config(
                "grid needs v-min < v-max and steps >= 2".into(),
            ));
        }
        let n = self.steps;
        Ok((0..n)
            .map(|i| self.v_min + (self.v_max - self.v_min) * i as f64 / (n - 1) as f64)
            .collect())
    }
}

fn grid_points(min: f64, max: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|i| min + (max - min) * i as f64 / (steps.max(2) - 1) as f64)
        .collect()
}

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Moments { model, out } => cmd_moments(&model, &out),
        Command::Theta { model, domain, k_list, grid, out } => {
            cmd_theta(&model, &domain, &k_list, &grid, &out)
        }
        Command::Critical { model, domain, k_max, out } => {
            cmd_critical(&model, &domain, k_max, &out)
        }
        Command::Mc { model, domain, k_list, grid, d_list, samples, seed, out } => {
            cmd_mc(&model, &domain, &k_list, &grid, &d_list, samples, seed, &out)
        }
        Command::Oracle { model, samples, seed, u_min, u_max, u_steps, out } => {
            cmd_oracle(&model, samples, seed, u_min, u_max, u_steps, &out)
        }
        Command::Figure { out, steps } => cmd_figure(&out, steps),
    }
}

#[derive(Serialize)]
struct MomentsReport {
    lambda2: f64,
    lambda4: f64,
    excess: f64,
    is_bargmann_fock: bool,
    e_star: f64,
    e_star_star: f64,
    v_c1: f64,
    v_c2: f64,
    r_c1: f64,
    l_c1: f64,
}

fn moments_report(m: &SpectralMoments) -> MomentsReport {
    let (e_star, e_star_star) = edges(m);
    let v_c1 = critical_volume_1(m);
    let v_c2 = critical_volume_2(m);
    let (r_c1, l_c1) = domain_scale(v_c1);
    MomentsReport {
        lambda2: m.lambda2,
        lambda4: m.lambda4,
        excess: m.excess,
        is_bargmann_fock: m.is_bargmann_fock,
        e_star,
        e_star_star,
        v_c1,
        v_c2,
        r_c1,
        l_c1,
    }
}

fn cmd_moments(model: &ModelArgs, out: &OutArgs) -> CliResult<()> {
    let m = spectral_moments(&model.parse()?)?;
    let report = moments_report(&m);
    let body = match out.format {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let mut s = String::from("quantity,value\n");
            for (name, value) in [
                ("lambda2", report.lambda2),
                ("lambda4", report.lambda4),
                ("excess", report.excess),
                ("is_bargmann_fock", if report.is_bargmann_fock { 1.0 } else { 0.0 }),
                ("e_star", report.e_star),
                ("e_star_star", report.e_star_star),
                ("v_c1", report.v_c1),
                ("v_c2", report.v_c2),
                ("r_c1", report.r_c1),
                ("l_c1", report.l_c1),
            ] {
                s.push_str(name);
                s.push(',');
                s.push_str(&fmt_f64(value));
                s.push('\n');
            }
            s
        }
    };
    emit(out.out.as_deref(), &body)?;
    Ok(())
}

/// Monotone-regime sanity assertions on the computed columns: Θ is
/// nondecreasing in v, k-free at and above E*, and constant at and above
/// E**. Violations indicate a numeric defect, not bad input.
fn check_theta_table(
    m: &SpectralMoments,
    params: &LandscapeParams,
    vs: &[f64],
    columns: &[(u32, Vec<f64>)],
) -> CliResult<()> {
    let (e_star, e_star_star) = edges(m);
    let plateau = theta_total(params);
    let tol = 1e-12 * (1.0 + plateau.abs());
    for (k, col) in columns {
        for w in col.windows(2) {
            if !(w[1] >= w[0] - tol) {
                return Err(CliError::Numeric(format!(
                    "theta table is not monotone in v for k={k}: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for (v, val) in vs.iter().zip(col.iter()) {
            if *v >= e_star_star && (val - plateau).abs() > tol {
                return Err(CliError::Numeric(format!(
                    "theta table should be constant above E**: k={k}, v={v}, value {val}"
                )));
            }
            if *v >= e_star {
                let base = columns[0].1[vs.iter().position(|x| x == v).unwrap()];
                if (val - base).abs() > tol {
                    return Err(CliError::Numeric(format!(
                        "theta table should be k-free at v={v} >= E*: k={k}"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn theta_csv(
    model: &CovarianceModel,
    domain: &DomainSpec,
    k_list: &[u32],
    vs: &[f64],
) -> CliResult<String> {
    if k_list.is_empty() {
        return Err(CliError::Config("--k needs at least one index".into()));
    }
    let m = spectral_moments(model)?;
    let params = LandscapeParams::new(m, domain.limiting_volume_exponent())?;
    let columns: Vec<(u32, Vec<f64>)> = k_list
        .iter()
        .map(|&k| (k, vs.iter().map(|&v| theta_k(&params, k, v).value).collect()))
        .collect();
    check_theta_table(&m, &params, vs, &columns)?;
    let mut header = String::from("v");
    for k in k_list {
        header.push_str(&format!(",theta_k{k}"));
    }
    let rows: Vec<Vec<f64>> = vs
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut row = Vec::with_capacity(1 + columns.len());
            row.push(v);
            row.extend(columns.iter().map(|(_, col)| col[i]));
            row
        })
        .collect();
    Ok(csv_table(&header, &rows))
}

fn cmd_theta(
    model: &ModelArgs,
    domain: &DomainArgs,
    k_list: &[u32],
    grid: &GridArgs,
    out: &OutArgs,
) -> CliResult<()> {
    if out.format != Format::Csv {
        return Err(CliError::Config("theta emits CSV; use --format csv".into()));
    }
    let body = theta_csv(&model.parse()?, &domain.resolve()?, k_list, &grid.points()?)?;
    emit(out.out.as_deref(), &body)?;
    Ok(())
}

#[derive(Serialize)]
struct CriticalReport {
    #[serde(rename = "V_c1")]
    v_c1: f64,
    #[serde(rename = "V_c2")]
    v_c2: f64,
    regime: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    v_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    v_c_k: Option<Vec<f64>>,
}

fn cmd_critical(model: &ModelArgs, domain: &DomainArgs, k_max: u32, out: &OutArgs) -> CliResult<()> {
    let m = spectral_moments(&model.parse()?)?;
    let dom = domain.resolve()?;
    let big_v = dom.limiting_volume_exponent();
    let params = LandscapeParams::new(m, big_v)?;
    let v_c1 = critical_volume_1(&m);
    let v_c2 = critical_volume_2(&m);
    let report = if big_v <= v_c1 {
        CriticalReport { v_c1, v_c2, regime: "subcritical volume", v_c: None, v_c_k: None }
    } else if m.is_bargmann_fock || big_v > v_c2 {
        let levels: Vec<f64> = (0..=k_max)
            .map(|k| critical_level_k(&params, k))
            .collect::<Result<_, _>>()?;
        CriticalReport { v_c1, v_c2, regime: "layered", v_c: None, v_c_k: Some(levels) }
    } else if big_v < v_c2 {
        CriticalReport {
            v_c1,
            v_c2,
            regime: "mid",
            v_c: Some(critical_level_mid(&params)?),
            v_c_k: None,
        }
    } else {
        // exactly at V_c2: theta vanishes at E* itself
        CriticalReport { v_c1, v_c2, regime: "boundary", v_c: Some(edges(&m).0), v_c_k: None }
    };
    emit(out.out.as_deref(), &to_json(&report)?)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_mc(
    model: &ModelArgs,
    domain: &DomainArgs,
    k_list: &[u32],
    grid: &GridArgs,
    d_list: &[usize],
    samples: u64,
    seed: u64,
    out: &OutArgs,
) -> CliResult<()> {
    if out.format != Format::Csv {
        return Err(CliError::Config("mc emits CSV; use --format csv".into()));
    }
    if d_list.is_empty() || k_list.is_empty() {
        return Err(CliError::Config("--d and --k need at least one entry".into()));
    }
    let m = spectral_moments(&model.parse()?)?;
    let dom = domain.resolve()?;
    let vs = grid.points()?;
    let mut rows = Vec::new();
    for &k in k_list {
        for &v in &vs {
            let results = convergence_study(&dom, &m, k as usize, v, d_list, samples, seed)?;
            for r in results {
                rows.push(vec![
                    r.d as f64,
                    r.k as f64,
                    v,
                    r.log_mean / r.d as f64,
                    r.se_log,
                    r.theta_target,
                    r.gap,
                ]);
            }
        }
    }
    let body = csv_table("d,k,v,log_mean_over_d,se,theta,gap", &rows);
    emit(out.out.as_deref(), &body)?;
    Ok(())
}

fn cmd_oracle(
    model: &ModelArgs,
    samples: u64,
    seed: u64,
    u_min: f64,
    u_max: f64,
    u_steps: usize,
    out: &OutArgs,
) -> CliResult<()> {
    if out.format != Format::Csv {
        return Err(CliError::Config("oracle emits CSV; use --format csv".into()));
    }
    if !(u_min < u_max) || u_steps < 2 {
        return Err(CliError::Config("oracle grid needs u-min < u-max and u-steps >= 2".into()));
    }
    let m = spectral_moments(&model.parse()?)?;
    let us = grid_points(u_min, u_max, u_steps);
    // estimator codes in the table: 0 exp, 1 phi, 2 indicator
    let mut rows = Vec::new();
    for d in [1usize, 2] {
        let n = d + 1;
        let spec = GoeSpec::new(n, seed, samples)?;
        for k in 0..=d {
            let exact = oracle_small_d(n, |l| (-0.5 * l[k] * l[k]).exp())?.ln();
            let mc = estimate_exp_term(d, k, &spec)?;
            let z = (mc.log_mean - exact) / mc.se_log;
            rows.push(vec![d as f64, k as f64, 0.0, f64::INFINITY, exact, mc.log_mean, mc.se_log, z]);
            for &u in &us {
                if !m.is_bargmann_fock {
                    let scale = (m.lambda4 / m.excess).sqrt();
                    let slope = 6.0f64.sqrt() * m.lambda2 / m.lambda4.sqrt();
                    let exact = oracle_small_d(n, |l| {
                        (-0.5 * l[k] * l[k]).exp() * log_phi(scale * (u - l[k] * slope)).exp()
                    })?
                    .ln();
                    let mc = estimate_exp_phi_term(d, k, u, &m, &spec)?;
                    let z = (mc.log_mean - exact) / mc.se_log;
                    rows.push(vec![d as f64, k as f64, 1.0, u, exact, mc.log_mean, mc.se_log, z]);
                }
                let exact = oracle_small_d(n, |l| {
                    if l[k] <= u / std::f64::consts::SQRT_2 {
                        (-0.5 * l[k] * l[k]).exp()
                    } else {
                        0.0
                    }
                })?
                .ln();
                let mc = estimate_indicator_term(d, k, u, &spec)?;
                let z = (mc.log_mean - exact) / mc.se_log;
                rows.push(vec![d as f64, k as f64, 2.0, u, exact, mc.log_mean, mc.se_log, z]);
            }
        }
    }
    let body = csv_table("d,k,estimator,u,log_exact,log_mc,se_log,z", &rows);
    emit(out.out.as_deref(), &body)?;
    Ok(())
}

fn cmd_figure(out_dir: &Path, steps: usize) -> CliResult<()> {
    if steps < 2 {
        return Err(CliError::Config("--steps must be >= 2".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let matern = CovarianceModel::Matern { nu: 4.0, ell: 1.0 };
    let bargmann_fock = CovarianceModel::SquaredExponential { a: 5.0 };
    let ks = [0u32, 1, 100];
    let panels: [(&str, &CovarianceModel, f64, f64, f64); 3] = [
        ("panel_a.csv", &matern, 0.75, -3.0, -1.5),
        ("panel_b.csv", &matern, 3.0, -4.0, -1.5),
        ("panel_c.csv", &bargmann_fock, 0.0, -2.2, -1.95),
    ];
    for (name, model, big_v, v_min, v_max) in panels {
        let vs = grid_points(v_min, v_max, steps);
        let body = theta_csv(model, &DomainSpec::AbstractVolume { v: big_v }, &ks, &vs)?;
        emit(Some(&out_dir.join(name)), &body)?;
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numeric(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}
