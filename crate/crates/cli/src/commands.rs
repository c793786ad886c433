use chi2norm::bounds::{corollary_bound, theorem_bound};
use chi2norm::constants::{c_of_p, g, g_sym, table1, IndexSet};
use chi2norm::distances::{
    chi2_direct, chi2_series, chi2_to_kl_bound, chi2_to_tv_bound, hermite_profile, hermite_profile_adaptive,
};
use chi2norm::subgaussian::{mgf_check, symmetric_t_grid, threshold};
use chi2norm::{Chi2Result, HermiteProfile, QuadratureSpec, StandardizedDensity, ThresholdSet};

use crate::args::{BoundArgs, Chi2Args, Chi2MethodArg, ConstantsArgs, PlotArgs, Table1Args};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Format, Report, Table, Value};

/// Slack added to the error estimates when comparing direct and series χ².
pub const AGREEMENT_SLACK: f64 = 1e-6;

pub fn density_with_sum(name: &str, n: Option<usize>) -> Result<StandardizedDensity, CliError> {
    let base = StandardizedDensity::from_name(name)?;
    match n {
        None | Some(1) => Ok(base),
        Some(0) => Err(CliError::Usage("--n must be at least 1".into())),
        Some(n) => Ok(base.normalized_sum(n)?),
    }
}

pub fn profile_for(density: &StandardizedDensity, cfg: &RunConfig, spec: &QuadratureSpec) -> Result<HermiteProfile, CliError> {
    Ok(match cfg.order {
        Some(order) => hermite_profile(density, order, spec)?,
        None => hermite_profile_adaptive(density, spec)?,
    })
}

fn chi2_row(label: &str, r: &Chi2Result) -> Result<Vec<Value>, CliError> {
    Ok(vec![
        label.into(),
        r.method.name().into(),
        r.value.into(),
        r.error_estimate.into(),
        r.truncation_order.into(),
        chi2_to_tv_bound(r.value)?.into(),
        chi2_to_kl_bound(r.value)?.into(),
        r.warning.clone().into(),
    ])
}

pub fn chi2(args: &Chi2Args, cfg: &RunConfig) -> Result<Report, CliError> {
    let spec = cfg.quadrature()?;
    let density = density_with_sum(&args.dist, args.n)?;
    let direct = match args.method {
        Chi2MethodArg::Series => None,
        _ => Some(chi2_direct(&density, &spec)?),
    };
    let series = match args.method {
        Chi2MethodArg::Direct => None,
        _ => Some(chi2_series(&profile_for(&density, cfg, &spec)?)),
    };

    let mut report = Report::new("chi2");
    let mut t = Table::new(
        "chi2",
        &["dist", "method", "value", "error_estimate", "truncation_order", "tv_bound", "kl_bound", "warning"],
    );
    for r in direct.iter().chain(series.iter()) {
        t.push(chi2_row(density.label(), r)?);
    }
    report.tables.push(t);
    if let (Some(d), Some(s)) = (&direct, &series) {
        let mut a = Table::new("agreement", &["direct", "series", "difference", "allowance", "agree"]);
        a.push(vec![
            d.value.into(),
            s.value.into(),
            (d.value - s.value).abs().into(),
            (AGREEMENT_SLACK + d.error_estimate + s.error_estimate).into(),
            d.agrees_with(s, AGREEMENT_SLACK).into(),
        ]);
        report.tables.push(a);
    }
    Ok(report)
}

pub fn constants(args: &ConstantsArgs) -> Result<Report, CliError> {
    let e = c_of_p(args.set, args.p, args.method)?;
    let mut t = Table::new(
        "constants",
        &["set", "p", "method", "value", "argmax_s", "certified", "search_cutoff"],
    );
    t.push(vec![
        e.set.name().into(),
        e.p.into(),
        e.method.name().into(),
        e.value.into(),
        e.argmax_s.into(),
        e.certified.into(),
        e.search_cutoff.into(),
    ]);
    let mut report = Report::new("constants");
    report.tables.push(t);
    Ok(report)
}

pub fn table1_report(args: &Table1Args, format: Format) -> Result<Report, CliError> {
    let rows = table1()?;
    let mut report = Report::new("table1");
    if args.detail {
        let mut t = Table::new(
            "table1",
            &["set", "n", "p", "value", "rounded_up", "reference", "within_2e-4", "argmax_s", "certified"],
        );
        for r in &rows {
            t.push(vec![
                r.estimate.set.name().into(),
                r.n.into(),
                r.estimate.p.into(),
                r.estimate.value.into(),
                r.rounded_up.into(),
                r.reference.into(),
                r.matches_reference(2e-4).into(),
                r.estimate.argmax_s.into(),
                r.estimate.certified.into(),
            ]);
        }
        report.tables.push(t);
        return Ok(report);
    }
    let mut columns = vec!["set".to_string()];
    columns.extend((2..=10).map(|n| format!("n={n}")));
    let mut t = Table {
        name: "table1".into(),
        columns,
        rows: Vec::new(),
    };
    for set in [IndexSet::Basic, IndexSet::Symmetric] {
        let mut row: Vec<Value> = vec![set.name().into()];
        for r in rows.iter().filter(|r| r.estimate.set == set) {
            row.push(match format {
                Format::Table => Value::Text(format!("{:.4}", r.rounded_up)),
                _ => r.estimate.value.into(),
            });
        }
        t.push(row);
    }
    report.tables.push(t);
    if format == Format::Table {
        report.notes.push("C_J(1/n), rounded up at the fourth decimal".into());
    }
    Ok(report)
}

pub fn bound(args: &BoundArgs, cfg: &RunConfig) -> Result<Report, CliError> {
    let chi2s = match (&args.per_var, args.avg_chi2) {
        (Some(values), _) => {
            if let Some(n) = args.n {
                if n != values.len() {
                    return Err(CliError::Usage(format!(
                        "--n {n} does not match {} --per-var values",
                        values.len()
                    )));
                }
            }
            values.clone()
        }
        (None, Some(avg)) => {
            let n = args.n.ok_or_else(|| CliError::Usage("--avg-chi2 needs --n".into()))?;
            vec![avg; n]
        }
        (None, None) => return Err(CliError::Usage("give --avg-chi2 or --per-var".into())),
    };
    let n = chi2s.len();
    let mut r = theorem_bound(n, &chi2s, args.symmetric)?;
    if let Some(name) = &args.oracle {
        let spec = cfg.quadrature()?;
        let d = density_with_sum(name, Some(n))?;
        r = r.with_oracle(chi2_direct(&d, &spec)?.value);
    }

    let mut report = Report::new("bound");
    let mut t = Table::new(
        "bound",
        &["n", "symmetric", "average", "leading_term", "correction", "total", "oracle_chi2", "sound"],
    );
    t.push(vec![
        r.n.into(),
        r.symmetric.into(),
        r.average.into(),
        r.leading_term.into(),
        r.correction.into(),
        r.total.into(),
        r.oracle_chi2.into(),
        r.is_sound(0.0).into(),
    ]);
    report.tables.push(t);

    let mut c = Table::new("constants", &["k", if r.symmetric { "L_k" } else { "D_k" }]);
    for (i, v) in r.constants.iter().enumerate() {
        c.push(vec![(i + 2).into(), (*v).into()]);
    }
    report.tables.push(c);

    let mut cor = Table::new(
        "corollary",
        &["status", "ratio", "product_factor", "product_cutoff", "constant", "absolute_constant", "bound"],
    );
    match corollary_bound(n, r.average, r.symmetric) {
        Ok(b) => cor.push(vec![
            "ok".into(),
            b.ratio.into(),
            b.product_factor.into(),
            b.product_cutoff.into(),
            b.constant.into(),
            b.absolute_constant.into(),
            b.bound.into(),
        ]),
        Err(chi2norm::Error::Precondition(msg)) => {
            cor.push(vec![
                "refused".into(),
                Value::Missing,
                Value::Missing,
                Value::Missing,
                Value::Missing,
                Value::Missing,
                Value::Missing,
            ]);
            report.notes.push(format!("corollary refused: {msg}"));
        }
        Err(e) => return Err(e.into()),
    }
    report.tables.push(cor);
    Ok(report)
}

pub fn subgaussian_threshold(set: Option<ThresholdSet>) -> Report {
    let sets = match set {
        Some(s) => vec![s],
        None => vec![ThresholdSet::FirstMoment, ThresholdSet::Basic, ThresholdSet::Symmetric],
    };
    let mut t = Table::new("thresholds", &["set", "threshold", "argmin_x", "at_boundary"]);
    for s in sets {
        let r = threshold(s);
        t.push(vec![s.name().into(), r.threshold.into(), r.argmin_x.into(), r.at_boundary.into()]);
    }
    let mut report = Report::new("subgaussian threshold");
    report.tables.push(t);
    report
}

pub fn subgaussian_check(dist: &str, t_max: f64, t_steps: usize, cfg: &RunConfig) -> Result<Report, CliError> {
    if !(t_max > 0.0 && t_max.is_finite()) || t_steps == 0 {
        return Err(CliError::Usage("--t-max must be positive and --t-steps at least 1".into()));
    }
    let spec = cfg.quadrature()?;
    let density = StandardizedDensity::from_name(dist)?;
    let margins = mgf_check(&density, &symmetric_t_grid(t_max, t_steps), &spec)?;
    let mut t = Table::new("margins", &["t", "mgf", "margin", "positive"]);
    for m in &margins {
        t.push(vec![m.t.into(), m.mgf.into(), m.margin.into(), (m.margin > 0.0).into()]);
    }
    let chi2 = chi2_direct(&density, &spec)?;
    let set = if density.is_symmetric() {
        ThresholdSet::Symmetric
    } else {
        ThresholdSet::Basic
    };
    let th = threshold(set);
    let min_margin = margins.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min);
    let mut s = Table::new(
        "summary",
        &["dist", "chi2", "threshold_set", "threshold", "sufficient", "min_margin", "all_positive"],
    );
    s.push(vec![
        density.label().into(),
        chi2.value.into(),
        set.name().into(),
        th.threshold.into(),
        (chi2.value < th.threshold).into(),
        min_margin.into(),
        (min_margin > 0.0).into(),
    ]);
    let mut report = Report::new("subgaussian check");
    report.tables.push(t);
    report.tables.push(s);
    report
        .notes
        .push("margins are sampled on a grid of t; they do not prove the condition for all t".into());
    Ok(report)
}

pub fn plotdata(args: &PlotArgs) -> Result<Report, CliError> {
    if args.points < 2 || !(args.x_max > args.x_min) || args.x_min < 0.0 {
        return Err(CliError::Usage("need 0 <= x-min < x-max and at least 2 points".into()));
    }
    let mut t = Table::new("plotdata", &["x", "g", "g_sym"]);
    let step = (args.x_max - args.x_min) / (args.points - 1) as f64;
    for i in 0..args.points {
        let x = args.x_min + step * i as f64;
        t.push(vec![x.into(), g(x).into(), g_sym(x).into()]);
    }
    let mut report = Report::new("plotdata");
    report.tables.push(t);
    Ok(report)
}
