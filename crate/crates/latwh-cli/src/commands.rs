//! Subcommand implementations. Every command returns a JSON summary for
//! stdout; file artifacts land under the configured output directory.

use latwh::factor::cauchy_factorize;
use latwh::field::{
    incident_lattice_field, solve, synthesize_field, FieldEngine, FieldKind, Solution,
};
use latwh::oracle::{extract_traces, solve_grid};
use latwh::{C64, DefectKind, Problem};
use serde_json::{json, Value};
use std::path::Path;

use crate::config::RunConfig;
use crate::output;
use crate::CliError;

fn numeric(e: latwh::Error) -> CliError {
    CliError::Numeric(e.to_string())
}

fn problem(cfg: &RunConfig) -> Result<Problem, CliError> {
    Problem::new(cfg.scenario()?, cfg.numerics()?).map_err(numeric)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FactorFunction {
    Lk,
    Lc,
    Alpha,
    Beta,
}

pub fn run_factorize(
    cfg: &RunConfig,
    function: FactorFunction,
    n_power: Option<i64>,
    dump_nodes: bool,
) -> Result<Value, CliError> {
    let p = problem(cfg)?;
    let n = n_power.unwrap_or(p.scenario.n_sep);
    let samples: Vec<C64> = match function {
        FactorFunction::Lk => (0..p.grid.len()).map(|k| p.bundle.kernels_at(k).0).collect(),
        FactorFunction::Lc => (0..p.grid.len()).map(|k| p.bundle.kernels_at(k).1).collect(),
        FactorFunction::Alpha => p.bundle.alpha_beta_nodes(n, p.scenario.kind).0,
        FactorFunction::Beta => p.bundle.alpha_beta_nodes(n, p.scenario.kind).1,
    };
    let pair = cauchy_factorize(&samples, &p.grid).map_err(numeric)?;
    let mut worst = 0.0f64;
    for (k, v) in samples.iter().enumerate() {
        worst = worst.max((pair.plus_nodes[k] * pair.minus_nodes[k] / v - 1.0).norm());
    }
    let dir = &cfg.outputs.out_dir;
    let plus_path = output::out_path(dir, "factor_plus.csv");
    let minus_path = output::out_path(dir, "factor_minus.csv");
    output::write_series_csv(&plus_path, &pair.plus)?;
    output::write_series_csv(&minus_path, &pair.minus)?;
    let mut artifacts = vec![
        plus_path.display().to_string(),
        minus_path.display().to_string(),
    ];
    if dump_nodes {
        let (alpha, beta) = p.bundle.alpha_beta_nodes(n, p.scenario.kind);
        let path = output::out_path(dir, "kernel_nodes.csv");
        output::write_kernel_nodes_csv(
            &path,
            p.grid.nodes(),
            &[
                ("H", &p.bundle.big_h),
                ("h", &p.bundle.h),
                ("r", &p.bundle.r),
                ("lam", &p.bundle.lam),
                ("alpha", &alpha),
                ("beta", &beta),
            ],
        )?;
        artifacts.push(path.display().to_string());
    }
    let mut manifest = output::manifest_for(&p, "factorize");
    manifest.diagnostics = json!({ "product_residual": worst, "n_power": n });
    manifest.artifacts = artifacts.clone();
    let manifest_path = output::out_path(dir, "factorize_manifest.json");
    output::write_manifest(&manifest_path, &manifest)?;
    Ok(json!({
        "command": "factorize",
        "product_residual": worst,
        "artifacts": artifacts,
    }))
}

pub fn run_solve(cfg: &RunConfig) -> Result<Value, CliError> {
    let p = problem(cfg)?;
    let sol = solve(&p).map_err(numeric)?;
    let dir = &cfg.outputs.out_dir;
    let seg_path = output::out_path(dir, "segment.csv");
    output::write_segment_csv(&seg_path, sol.segment_indices(), sol.segment_values())?;
    let diagnostics = match &sol {
        Solution::Crack(s) => json!({
            "residual": s.residual,
            "condition": s.condition,
            "unknowns": s.unknowns.len(),
        }),
        Solution::Constraint(s) => json!({
            "residual": s.residual,
            "condition": s.condition,
            "unknowns": s.w_segment.len() + 2,
            "u_m1_0_re": s.u_m10.re,
            "u_m1_0_im": s.u_m10.im,
            "u_mm1_n_re": s.u_mm1n.re,
            "u_mm1_n_im": s.u_mm1n.im,
            "ginc_max": s.ginc_max,
        }),
    };
    let mut manifest = output::manifest_for(&p, "solve");
    manifest.diagnostics = diagnostics.clone();
    manifest.artifacts = vec![seg_path.display().to_string()];
    output::write_manifest(&output::out_path(dir, "solve_manifest.json"), &manifest)?;
    Ok(json!({
        "command": "solve",
        "diagnostics": diagnostics,
        "artifacts": [seg_path.display().to_string()],
    }))
}

pub fn run_field(cfg: &RunConfig) -> Result<Value, CliError> {
    let p = problem(cfg)?;
    let sol = solve(&p).map_err(numeric)?;
    let window = cfg.window();
    let (scattered, report) = synthesize_field(&p, &sol, window).map_err(numeric)?;
    let incident = incident_lattice_field(&p.scenario, &p.wave, window);
    let total = scattered.add(&incident, FieldKind::Total);
    let dir = &cfg.outputs.out_dir;
    let field_path = output::out_path(dir, "field.csv");
    output::write_field_csv(&field_path, &scattered, &total)?;
    let seg_path = output::out_path(dir, "segment.csv");
    output::write_segment_csv(&seg_path, sol.segment_indices(), sol.segment_values())?;
    let mut artifacts = vec![
        field_path.display().to_string(),
        seg_path.display().to_string(),
    ];
    if cfg.outputs.emit_factors {
        let plus = output::out_path(dir, "alpha_plus.csv");
        let minus = output::out_path(dir, "alpha_minus.csv");
        output::write_series_csv(&plus, &p.suite.alpha.plus)?;
        output::write_series_csv(&minus, &p.suite.alpha.minus)?;
        artifacts.push(plus.display().to_string());
        artifacts.push(minus.display().to_string());
    }
    let diagnostics = json!({ "wh_residual": report.wh_residual });
    let mut manifest = output::manifest_for(&p, "field");
    manifest.diagnostics = diagnostics.clone();
    manifest.artifacts = artifacts.clone();
    output::write_manifest(&output::out_path(dir, "field_manifest.json"), &manifest)?;
    Ok(json!({
        "command": "field",
        "diagnostics": diagnostics,
        "artifacts": artifacts,
    }))
}

pub fn run_oracle(cfg: &RunConfig) -> Result<Value, CliError> {
    let p = problem(cfg)?;
    let ng = p.numerics.oracle_ng_for(&p.scenario);
    let gs = solve_grid(&p.scenario, &p.wave, ng).map_err(numeric)?;
    let traces = extract_traces(&gs, &p.scenario, &p.wave).map_err(numeric)?;
    let window = cfg.window();
    if window.x_lo < -ng || window.x_hi > ng || window.y_lo < -ng || window.y_hi > ng {
        return Err(CliError::Config(format!(
            "output window exceeds the oracle grid (Ng = {ng})"
        )));
    }
    let mut scattered = latwh::field::LatticeField::zeros(window, FieldKind::Scattered);
    for y in window.y_lo..=window.y_hi {
        for x in window.x_lo..=window.x_hi {
            scattered.set(x, y, gs.field.get(x, y));
        }
    }
    let incident = incident_lattice_field(&p.scenario, &p.wave, window);
    let total = scattered.add(&incident, FieldKind::Total);
    let dir = &cfg.outputs.out_dir;
    let field_path = output::out_path(dir, "oracle_field.csv");
    output::write_field_csv(&field_path, &scattered, &total)?;
    let seg_path = output::out_path(dir, "oracle_segment.csv");
    output::write_segment_csv(&seg_path, &traces.indices, &traces.segment)?;
    let diagnostics = json!({
        "ng": ng,
        "iterations": gs.stats.iterations,
        "relative_residual": gs.stats.relative_residual,
    });
    let mut manifest = output::manifest_for(&p, "oracle");
    manifest.diagnostics = diagnostics.clone();
    manifest.artifacts = vec![
        field_path.display().to_string(),
        seg_path.display().to_string(),
    ];
    output::write_manifest(&output::out_path(dir, "oracle_manifest.json"), &manifest)?;
    Ok(json!({
        "command": "oracle",
        "diagnostics": diagnostics,
        "artifacts": manifest.artifacts,
    }))
}

/// Parsed CSV with key columns (x or x,y) and complex value columns.
struct Table {
    keyed: std::collections::BTreeMap<Vec<i64>, (f64, f64)>,
    has_y: bool,
}

fn read_table(path: &Path) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Config(format!("{} is empty", path.display())))?;
    let cols: Vec<&str> = header.split(',').collect();
    let has_y = cols.get(1) == Some(&"y");
    let re_col = cols
        .iter()
        .position(|c| *c == "re")
        .ok_or_else(|| CliError::Config(format!("{} lacks a re column", path.display())))?;
    let im_col = cols
        .iter()
        .position(|c| *c == "im")
        .ok_or_else(|| CliError::Config(format!("{} lacks an im column", path.display())))?;
    let mut keyed = std::collections::BTreeMap::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        let parse_i = |i: usize| -> Result<i64, CliError> {
            parts
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CliError::Config(format!("bad row {} in {}", lineno + 2, path.display())))
        };
        let parse_f = |i: usize| -> Result<f64, CliError> {
            parts
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CliError::Config(format!("bad row {} in {}", lineno + 2, path.display())))
        };
        let key = if has_y {
            vec![parse_i(0)?, parse_i(1)?]
        } else {
            vec![parse_i(0)?]
        };
        keyed.insert(key, (parse_f(re_col)?, parse_f(im_col)?));
    }
    Ok(Table { keyed, has_y })
}

pub fn run_compare(
    left: &Path,
    right: &Path,
    out: Option<&Path>,
) -> Result<Value, CliError> {
    let lt = read_table(left)?;
    let rt = read_table(right)?;
    if lt.has_y != rt.has_y {
        return Err(CliError::Config(
            "cannot compare a field table against a segment table".into(),
        ));
    }
    let mut rows = Vec::new();
    let mut max_abs = 0.0f64;
    let mut max_rel = 0.0f64;
    let mut scale = 0.0f64;
    for (_, (re, im)) in &lt.keyed {
        scale = scale.max((re * re + im * im).sqrt());
    }
    for (key, (lre, lim)) in &lt.keyed {
        let Some((rre, rim)) = rt.keyed.get(key) else {
            continue;
        };
        let abs = ((lre - rre).powi(2) + (lim - rim).powi(2)).sqrt();
        let mag = (rre * rre + rim * rim).sqrt();
        let rel = if mag > 0.0 { abs / mag } else { abs };
        max_abs = max_abs.max(abs);
        max_rel = max_rel.max(rel);
        rows.push((key.clone(), abs, rel));
    }
    if rows.is_empty() {
        return Err(CliError::Config(
            "the two tables share no sites to compare".into(),
        ));
    }
    if let Some(out) = out {
        let mut w = std::fs::File::create(out)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", out.display())))?;
        use std::io::Write;
        if lt.has_y {
            writeln!(w, "x,y,abs_err,rel_err").map_err(|e| CliError::Config(e.to_string()))?;
        } else {
            writeln!(w, "x,abs_err,rel_err").map_err(|e| CliError::Config(e.to_string()))?;
        }
        for (key, abs, rel) in &rows {
            let key_text: Vec<String> = key.iter().map(|k| k.to_string()).collect();
            writeln!(
                w,
                "{},{},{}",
                key_text.join(","),
                output::fmt(*abs),
                output::fmt(*rel)
            )
            .map_err(|e| CliError::Config(e.to_string()))?;
        }
    }
    Ok(json!({
        "command": "compare",
        "rows": rows.len(),
        "max_abs_err": max_abs,
        "max_rel_err": max_rel,
        "left_scale": scale,
    }))
}

pub fn run_checks(cfg: &RunConfig) -> Result<Value, CliError> {
    let p = problem(cfg)?;
    let mut checks: Vec<Value> = Vec::new();
    let mut all_pass = true;
    fn push(checks: &mut Vec<Value>, name: &str, value: f64, threshold: f64) -> bool {
        let pass = value < threshold;
        checks.push(json!({
            "name": name,
            "value": value,
            "threshold": threshold,
            "pass": pass,
        }));
        pass
    }

    // kernel identities on the contour
    let mut worst_char = 0.0f64;
    let mut worst_branch = 0.0f64;
    for k in 0..p.grid.len() {
        let lam = p.bundle.lam[k];
        worst_char = worst_char.max((lam + 1.0 / lam - p.bundle.big_q[k]).norm());
        worst_branch = worst_branch
            .max((p.bundle.h[k] * p.bundle.h[k] - p.bundle.big_h[k]).norm())
            .max((p.bundle.r[k] * p.bundle.r[k] - p.bundle.big_r[k]).norm());
    }
    all_pass &= push(&mut checks, "kernel_characteristic", worst_char, 1e-10);
    all_pass &= push(&mut checks, "kernel_branch", worst_branch, 1e-13);

    // factor product residuals
    let (alpha_nodes, beta_nodes) = p
        .bundle
        .alpha_beta_nodes(p.scenario.n_sep, p.scenario.kind);
    let mut worst_prod = 0.0f64;
    for k in 0..p.grid.len() {
        worst_prod = worst_prod.max(
            (p.suite.alpha.plus_nodes[k] * p.suite.alpha.minus_nodes[k] / alpha_nodes[k] - 1.0)
                .norm(),
        );
        worst_prod = worst_prod.max(
            (p.suite.beta.plus_nodes[k] * p.suite.beta.minus_nodes[k] / beta_nodes[k] - 1.0)
                .norm(),
        );
    }
    all_pass &= push(&mut checks, "factor_product", worst_prod, 1e-8);

    // reduced solve and Wiener-Hopf residual
    let sol = solve(&p).map_err(numeric)?;
    let (reduced_residual, condition, ginc) = match &sol {
        Solution::Crack(s) => (s.residual, s.condition, None),
        Solution::Constraint(s) => (s.residual, s.condition, Some(s.ginc_max)),
    };
    let rhs_scale: f64 = match &sol {
        Solution::Crack(s) => s.rhs.iter().map(|v| v.norm()).fold(1e-30, f64::max),
        Solution::Constraint(s) => s.rhs.iter().map(|v| v.norm()).fold(1e-30, f64::max),
    };
    all_pass &= push(&mut checks, "reduced_residual", reduced_residual / rhs_scale.max(1e-30), 1e-8);
    all_pass &= push(&mut checks, "reduced_condition", condition, 1e12);
    if let Some(g) = ginc {
        all_pass &= push(&mut checks, "ginc", g, 1e-8);
    }
    let engine = FieldEngine::new(&p, &sol).map_err(numeric)?;
    all_pass &= push(&mut checks, "wh_residual", engine.wh_residual, p.numerics.wh_residual_tol);

    // field-level checks on a small window
    let window = latwh::field::Window::centered(6, 6);
    let scattered = engine.field(window);
    let res = latwh::field::helmholtz_residual_max(&scattered, p.scenario.omega, |x, y| {
        latwh::field::is_defect_site(&p.scenario, x, y)
    });
    all_pass &= push(
        &mut checks,
        "helmholtz_residual",
        res / scattered.max_abs().max(1e-30),
        1e-6,
    );
    if p.scenario.kind == DefectKind::ConstraintPair {
        let incident = incident_lattice_field(&p.scenario, &p.wave, window);
        let total = scattered.add(&incident, FieldKind::Total);
        let mut worst = 0.0f64;
        for (x, y, v) in total.iter() {
            if latwh::field::is_defect_site(&p.scenario, x, y) {
                worst = worst.max(v.norm());
            }
        }
        all_pass &= push(&mut checks, "pinned_sites", worst / total.max_abs().max(1e-30), 1e-6);
    }

    // contour independence: re-run on a second admissible radius
    let mut num2 = p.numerics.clone();
    num2.contour_radius = Some(p.grid.radius() * 1.01);
    match Problem::new(p.scenario.clone(), num2) {
        Ok(p2) => {
            let sol2 = solve(&p2).map_err(numeric)?;
            let engine2 = FieldEngine::new(&p2, &sol2).map_err(numeric)?;
            let f2 = engine2.field(window);
            let mut dev = 0.0f64;
            for (x, y, v) in scattered.iter() {
                dev = dev.max((f2.get(x, y) - v).norm());
            }
            all_pass &= push(
                &mut checks,
                "contour_independence",
                dev / scattered.max_abs().max(1e-30),
                1e-8,
            );
        }
        Err(e) => {
            checks.push(json!({
                "name": "contour_independence",
                "pass": false,
                "error": e.to_string(),
            }));
            all_pass = false;
        }
    }

    // constraint boundary scalars against the synthesized field
    if let Solution::Constraint(cs) = &sol {
        let (d1, d2) =
            latwh::constraint::verify_scalars_via_field(&p, cs).map_err(numeric)?;
        all_pass &= push(&mut checks, "boundary_scalars", d1.max(d2), 1e-8);
    }

    Ok(json!({
        "command": "checks",
        "pass": all_pass,
        "checks": checks,
    }))
}

pub fn checks_passed(summary: &Value) -> bool {
    summary["pass"].as_bool().unwrap_or(false)
}
