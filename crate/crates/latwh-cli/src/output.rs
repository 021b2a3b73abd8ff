//! Deterministic file emission: CSV tables and the JSON run manifest.
//! Complex values are written as separate re/im columns with a fixed
//! exponent format, so identical configs produce byte-identical files.

use latwh::field::LatticeField;
use latwh::C64;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

pub fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", parent.display())))?;
    }
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(std::io::BufWriter::new(file))
}

/// Field schema: `x,y,re,im,abs,re_total`.
pub fn write_field_csv(
    path: &Path,
    scattered: &LatticeField,
    total: &LatticeField,
) -> Result<(), CliError> {
    let mut out = create(path)?;
    writeln!(out, "x,y,re,im,abs,re_total").map_err(io_err)?;
    for (x, y, v) in scattered.iter() {
        let t = total.get(x, y);
        writeln!(
            out,
            "{x},{y},{},{},{},{}",
            fmt(v.re),
            fmt(v.im),
            fmt(v.norm()),
            fmt(t.re)
        )
        .map_err(io_err)?;
    }
    Ok(())
}

/// Segment schema: `x,re,im,abs`.
pub fn write_segment_csv(path: &Path, xs: &[i64], values: &[C64]) -> Result<(), CliError> {
    let mut out = create(path)?;
    writeln!(out, "x,re,im,abs").map_err(io_err)?;
    for (x, v) in xs.iter().zip(values) {
        writeln!(out, "{x},{},{},{}", fmt(v.re), fmt(v.im), fmt(v.norm())).map_err(io_err)?;
    }
    Ok(())
}

/// Factor schema: `m,re,im`.
pub fn write_series_csv(path: &Path, series: &latwh::LaurentSeries) -> Result<(), CliError> {
    let mut out = create(path)?;
    writeln!(out, "m,re,im").map_err(io_err)?;
    for (m, c) in series.iter() {
        writeln!(out, "{m},{},{}", fmt(c.re), fmt(c.im)).map_err(io_err)?;
    }
    Ok(())
}

/// Per-node kernel table: `re_z,im_z,re_H,im_H,re_h,im_h,re_r,im_r,re_lam,im_lam,re_alpha,im_alpha,re_beta,im_beta`.
pub fn write_kernel_nodes_csv(
    path: &Path,
    nodes: &[C64],
    columns: &[(&str, &[C64])],
) -> Result<(), CliError> {
    let mut out = create(path)?;
    let mut header = String::from("re_z,im_z");
    for (name, _) in columns {
        header.push_str(&format!(",re_{name},im_{name}"));
    }
    writeln!(out, "{header}").map_err(io_err)?;
    for (k, z) in nodes.iter().enumerate() {
        let mut line = format!("{},{}", fmt(z.re), fmt(z.im));
        for (_, col) in columns {
            line.push_str(&format!(",{},{}", fmt(col[k].re), fmt(col[k].im)));
        }
        writeln!(out, "{line}").map_err(io_err)?;
    }
    Ok(())
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Config(format!("write failed: {e}"))
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub version: String,
    pub command: String,
    pub scenario: ManifestScenario,
    pub numerics: ManifestNumerics,
    pub diagnostics: serde_json::Value,
    pub artifacts: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct ManifestScenario {
    pub omega_re: f64,
    pub omega_im: f64,
    pub theta_deg: f64,
    pub amplitude_re: f64,
    pub amplitude_im: f64,
    pub kind: String,
    pub n_sep: i64,
    pub m_offset: i64,
}

#[derive(Debug, Serialize)]
pub struct ManifestNumerics {
    pub samples: usize,
    pub contour_radius: f64,
    pub r_plus: f64,
    pub r_minus: f64,
    pub r_l: f64,
    pub abs_z_p: f64,
}

pub fn manifest_for(p: &latwh::Problem, command: &str) -> Manifest {
    let s = &p.scenario;
    Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        scenario: ManifestScenario {
            omega_re: s.omega.re,
            omega_im: s.omega.im,
            theta_deg: s.theta.to_degrees(),
            amplitude_re: s.amplitude.re,
            amplitude_im: s.amplitude.im,
            kind: match s.kind {
                latwh::DefectKind::CrackPair => "crack".into(),
                latwh::DefectKind::ConstraintPair => "constraint".into(),
            },
            n_sep: s.n_sep,
            m_offset: s.m_offset,
        },
        numerics: ManifestNumerics {
            samples: p.grid.len(),
            contour_radius: p.grid.radius(),
            r_plus: p.r_plus,
            r_minus: p.r_minus,
            r_l: p.r_l,
            abs_z_p: p.wave.z_p.norm(),
        },
        diagnostics: serde_json::Value::Null,
        artifacts: Vec::new(),
    }
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<(), CliError> {
    let mut out = create(path)?;
    let text = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::Config(format!("manifest serialization: {e}")))?;
    out.write_all(text.as_bytes()).map_err(io_err)?;
    out.write_all(b"\n").map_err(io_err)?;
    Ok(())
}

pub fn out_path(dir: &str, name: &str) -> PathBuf {
    Path::new(dir).join(name)
}
