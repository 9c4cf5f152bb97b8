//! Deterministic report writers. Floats are serialized with 17 significant
//! digits and fields in a fixed order, so identical runs produce
//! byte-identical files.

use lefgpd::lefschetz::ConvergenceReport;
use lefgpd::linalg::SquareMatrix;
use std::fmt::Write;

/// 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => fmt_f64(v),
        None => "null".into(),
    }
}

fn fmt_vec(xs: &[f64]) -> String {
    let inner: Vec<String> = xs.iter().map(|&v| fmt_f64(v)).collect();
    format!("[{}]", inner.join(", "))
}

fn fmt_rows(rows: &[Vec<f64>]) -> String {
    let inner: Vec<String> = rows.iter().map(|r| fmt_vec(r)).collect();
    format!("[{}]", inner.join(", "))
}

/// The verification report as a JSON document.
pub fn report_to_json(report: &ConvergenceReport<f64>) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let verdict = if report.passed { "pass" } else { "fail" };
    let _ = writeln!(out, "  \"verdict\": \"{verdict}\",");
    out.push_str("  \"limits\": {\n");
    let _ = writeln!(
        out,
        "    \"geometric_extrapolated\": {},",
        fmt_f64(report.geometric_extrapolated)
    );
    let _ = writeln!(out, "    \"spectral\": {},", fmt_opt(report.spectral));
    let _ = writeln!(
        out,
        "    \"fixed_point_side\": {},",
        fmt_f64(report.fixed_point_side)
    );
    let _ = writeln!(
        out,
        "    \"cohomological\": {}",
        fmt_opt(report.cohomological)
    );
    out.push_str("  },\n");
    let _ = writeln!(
        out,
        "  \"spectral_max_deviation\": {},",
        fmt_opt(report.spectral_max_deviation)
    );

    out.push_str("  \"fixed_points\": [\n");
    for (i, fp) in report.fixed_points.iter().enumerate() {
        let comma = if i + 1 < report.fixed_points.len() {
            ","
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "    {{\"location\": {}, \"differential\": {}, \"weight\": {}, \"str_zeta\": {}}}{comma}",
            fmt_vec(&fp.location),
            fmt_rows(&fp.differential),
            fmt_f64(fp.weight),
            fmt_f64(fp.str_zeta)
        );
    }
    out.push_str("  ],\n");

    out.push_str("  \"ladder\": [\n");
    for (i, row) in report.rows.iter().enumerate() {
        let comma = if i + 1 < report.rows.len() { "," } else { "" };
        let _ = writeln!(
            out,
            "    {{\"t\": {}, \"tau\": {}, \"grid_points_per_axis\": {}, \"str_t_geometric\": {}, \"str_spectral\": {}, \"abs_error\": {}}}{comma}",
            fmt_f64(row.t),
            fmt_f64(row.tau),
            row.grid_points_per_axis,
            fmt_f64(row.geometric),
            fmt_opt(row.spectral),
            fmt_f64(row.abs_error)
        );
    }
    out.push_str("  ],\n");

    out.push_str("  \"comparisons\": [\n");
    for (i, cmp) in report.comparisons.iter().enumerate() {
        let comma = if i + 1 < report.comparisons.len() {
            ","
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "    {{\"name\": \"{}\", \"error\": {}, \"tolerance\": {}, \"pass\": {}}}{comma}",
            cmp.name,
            fmt_f64(cmp.error),
            fmt_f64(cmp.tolerance),
            cmp.pass
        );
    }
    out.push_str("  ]\n");
    out.push_str("}\n");
    out
}

/// Exact sweep CSV header.
pub const SWEEP_HEADER: &str = "t,tau,str_t_geometric,str_spectral,fixed_point_side,abs_error";

/// The ladder as a CSV table, one row per rung in descending t. The
/// str_spectral field is empty for maps without a spectral value.
pub fn report_to_csv(report: &ConvergenceReport<f64>) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for row in &report.rows {
        let spectral = match row.spectral {
            Some(v) => fmt_f64(v),
            None => String::new(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{spectral},{},{}",
            fmt_f64(row.t),
            fmt_f64(row.tau),
            fmt_f64(row.geometric),
            fmt_f64(report.fixed_point_side),
            fmt_f64(row.abs_error)
        );
    }
    out
}

/// Model-kernel output: the total integral, its distance from the identity,
/// and kernel samples on the declared grid.
pub fn model_kernel_to_json(
    order: u32,
    dimension: usize,
    total: &SquareMatrix<f64>,
    samples: &[(Vec<f64>, SquareMatrix<f64>)],
) -> String {
    let rank = total.dim();
    let matrix_rows =
        |m: &SquareMatrix<f64>| -> Vec<Vec<f64>> { (0..rank).map(|i| m.row(i).to_vec()).collect() };
    let mut deviation = 0.0f64;
    for i in 0..rank {
        for j in 0..rank {
            let target = if i == j { 1.0 } else { 0.0 };
            deviation = deviation.max((total[(i, j)] - target).abs());
        }
    }

    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"order\": {order},");
    let _ = writeln!(out, "  \"dimension\": {dimension},");
    let _ = writeln!(out, "  \"rank\": {rank},");
    let _ = writeln!(
        out,
        "  \"total_integral\": {},",
        fmt_rows(&matrix_rows(total))
    );
    let _ = writeln!(out, "  \"max_identity_deviation\": {},", fmt_f64(deviation));
    out.push_str("  \"samples\": [\n");
    for (i, (point, value)) in samples.iter().enumerate() {
        let comma = if i + 1 < samples.len() { "," } else { "" };
        let _ = writeln!(
            out,
            "    {{\"point\": {}, \"value\": {}}}{comma}",
            fmt_vec(point),
            fmt_rows(&matrix_rows(value))
        );
    }
    out.push_str("  ]\n");
    out.push_str("}\n");
    out
}
