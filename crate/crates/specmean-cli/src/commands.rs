//! One handler per subcommand: resolve parameters, run the experiment, and
//! assemble rows plus pass/fail assertions.

use serde_json::{json, Value};

use specmean::dim2;
use specmean::eigen::{self, EigenSelect};
use specmean::field::{Field, C64};
use specmean::integrals::{self, WeightVector};
use specmean::linalg::{self, DiagonalSpec};
use specmean::matrix::{AnyMatrix, SquareMatrix};
use specmean::perturb;
use specmean::sampling::{self, Group, InvariantMeasureSpec, SeededStream, SingularLaw};
use specmean::spectral;
use specmean::stats;
use specmean::tolerances;

use crate::report::{merge_row, row, Assertion, Report};
use crate::{CliError, Resolved};

type CmdResult = Result<Report, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn run_err(e: specmean::Error) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn parse_weights(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("invalid numeric list entry {tok:?}")))
        })
        .collect()
}

/// `lo:hi:steps[:log|lin]`.
pub fn parse_t_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() < 3 || parts.len() > 4 {
        return Err(usage(format!(
            "t-grid must be lo:hi:steps[:log|lin], got {s:?}"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| usage(format!("bad t-grid lower bound {:?}", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| usage(format!("bad t-grid upper bound {:?}", parts[1])))?;
    let steps: usize = parts[2]
        .parse()
        .map_err(|_| usage(format!("bad t-grid step count {:?}", parts[2])))?;
    let log = match parts.get(3).copied().unwrap_or("lin") {
        "log" => true,
        "lin" => false,
        other => return Err(usage(format!("t-grid spacing must be log or lin, got {other:?}"))),
    };
    if steps == 0 || hi < lo || hi.is_nan() || lo.is_nan() || (log && lo <= 0.0) {
        return Err(usage(format!("degenerate t-grid {s:?}")));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..steps)
        .map(|k| {
            let f = k as f64 / (steps - 1) as f64;
            if log {
                (lo.ln() + f * (hi.ln() - lo.ln())).exp()
            } else {
                lo + f * (hi - lo)
            }
        })
        .collect())
}

fn load_matrix(path: &std::path::Path) -> Result<AnyMatrix, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("bad matrix JSON: {e}")))
}

fn resolve_real_matrix(
    matrix: &Option<std::path::PathBuf>,
    diag: &Option<String>,
    dim: Option<usize>,
) -> Result<(SquareMatrix<f64>, String), CliError> {
    match (matrix, diag) {
        (Some(_), Some(_)) => Err(usage("give either --matrix or --diag, not both")),
        (Some(path), None) => match load_matrix(path)? {
            AnyMatrix::Real(m) => Ok((m, path.display().to_string())),
            AnyMatrix::Complex(_) => Err(usage("this subcommand takes a real matrix")),
        },
        (None, Some(spec)) => {
            let entries = parse_weights(spec)?;
            Ok((SquareMatrix::diagonal(&entries), format!("diag({spec})")))
        }
        (None, None) => {
            let n = dim.ok_or_else(|| usage("need --dim when no matrix is given"))?;
            if n < 2 {
                return Err(usage("need --dim >= 2"));
            }
            // Default subject: the extremal exponential direction at t = 1.
            let mut d = vec![0.0; n];
            d[0] = 1.0;
            d[n - 1] = -1.0;
            let spec = DiagonalSpec::new(d, None).map_err(run_err)?;
            Ok((spec.matrix(1.0), format!("diag-exp(1,0,..,-1)@t=1,n={n}")))
        }
    }
}

fn group_of(r: &Resolved) -> Result<Group, CliError> {
    match &r.group {
        None => Ok(Group::Orthogonal),
        Some(s) => s.parse::<Group>().map_err(run_err),
    }
}

fn base_config(r: &Resolved, subcommand: &str, extra: &[(&str, Value)]) -> Value {
    let mut cfg = json!({
        "subcommand": subcommand,
        "seed": r.seed,
        "samples": r.samples,
        "dim": r.dim,
        "group": r.group,
        "field": r.field,
        "format": r.format,
        "threads": r.threads,
    });
    if let Value::Object(map) = &mut cfg {
        for (k, v) in extra {
            map.insert((*k).to_string(), v.clone());
        }
    }
    cfg
}

// ------------------------------------------------------------- sphere-integral

pub fn sphere_integral(r: &Resolved, weights: &str, quadrature: bool) -> CmdResult {
    let seed = r.require_seed()?;
    let samples = r.samples.unwrap_or(100_000);
    let weights_vec = parse_weights(weights)?;
    let a = WeightVector::new(weights_vec).map_err(run_err)?;
    let mut stream = SeededStream::new(seed);
    let est = integrals::sphere_log_integral(&a, samples, &mut stream).map_err(run_err)?;

    let mut rows = vec![json!({
        "quantity": "sphere-log-integral",
        "dim": a.dim(),
        "weights_or_matrix_id": weights,
        "mean": est.mean,
        "std_error": est.std_error,
        "n_samples": est.n_samples,
        "seed": est.seed,
        "method": "mc",
    })];
    let mut summary = Vec::new();

    if a.weights().iter().all(|&x| x == a.weights()[0]) {
        summary.push(Assertion::check(
            "equal-weights-integral-exactly-zero",
            -est.mean.abs(),
            format!("mean {}", est.mean),
        ));
    } else if a.is_sl_normalized() {
        summary.push(Assertion::check(
            "normalized-weights-nonnegative",
            est.mean + 5.0 * est.std_error,
            format!("mean {} (se {})", est.mean, est.std_error),
        ));
    }

    if quadrature {
        let value = specmean::quad::sphere_log_integral_quadrature(a.weights(), 0)
            .map_err(run_err)?;
        rows.push(json!({
            "quantity": "sphere-log-integral",
            "dim": a.dim(),
            "weights_or_matrix_id": weights,
            "mean": value,
            "std_error": 0.0,
            "n_samples": 0,
            "seed": seed,
            "method": "quad",
        }));
        summary.push(Assertion::check(
            "mc-quadrature-agreement",
            3.0 * est.std_error - (est.mean - value).abs(),
            format!("mc {} vs quad {value}", est.mean),
        ));
    }

    let config = base_config(
        r,
        "sphere-integral",
        &[
            ("weights", json!(weights)),
            ("sl_normalized", json!(a.is_sl_normalized())),
            ("quadrature", json!(quadrature)),
            ("samples", json!(samples)),
        ],
    );
    Ok(Report::new(config, rows, summary))
}

// -------------------------------------------------------------- coset-integral

pub fn coset_integral(
    r: &Resolved,
    matrix: &Option<std::path::PathBuf>,
    diag: &Option<String>,
) -> CmdResult {
    let seed = r.require_seed()?;
    let samples = r.samples.unwrap_or(100_000);
    let (m, id) = resolve_real_matrix(matrix, diag, r.dim)?;
    let mut s1 = SeededStream::new(seed);
    let two_level = integrals::coset_log_norm_integral(&m, samples, &mut s1).map_err(run_err)?;
    let mut s2 = SeededStream::new(seed).substream(1);
    let reduced = integrals::reduced_coset_integral(&m, samples, &mut s2).map_err(run_err)?;

    let rows = vec![
        json!({
            "quantity": "coset-log-norm-integral",
            "dim": m.dim(),
            "weights_or_matrix_id": id,
            "mean": two_level.estimate.mean,
            "std_error": two_level.estimate.std_error,
            "n_samples": two_level.estimate.n_samples,
            "seed": seed,
            "method": "mc-two-level",
        }),
        json!({
            "quantity": "reduced-coset-integral",
            "dim": m.dim(),
            "weights_or_matrix_id": id,
            "mean": reduced.mean,
            "std_error": reduced.std_error,
            "n_samples": reduced.n_samples,
            "seed": seed,
            "method": "mc-reduced",
        }),
    ];

    let combined = two_level.estimate.combined_std_error(&reduced);
    let mut summary = vec![Assertion::check(
        "two-level-vs-reduced",
        3.0 * combined - (two_level.estimate.mean - reduced.mean).abs(),
        format!(
            "two-level {} vs reduced {} (combined se {combined})",
            two_level.estimate.mean, reduced.mean
        ),
    )];
    let det = m.determinant().abs();
    if (det - 1.0).abs() <= 1e-8 {
        summary.push(Assertion::check(
            "coset-radius-floor",
            two_level.min_log_spectral_radius - tolerances::LOCALIZED_FLOOR,
            format!("min log rho {}", two_level.min_log_spectral_radius),
        ));
    }

    let config = base_config(
        r,
        "coset-integral",
        &[("matrix_id", json!(id)), ("samples", json!(samples))],
    );
    Ok(Report::new(config, rows, summary))
}

// ------------------------------------------------------------ spectral-average

pub fn spectral_average(
    r: &Resolved,
    matrix: &Option<std::path::PathBuf>,
    diag: &Option<String>,
) -> CmdResult {
    let seed = r.require_seed()?;
    let samples = r.samples.unwrap_or(100_000);
    let group = group_of(r)?;
    let (raw, id) = resolve_real_matrix(matrix, diag, r.dim)?;
    let (m, normalized) = if raw.is_special_linear() {
        (raw, false)
    } else {
        (linalg::normalize_to_sl(&raw).map_err(run_err)?, true)
    };
    let mut stream = SeededStream::new(seed);
    let result =
        spectral::average_log_spectral_radius(&m, group, samples, &mut stream).map_err(run_err)?;

    let rows = vec![json!({
        "dim": m.dim(),
        "group": group.label(),
        "d_vector": Value::Null,
        "t": Value::Null,
        "mean": result.estimate.mean,
        "std_error": result.estimate.std_error,
        "n_samples": result.estimate.n_samples,
        "log_sigma1": result.log_sigma1,
        "ratio": result.ratio,
        "min_integrand": result.min_integrand,
        "seed": seed,
    })];
    let summary = vec![
        Assertion::check(
            "integrand-floor",
            result.min_integrand - tolerances::LOCALIZED_FLOOR,
            format!("min integrand {}", result.min_integrand),
        ),
        Assertion::check(
            "average-nonnegative",
            result.estimate.mean + 3.0 * result.estimate.std_error,
            format!("mean {}", result.estimate.mean),
        ),
    ];
    let config = base_config(
        r,
        "spectral-average",
        &[
            ("matrix_id", json!(id)),
            ("normalized_to_sl", json!(normalized)),
            ("samples", json!(samples)),
            ("group", json!(group.label())),
        ],
    );
    Ok(Report::new(config, rows, summary))
}

// ----------------------------------------------------------- constant-estimate

pub fn constant_estimate(
    r: &Resolved,
    directions: Option<usize>,
    t_grid: &Option<String>,
) -> CmdResult {
    let seed = r.require_seed()?;
    let dim = r.dim.ok_or_else(|| usage("need --dim"))?;
    if dim < 2 {
        return Err(usage("need --dim >= 2"));
    }
    let samples = r.samples.unwrap_or(100_000);
    let group = group_of(r)?;
    let n_directions = directions.unwrap_or(20);
    if n_directions == 0 {
        return Err(usage("need at least one direction"));
    }
    let scales = parse_t_grid(t_grid.as_deref().unwrap_or("0.1:2.0:4:log"))?;

    let root = SeededStream::new(seed);
    let mut dir_stream = root.substream(0xd1);
    let dirs: Vec<DiagonalSpec> = (0..n_directions)
        .map(|_| loop {
            let mut rng = dir_stream.next_rng();
            let raw: Vec<f64> = (0..dim)
                .map(|_| rand::RngExt::random::<f64>(&mut rng) * 2.0 - 1.0)
                .collect();
            if let Ok(d) = DiagonalSpec::traceless_normalized(&raw) {
                break d;
            }
        })
        .collect();

    let mut stream = root.substream(0xd2);
    let est = spectral::estimate_dimensional_constant(&dirs, &scales, group, samples, &mut stream)
        .map_err(run_err)?;

    let rows: Vec<Value> = est
        .points
        .iter()
        .map(|p| {
            json!({
                "dim": dim,
                "group": group.label(),
                "d_vector": p.direction.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(","),
                "t": p.t,
                "mean": p.mean,
                "std_error": p.std_error,
                "n_samples": samples,
                "log_sigma1": p.log_sigma1,
                "ratio": p.mean / p.log_sigma1,
                "ratio_lower": p.ratio_lower,
                "min_integrand": p.min_integrand,
                "seed": seed,
            })
        })
        .collect();

    let worst_integrand = est
        .points
        .iter()
        .map(|p| p.min_integrand)
        .fold(f64::INFINITY, f64::min);
    let summary = vec![
        Assertion::check(
            "constant-floor-positive",
            est.c_lower,
            format!(
                "c_lower {} at d = {:?}, t = {}",
                est.c_lower, est.argmin_direction, est.argmin_t
            ),
        ),
        Assertion::check(
            "integrand-floor",
            worst_integrand - tolerances::LOCALIZED_FLOOR,
            format!("worst min integrand {worst_integrand}"),
        ),
    ];
    let config = base_config(
        r,
        "constant-estimate",
        &[
            ("directions", json!(dirs.iter().map(|d| d.exponents().to_vec()).collect::<Vec<_>>())),
            ("t_grid", json!(scales)),
            ("samples_per_point", json!(samples)),
            ("group", json!(group.label())),
            ("family", json!(est.family)),
            ("skipped_near_identity", json!(est.skipped_near_identity)),
        ],
    );
    Ok(Report::new(config, rows, summary))
}

// ------------------------------------------------------------ gershgorin-check

pub fn gershgorin_check(
    r: &Resolved,
    matrix: &Option<std::path::PathBuf>,
    count: Option<usize>,
) -> CmdResult {
    if let Some(path) = matrix {
        let any = load_matrix(path)?;
        let (report, disks): (perturb::ContainmentReport, Vec<perturb::GershgorinDisk>) =
            match &any {
                AnyMatrix::Real(m) => (
                    perturb::check_eigenvalue_containment(m).map_err(run_err)?,
                    perturb::gershgorin_disks(m),
                ),
                AnyMatrix::Complex(m) => (
                    perturb::check_eigenvalue_containment(m).map_err(run_err)?,
                    perturb::gershgorin_disks(m),
                ),
            };
        let rows: Vec<Value> = report.witnesses.iter().map(row).collect();
        let worst = report
            .witnesses
            .iter()
            .map(|w| w.row_excess.max(w.column_excess))
            .fold(f64::NEG_INFINITY, f64::max);
        let summary = vec![Assertion::check(
            "all-eigenvalues-contained",
            report.tolerance - worst,
            format!("worst disk excess {worst} (tolerance {})", report.tolerance),
        )];
        let config = base_config(
            r,
            "gershgorin-check",
            &[
                ("matrix", row(&any)),
                ("disks", json!(disks)),
                ("containment_tolerance", json!(report.tolerance)),
            ],
        );
        return Ok(Report::new(config, rows, summary));
    }

    // Randomized falsification mode.
    let seed = r.require_seed()?;
    let dim = r.dim.ok_or_else(|| usage("need --dim (or --matrix FILE)"))?;
    if dim < 1 {
        return Err(usage("need --dim >= 1"));
    }
    let count = count.unwrap_or(1_000);
    let complex = match r.field.as_deref() {
        None | Some("complex") => true,
        Some("real") => false,
        Some(other) => return Err(usage(format!("unknown field {other:?}"))),
    };
    let stream = SeededStream::new(seed);
    let mut rows = Vec::with_capacity(count);
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0usize;
    for i in 0..count {
        let mut rng = stream.rng_at(i as u64);
        let (contained, excess) = if complex {
            let m = SquareMatrix::from_inner(nalgebra::DMatrix::from_fn(dim, dim, |_, _| {
                C64::gaussian(&mut rng)
            }))
            .map_err(run_err)?;
            let rep = perturb::check_eigenvalue_containment(&m).map_err(run_err)?;
            let e = rep
                .witnesses
                .iter()
                .map(|w| w.row_excess.max(w.column_excess))
                .fold(f64::NEG_INFINITY, f64::max);
            (rep.contained, e)
        } else {
            let m = SquareMatrix::from_inner(nalgebra::DMatrix::from_fn(dim, dim, |_, _| {
                f64::gaussian(&mut rng)
            }))
            .map_err(run_err)?;
            let rep = perturb::check_eigenvalue_containment(&m).map_err(run_err)?;
            let e = rep
                .witnesses
                .iter()
                .map(|w| w.row_excess.max(w.column_excess))
                .fold(f64::NEG_INFINITY, f64::max);
            (rep.contained, e)
        };
        if !contained {
            violations += 1;
        }
        worst = worst.max(excess);
        rows.push(json!({
            "matrix_index": i,
            "dim": dim,
            "field": if complex { "complex" } else { "real" },
            "contained": contained,
            "worst_excess": excess,
            "seed": seed,
        }));
    }
    let summary = vec![Assertion::check(
        "zero-containment-violations",
        -(violations as f64),
        format!("{violations} violations over {count} matrices, worst excess {worst}"),
    )];
    let config = base_config(
        r,
        "gershgorin-check",
        &[("count", json!(count)), ("field", json!(if complex { "complex" } else { "real" }))],
    );
    Ok(Report::new(config, rows, summary))
}

// ---------------------------------------------------------- perturbation-check

pub fn perturbation_check(r: &Resolved, count: Option<usize>) -> CmdResult {
    let seed = r.require_seed()?;
    let dim = r.dim.unwrap_or(3);
    if dim < 2 {
        return Err(usage("need --dim >= 2"));
    }
    let count = count.unwrap_or(100);
    let mut stream = SeededStream::new(seed);
    let mut rows = Vec::new();
    let mut bracket_violations = 0usize;
    let mut tightest_slack = f64::INFINITY;
    for case in 0..count {
        let mut rng = stream.next_rng();
        let mut d: Vec<f64> = (0..dim).map(|_| f64::gaussian(&mut rng).exp()).collect();
        d.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        let m = SquareMatrix::from_inner(nalgebra::DMatrix::from_fn(dim, dim, |_, _| {
            rand::RngExt::random::<f64>(&mut rng) * 2.0 - 1.0
        }))
        .map_err(run_err)?;
        let t = rand::RngExt::random::<f64>(&mut rng) * 0.1 / (2.0 * dim as f64);
        let bracket = perturb::perturbed_radius_bounds(&d, &m, t).map_err(run_err)?;
        let holds = bracket.holds(1e-9);
        if !holds {
            bracket_violations += 1;
        }
        tightest_slack = tightest_slack
            .min(bracket.actual - bracket.lower)
            .min(bracket.upper - bracket.actual);
        rows.push(json!({
            "case": case,
            "kind": "bracket",
            "dim": dim,
            "t": t,
            "lower": bracket.lower,
            "actual": bracket.actual,
            "upper": bracket.upper,
            "pass": holds,
            "seed": seed,
        }));
    }

    // Derivative spot-checks on well-conditioned instances.
    let target = count.min(50);
    let mut checked = 0usize;
    let mut attempts = 0usize;
    let mut worst_rel = 0.0f64;
    while checked < target && attempts < 100 * target {
        attempts += 1;
        let mut rng = stream.next_rng();
        let t0 = SquareMatrix::from_inner(nalgebra::DMatrix::from_fn(dim, dim, |_, _| {
            f64::gaussian(&mut rng)
        }))
        .map_err(run_err)?;
        let pair = match eigen::eigen_pair(&t0, EigenSelect::LargestModulus) {
            Ok(p) if p.gap >= 0.1 => p,
            _ => continue,
        };
        let w = eigen::left_eigenvector(&t0, pair.value).map_err(run_err)?;
        if 1.0 / (w.adjoint() * &pair.vector)[(0, 0)].norm() > 10.0 {
            continue;
        }
        let mut dir_inner =
            nalgebra::DMatrix::from_fn(dim, dim, |_, _| f64::gaussian(&mut rng));
        let norm = dir_inner.norm();
        dir_inner *= 0.1 / norm;
        let dir = SquareMatrix::from_inner(dir_inner).map_err(run_err)?;
        let analytic = perturb::kato_derivative(&t0, &dir, &pair).map_err(run_err)?;
        let fd = perturb::fd_eigenvalue_derivative(&t0, &dir, pair.value, tolerances::FD_STEP)
            .map_err(run_err)?;
        let rel = (analytic - fd).norm() / (1.0 + pair.value.norm());
        worst_rel = worst_rel.max(rel);
        rows.push(json!({
            "case": checked,
            "kind": "kato-fd",
            "dim": dim,
            "lambda_re": pair.value.re,
            "lambda_im": pair.value.im,
            "analytic_re": analytic.re,
            "analytic_im": analytic.im,
            "fd_re": fd.re,
            "fd_im": fd.im,
            "rel_err": rel,
            "seed": seed,
        }));
        checked += 1;
    }

    let summary = vec![
        Assertion::check(
            "zero-bracket-violations",
            -(bracket_violations as f64),
            format!("{bracket_violations} violations, tightest slack {tightest_slack:.3e}"),
        ),
        Assertion::check(
            "kato-matches-finite-differences",
            tolerances::FD_REL_TOL - worst_rel,
            format!("worst relative error {worst_rel:.3e}"),
        ),
    ];
    let config = base_config(r, "perturbation-check", &[("count", json!(count))]);
    Ok(Report::new(config, rows, summary))
}

// --------------------------------------------------------------- x0-derivative

pub fn x0_derivative(
    r: &Resolved,
    d_vector: &Option<String>,
    count: Option<usize>,
) -> CmdResult {
    let dim = r.dim.ok_or_else(|| usage("need --dim"))?;
    let directions: Vec<DiagonalSpec> = match d_vector {
        Some(s) => {
            let raw = parse_weights(s)?;
            if raw.len() != dim {
                return Err(usage(format!(
                    "--d-vector has {} entries for --dim {dim}",
                    raw.len()
                )));
            }
            vec![DiagonalSpec::traceless_normalized(&raw).map_err(run_err)?]
        }
        None => {
            let seed = r.require_seed()?;
            let count = count.unwrap_or(100);
            let mut stream = SeededStream::new(seed);
            (0..count)
                .map(|_| loop {
                    let mut rng = stream.next_rng();
                    let raw: Vec<f64> = (0..dim)
                        .map(|_| rand::RngExt::random::<f64>(&mut rng) * 2.0 - 1.0)
                        .collect();
                    if let Ok(d) = DiagonalSpec::traceless_normalized(&raw) {
                        break d;
                    }
                })
                .collect()
        }
    };

    let mut rows = Vec::with_capacity(directions.len());
    let mut min_floor_margin = f64::INFINITY;
    let mut worst_exact = 0.0f64;
    for d in &directions {
        let out = perturb::local_derivative_inequality(d).map_err(run_err)?;
        min_floor_margin = min_floor_margin.min(out.derivative - out.floor);
        worst_exact = worst_exact.max((out.derivative - out.exact).abs());
        rows.push(json!({
            "dim": dim,
            "d_vector": d.exponents().iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(","),
            "derivative": out.derivative,
            "floor": out.floor,
            "exact": out.exact,
            "seed": r.seed,
        }));
    }
    let summary = vec![
        Assertion::check(
            "derivative-clears-floor",
            min_floor_margin + 1e-10,
            format!("min margin over floor {min_floor_margin:.3e}"),
        ),
        Assertion::check(
            "derivative-matches-exact-value",
            1e-10 - worst_exact,
            format!("worst |derivative - exact| {worst_exact:.3e}"),
        ),
    ];
    let config = base_config(
        r,
        "x0-derivative",
        &[("n_directions", json!(directions.len()))],
    );
    Ok(Report::new(config, rows, summary))
}

// ------------------------------------------------------------------ dim2-exact

pub fn dim2_exact(r: &Resolved, a: Option<f64>, nodes: Option<usize>) -> CmdResult {
    let a = a.unwrap_or(2.0);
    let nodes = nodes.unwrap_or(4096);
    let value = dim2::exact_average_2d(a, nodes).map_err(run_err)?;
    let closed = ((a + 1.0 / a) / 2.0).ln();
    let error = (value - closed).abs();
    let rows = vec![json!({
        "a": a,
        "nodes": nodes,
        "value": value,
        "closed_form": closed,
        "abs_error": error,
    })];
    let summary = vec![Assertion::check(
        "quadrature-matches-closed-form",
        1e-8 - error,
        format!("value {value}, closed form {closed}"),
    )];
    let config = base_config(r, "dim2-exact", &[("a", json!(a)), ("nodes", json!(nodes))]);
    Ok(Report::new(config, rows, summary))
}

// -------------------------------------------------------- dim2-counterexample

pub fn dim2_counterexample(
    r: &Resolved,
    gap_lo: Option<f64>,
    gap_hi: Option<f64>,
    beta: Option<f64>,
    probes: Option<usize>,
) -> CmdResult {
    let gap_lo = gap_lo.ok_or_else(|| usage("need --gap-lo"))?;
    let gap_hi = gap_hi.ok_or_else(|| usage("need --gap-hi"))?;
    let probes = probes.unwrap_or(10_000);
    let ce = dim2::build_counterexample(gap_lo, gap_hi, beta).map_err(run_err)?;
    let deviation = ce.certificate_max_deviation(probes).map_err(run_err)?;

    let rows = vec![merge_row(
        json!({
            "beta": ce.beta,
            "c": ce.c,
            "s": ce.s,
            "alpha": ce.alpha,
            "certificate_max_deviation": deviation,
            "probes": probes,
        }),
        &[("A", row(&ce.matrix))],
    )];
    let summary = vec![Assertion::check(
        "certificate-unit-radius",
        1e-12 - deviation,
        format!("max |rho - 1| = {deviation:.3e} over {probes} certified probes"),
    )];
    let config = base_config(
        r,
        "dim2-counterexample",
        &[
            ("gap_lo", json!(gap_lo)),
            ("gap_hi", json!(gap_hi)),
            ("beta", json!(ce.beta)),
            ("probes", json!(probes)),
        ],
    );
    Ok(Report::new(config, rows, summary))
}

// ----------------------------------------------------------------------- genmu

pub fn genmu(
    r: &Resolved,
    law: &Option<String>,
    matrices: Option<usize>,
) -> CmdResult {
    let seed = r.require_seed()?;
    let dim = r.dim.ok_or_else(|| usage("need --dim"))?;
    let group = group_of(r)?;
    let n_matrices = matrices.unwrap_or(200);
    let samples = r.samples.unwrap_or(10_000);

    let law_text = law.as_deref().unwrap_or("log-uniform:1.0");
    let singular_law = parse_law(law_text, dim)?;
    let spec = InvariantMeasureSpec {
        dim,
        singular_law,
    };
    let mut stream = SeededStream::new(seed);
    let report =
        spectral::genmu_experiment(&spec, group, n_matrices, samples, &mut stream, None)
            .map_err(run_err)?;

    let rows = vec![json!({
        "dim": dim,
        "group": group.label(),
        "lhs_mean": report.lhs.mean,
        "lhs_std_error": report.lhs.std_error,
        "rhs_mean": report.rhs.mean,
        "rhs_std_error": report.rhs.std_error,
        "ratio": report.ratio,
        "min_integrand": report.min_integrand,
        "n_matrices": n_matrices,
        "samples_per_matrix": samples,
        "dim2_flagged": report.dim2_flagged,
        "seed": seed,
    })];
    let mut summary = vec![Assertion::check(
        "integrand-floor",
        report.min_integrand - tolerances::LOCALIZED_FLOOR,
        format!("min integrand {}", report.min_integrand),
    )];
    if dim >= 3 {
        summary.push(Assertion::check(
            "lhs-nonnegative",
            report.lhs.mean + 3.0 * report.lhs.std_error,
            format!("lhs {} (se {})", report.lhs.mean, report.lhs.std_error),
        ));
    }
    let config = base_config(
        r,
        "genmu",
        &[
            ("law", json!(law_text)),
            ("n_matrices", json!(n_matrices)),
            ("samples_per_matrix", json!(samples)),
            ("group", json!(group.label())),
            ("dim2_flagged", json!(report.dim2_flagged)),
        ],
    );
    Ok(Report::new(config, rows, summary))
}

fn parse_law(s: &str, dim: usize) -> Result<SingularLaw, CliError> {
    if let Some(rest) = s.strip_prefix("fixed:") {
        let spectrum = parse_weights(rest)?;
        if spectrum.len() != dim {
            return Err(usage(format!(
                "fixed law has {} entries for --dim {dim}",
                spectrum.len()
            )));
        }
        Ok(SingularLaw::Fixed { spectrum })
    } else if let Some(rest) = s.strip_prefix("log-uniform:") {
        let half_width: f64 = rest
            .parse()
            .map_err(|_| usage(format!("bad log-uniform half-width {rest:?}")))?;
        Ok(SingularLaw::LogUniform { half_width })
    } else {
        Err(usage(format!(
            "law must be fixed:s1,..,sn or log-uniform:L, got {s:?}"
        )))
    }
}

// --------------------------------------------------------------- haar-selftest

pub fn haar_selftest(r: &Resolved) -> CmdResult {
    let seed = r.require_seed()?;
    let dim = r.dim.unwrap_or(4);
    if dim < 1 {
        return Err(usage("need --dim >= 1"));
    }
    let samples = r.samples.unwrap_or(100_000);
    if samples < 2 {
        return Err(usage("need --samples >= 2"));
    }
    let group = group_of(r)?;

    let stream = SeededStream::new(seed);
    let draw = |i: u64, rng_stream: &SeededStream| -> nalgebra::DMatrix<C64> {
        let mut rng = rng_stream.rng_at(i);
        match group {
            Group::Unitary => sampling::haar_from_rng::<C64>(dim, &mut rng),
            _ => sampling::haar_from_rng::<f64>(dim, &mut rng).map(|x| C64::new(x, 0.0)),
        }
    };

    let mut moment_sum = 0.0f64;
    let mut moment_sq = 0.0f64;
    let mut max_residual = 0.0f64;
    let residual_stride = (samples / 2_000).max(1);
    for i in 0..samples {
        let x = draw(i as u64, &stream);
        let sq = x[(0, 0)].norm_sqr();
        moment_sum += sq;
        moment_sq += sq * sq;
        if i % residual_stride == 0 {
            let m = SquareMatrix::from_inner(x).map_err(run_err)?;
            max_residual = max_residual.max(m.orthogonality_residual());
        }
    }
    let n_f = samples as f64;
    let moment_mean = moment_sum / n_f;
    let moment_var = ((moment_sq - moment_sum * moment_sum / n_f) / (n_f - 1.0)).max(0.0);
    let moment_se = (moment_var / n_f).sqrt();
    let expected = 1.0 / dim as f64;

    // Left-invariance: trace distribution unchanged by a fixed translation.
    let ks_samples = samples.min(100_000);
    let mut p_stream = SeededStream::new(seed).substream(0x4b);
    let p = match group {
        Group::Unitary => sampling::sample_haar_unitary(dim, &mut p_stream)
            .map_err(run_err)?
            .into_inner(),
        _ => sampling::sample_haar_orthogonal(dim, &mut p_stream)
            .map_err(run_err)?
            .to_complex()
            .into_inner(),
    };
    let stream_b = SeededStream::new(seed).substream(0x4c);
    let plain: Vec<f64> = (0..ks_samples)
        .map(|i| draw(i as u64, &stream).trace().re)
        .collect();
    let rotated: Vec<f64> = (0..ks_samples)
        .map(|i| (&p * draw(i as u64, &stream_b)).trace().re)
        .collect();
    let (ks_d, ks_p) = stats::ks_two_sample(&plain, &rotated);

    // Determinism: same seed, same samples, bitwise.
    let rerun: f64 = (0..1_000u64).map(|i| draw(i, &stream)[(0, 0)].re).sum();
    let rerun2: f64 = (0..1_000u64).map(|i| draw(i, &stream)[(0, 0)].re).sum();
    let deterministic = rerun.to_bits() == rerun2.to_bits();

    let rows = vec![json!({
        "dim": dim,
        "group": group.label(),
        "n_samples": samples,
        "seed": seed,
        "max_orthogonality_residual": max_residual,
        "first_entry_sq_mean": moment_mean,
        "first_entry_sq_std_error": moment_se,
        "expected_moment": expected,
        "ks_statistic": ks_d,
        "ks_p_value": ks_p,
        "deterministic": deterministic,
    })];
    let summary = vec![
        Assertion::check(
            "orthogonality-residual",
            1e-12 - max_residual,
            format!("max residual {max_residual:.3e}"),
        ),
        Assertion::check(
            "first-entry-moment",
            3.0 * moment_se - (moment_mean - expected).abs(),
            format!("E[|X11|^2] = {moment_mean} vs {expected} (se {moment_se})"),
        ),
        Assertion::check(
            "ks-invariance",
            ks_p - 0.01,
            format!("D = {ks_d}, p = {ks_p}"),
        ),
        Assertion::check(
            "determinism",
            if deterministic { 0.0 } else { -1.0 },
            "bitwise identical re-run".to_string(),
        ),
    ];
    let config = base_config(r, "haar-selftest", &[("group", json!(group.label()))]);
    Ok(Report::new(config, rows, summary))
}
