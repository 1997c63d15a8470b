//! Command-line interface of the momentum-map toolkit.
//!
//! Subcommands mirror the library modules: `polytope` emits the weight
//! polytope of a representation, `strata` classifies a point under a
//! one-parameter direction, `chart` and `blv` build slice charts and run a
//! seeded round-trip battery on them, `flow` integrates the energy flow
//! and certifies the limit, and `verify` runs the full verification
//! battery list. Artifacts are UTF-8 JSON (primary, to `--out` or stdout)
//! and CSV (auxiliary plot data, next to `--out`); for a fixed seed and
//! configuration the bytes are identical across runs. Failures print a
//! machine-readable `{code, message}` object to stderr and exit nonzero:
//! 2 when the representation file is missing, 1 for every module error.

use std::cmp::Ordering;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use mmtk::linalg::{C64, CMat, CVec, RVec};
use mmtk::rep::weight_decomposition;
use mmtk::sample::Sampler;
use mmtk::verify::run_batteries;
use mmtk::{
    blv_chart, build_chart, build_grading, classify_point, extreme_certificate, flow_eta,
    load_representation, ChartCoords, ChartError, FlowParams, LstChart, Polytope,
    ProjectivePoint, RepresentationSpec, Trajectory,
};

#[derive(Parser)]
#[command(
    name = "mmtk",
    version,
    about = "Momentum maps, weight polytopes, strata, slice charts, and energy flows \
             for matrix group actions on complex projective space"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Path to the representation JSON document.
    #[arg(long)]
    rep: PathBuf,
    /// Write the JSON artifact here; auxiliary CSV data lands beside it
    /// with a csv extension. Defaults to stdout, with no CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Weight polytope: points, vertices, facets, normal cones, and a 2-d
    /// vertex polyline.
    Polytope {
        #[command(flatten)]
        common: Common,
    },
    /// Stratum report of a point under a one-parameter direction.
    Strata {
        #[command(flatten)]
        common: Common,
        /// Direction in input torus coordinates, or "auto" for the
        /// exposing vector of the lexicographically largest vertex.
        #[arg(long, default_value = "auto")]
        beta: String,
        /// Point coordinates: dim reals, or 2*dim interleaved re,im values.
        #[arg(long)]
        point: String,
    },
    /// Slice chart at a maximal point, with a seeded round-trip battery.
    Chart {
        #[command(flatten)]
        common: Common,
        /// Direction in input torus coordinates, or "auto".
        #[arg(long, default_value = "auto")]
        beta: String,
        /// Base point; defaults to the first top-level basis line.
        #[arg(long)]
        point: Option<String>,
        /// Round-trip sample count.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Sample seed; falls back to MMTK_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Slice chart of an invariant coordinate summand inside a reducible
    /// module, with the same round-trip battery.
    Blv {
        #[command(flatten)]
        common: Common,
        /// Standard-basis column indices spanning the invariant summand;
        /// the remaining columns form the complement.
        #[arg(long, value_delimiter = ',', required = true)]
        w_cols: Vec<usize>,
        /// Round-trip sample count.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Sample seed; falls back to MMTK_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Energy flow from a start point: trajectory CSV and a certified
    /// summary.
    Flow {
        #[command(flatten)]
        common: Common,
        /// Start point; defaults to a seeded random point.
        #[arg(long)]
        point: Option<String>,
        /// Sample seed; falls back to MMTK_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Initial integrator step size.
        #[arg(long, default_value_t = 1e-2)]
        step: f64,
        /// Gradient norm below which the flow counts as converged.
        #[arg(long, default_value_t = 1e-9)]
        stop_tol: f64,
        /// Step budget of the integrator.
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
    },
    /// Seeded verification batteries; the representation file is validated
    /// and the full battery list runs over the shipped modules.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Sample count per battery.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Sample seed; falls back to MMTK_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker shard count; defaults to the available parallelism.
        #[arg(long)]
        shards: Option<usize>,
        /// Run only this shard and report its batteries alone.
        #[arg(long)]
        shard: Option<usize>,
    },
}

/// A terminal failure: machine-readable code, human-readable message, and
/// the process exit status.
struct Failure {
    code: String,
    message: String,
    exit: i32,
}

impl Failure {
    fn module(code: &str, message: impl ToString) -> Failure {
        Failure {
            code: code.to_string(),
            message: message.to_string(),
            exit: 1,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Polytope { common } => run_polytope(&common),
        Command::Strata {
            common,
            beta,
            point,
        } => run_strata(&common, &beta, &point),
        Command::Chart {
            common,
            beta,
            point,
            samples,
            seed,
        } => run_chart(&common, &beta, point.as_deref(), samples, seed),
        Command::Blv {
            common,
            w_cols,
            samples,
            seed,
        } => run_blv(&common, &w_cols, samples, seed),
        Command::Flow {
            common,
            point,
            seed,
            step,
            stop_tol,
            max_steps,
        } => run_flow(&common, point.as_deref(), seed, step, stop_tol, max_steps),
        Command::Verify {
            common,
            samples,
            seed,
            shards,
            shard,
        } => run_verify(&common, samples, seed, shards, shard),
    };
    if let Err(f) = result {
        let report = json!({"code": f.code, "message": f.message});
        eprintln!("{report}");
        std::process::exit(f.exit);
    }
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| std::env::var("MMTK_SEED").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(0)
}

fn load_rep(path: &Path) -> Result<RepresentationSpec, Failure> {
    let doc = match std::fs::read_to_string(path) {
        Ok(d) => d,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Failure {
                code: "missing_file".to_string(),
                message: format!("representation file {} does not exist", path.display()),
                exit: 2,
            });
        }
        Err(e) => return Err(Failure::module("io", e)),
    };
    load_representation(&doc).map_err(|e| Failure::module(e.code(), &e))
}

/// Print to stdout, treating a closed pipe (e.g. piping into head) as a
/// normal way for the reader to stop.
fn print_stdout(text: &str) -> Result<(), Failure> {
    use std::io::Write;
    match writeln!(std::io::stdout(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        other => other.map_err(|e| Failure::module("io", e)),
    }
}

fn emit_json(out: &Option<PathBuf>, value: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("artifact serializes");
    match out {
        Some(path) => std::fs::write(path, text + "\n").map_err(|e| Failure::module("io", e)),
        None => print_stdout(&text),
    }
}

fn write_csv(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::module("io", e))
}

fn reals(v: &RVec) -> Value {
    Value::Array(v.iter().map(|&x| json!(x)).collect())
}

fn complex_pairs(v: &CVec) -> Value {
    Value::Array(v.iter().map(|c| json!([c.re, c.im])).collect())
}

fn parse_floats(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|e| Failure::module("bad_number", format!("{e} in {text:?}")))
}

/// Direction in orthonormal Hermitian coordinates, from either an explicit
/// torus coordinate vector or the "auto" convention: the exposing vector
/// of the lexicographically largest weight polytope vertex.
fn resolve_beta(spec: &RepresentationSpec, beta: &str) -> Result<RVec, Failure> {
    let beta_a = if beta == "auto" {
        let weights: Vec<RVec> = weight_decomposition(spec)
            .iter()
            .map(|w| w.weight.clone())
            .collect();
        let poly = Polytope::from_points(&weights).map_err(|e| Failure::module(e.code(), &e))?;
        let lex = poly
            .vertices
            .iter()
            .copied()
            .max_by(|&a, &b| lex_cmp(&poly.points[a], &poly.points[b]))
            .expect("polytope has vertices");
        poly.exposing_vector(lex)
            .map_err(|e| Failure::module(e.code(), &e))?
    } else {
        let vals = parse_floats(beta)?;
        if vals.len() != spec.a_rank() {
            return Err(Failure::module(
                "bad_beta",
                format!("expected {} torus coordinates, got {}", spec.a_rank(), vals.len()),
            ));
        }
        RVec::from_vec(vals)
    };
    Ok(spec.input_a_to_p(&beta_a))
}

fn lex_cmp(a: &RVec, b: &RVec) -> Ordering {
    for k in 0..a.len() {
        if a[k] != b[k] {
            return a[k].partial_cmp(&b[k]).expect("finite coordinates");
        }
    }
    Ordering::Equal
}

fn parse_point(spec: &RepresentationSpec, text: &str) -> Result<ProjectivePoint, Failure> {
    let vals = parse_floats(text)?;
    let dim = spec.dim_v;
    let v = if vals.len() == dim {
        CVec::from_fn(dim, |i, _| C64::new(vals[i], 0.0))
    } else if vals.len() == 2 * dim {
        CVec::from_fn(dim, |i, _| C64::new(vals[2 * i], vals[2 * i + 1]))
    } else {
        return Err(Failure::module(
            "bad_point",
            format!(
                "expected {dim} reals or {} interleaved re,im values, got {}",
                2 * dim,
                vals.len()
            ),
        ));
    };
    if v.norm() < 1e-12 {
        return Err(Failure::module("bad_point", "point must be nonzero"));
    }
    Ok(ProjectivePoint::new(v))
}

fn run_polytope(common: &Common) -> Result<(), Failure> {
    let spec = load_rep(&common.rep)?;
    let weights: Vec<RVec> = weight_decomposition(&spec)
        .iter()
        .map(|w| w.weight.clone())
        .collect();
    let poly = Polytope::from_points(&weights).map_err(|e| Failure::module(e.code(), &e))?;
    let mut vertices = poly.vertices.clone();
    vertices.sort_unstable();
    let facets: Vec<Value> = poly
        .facets
        .iter()
        .map(|f| json!({"normal": reals(&f.normal), "offset": f.offset}))
        .collect();
    let mut cones = Map::new();
    for &v in &vertices {
        let cone = poly.normal_cone(v);
        cones.insert(
            v.to_string(),
            Value::Array(cone.generators.iter().map(reals).collect()),
        );
    }
    let artifact = json!({
        "points": weights.iter().map(reals).collect::<Vec<Value>>(),
        "vertices": vertices,
        "facets": facets,
        "normal_cones": cones,
    });
    emit_json(&common.out, &artifact)?;

    // Plot data: in ambient dimension two the vertices trace a closed
    // polyline around their centroid.
    if let Some(out) = &common.out {
        if poly.ambient_dim() == 2 && !vertices.is_empty() {
            let n = vertices.len() as f64;
            let cx = vertices.iter().map(|&v| poly.points[v][0]).sum::<f64>() / n;
            let cy = vertices.iter().map(|&v| poly.points[v][1]).sum::<f64>() / n;
            let mut ring = vertices.clone();
            ring.sort_by(|&a, &b| {
                let ta = (poly.points[a][1] - cy).atan2(poly.points[a][0] - cx);
                let tb = (poly.points[b][1] - cy).atan2(poly.points[b][0] - cx);
                ta.partial_cmp(&tb).expect("finite angles").then(a.cmp(&b))
            });
            let mut csv = String::from("x,y\n");
            for &v in ring.iter().chain(ring.first()) {
                csv.push_str(&format!("{},{}\n", poly.points[v][0], poly.points[v][1]));
            }
            write_csv(&out.with_extension("csv"), &csv)?;
        }
    }
    Ok(())
}

fn run_strata(common: &Common, beta: &str, point: &str) -> Result<(), Failure> {
    let spec = load_rep(&common.rep)?;
    let beta_p = resolve_beta(&spec, beta)?;
    let grading = build_grading(&spec, &beta_p);
    let x = parse_point(&spec, point)?;
    let record = classify_point(&spec, &grading, &x);
    let artifact = json!({
        "fixed": record.fixed,
        "level": record.level_value,
        "forward": complex_pairs(record.forward_limit.vector()),
        "backward": complex_pairs(record.backward_limit.vector()),
        "in_max_cell": record.in_beta_minus_max,
    });
    emit_json(&common.out, &artifact)
}

/// Box and ambient round trips of a chart, reported in the battery schema.
fn round_trip_value(chart: &LstChart, samples: usize, seed: u64) -> (Value, usize) {
    let mut s = Sampler::new(seed);
    let mut max_error = 0.0_f64;
    let mut violations = 0usize;
    for k in 0..samples {
        if k % 2 == 0 {
            let coords = ChartCoords {
                n: s.box_vector(chart.n_dim(), 2.0),
                f: s.box_vector(chart.f_dim(), 2.0),
                u: s.box_vector(chart.u_dim(), 2.0),
            };
            match chart.phi_inverse(&chart.phi_forward(&coords)) {
                Ok(back) => {
                    let err = (&back.n - &coords.n).norm()
                        + (&back.f - &coords.f).norm()
                        + (&back.u - &coords.u).norm();
                    max_error = max_error.max(err);
                    if err > mmtk::tol::ROUND_TRIP {
                        violations += 1;
                    }
                }
                Err(_) => violations += 1,
            }
        } else {
            let z = ProjectivePoint::new(s.unit_complex_vector(chart.spec.dim_v));
            match chart.phi_inverse(&z) {
                Ok(coords) => {
                    let err = chart.phi_forward(&coords).distance(&z);
                    max_error = max_error.max(err);
                    if err > mmtk::tol::ROUND_TRIP {
                        violations += 1;
                    }
                }
                Err(ChartError::OutsideCell { .. }) => {}
                Err(_) => violations += 1,
            }
        }
    }
    let value = json!({
        "check": "chart_round_trip",
        "samples": samples,
        "seed": seed,
        "max_error": max_error,
        "violations": violations,
    });
    (value, violations)
}

fn chart_artifact(chart: &LstChart, samples: usize, seed: u64) -> (Value, usize) {
    let (round_trip, violations) = round_trip_value(chart, samples, seed);
    let artifact = json!({
        "base": complex_pairs(chart.w0.vector()),
        "n_dim": chart.n_dim(),
        "f_dim": chart.f_dim(),
        "u_dim": chart.u_dim(),
        "orbit_sigma_min": chart.orbit_sigma_min,
        "round_trip": round_trip,
    });
    (artifact, violations)
}

fn run_chart(
    common: &Common,
    beta: &str,
    point: Option<&str>,
    samples: usize,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let spec = load_rep(&common.rep)?;
    let beta_p = resolve_beta(&spec, beta)?;
    let grading = build_grading(&spec, &beta_p);
    let base = match point {
        Some(text) => parse_point(&spec, text)?,
        None => ProjectivePoint::new(grading.v_levels[0].basis.column(0).into_owned()),
    };
    let chart =
        build_chart(&spec, &grading, &base).map_err(|e| Failure::module(e.code(), &e))?;
    let (artifact, violations) = chart_artifact(&chart, samples, resolve_seed(seed));
    emit_json(&common.out, &artifact)?;
    if violations > 0 {
        return Err(Failure::module(
            "round_trip_failed",
            format!("{violations} round-trip violations"),
        ));
    }
    Ok(())
}

fn run_blv(
    common: &Common,
    w_cols: &[usize],
    samples: usize,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let spec = load_rep(&common.rep)?;
    let dim = spec.dim_v;
    for &c in w_cols {
        if c >= dim {
            return Err(Failure::module(
                "bad_columns",
                format!("column {c} exceeds the module dimension {dim}"),
            ));
        }
    }
    let mut in_w = vec![false; dim];
    for &c in w_cols {
        if in_w[c] {
            return Err(Failure::module("bad_columns", format!("column {c} repeats")));
        }
        in_w[c] = true;
    }
    let build = |cols: &[usize]| {
        let mut m = CMat::zeros(dim, cols.len());
        for (j, &c) in cols.iter().enumerate() {
            m[(c, j)] = C64::new(1.0, 0.0);
        }
        m
    };
    let u_cols: Vec<usize> = (0..dim).filter(|&c| !in_w[c]).collect();
    let chart = blv_chart(&spec, &build(w_cols), &build(&u_cols))
        .map_err(|e| Failure::module(e.code(), &e))?;
    let (artifact, violations) = chart_artifact(&chart, samples, resolve_seed(seed));
    emit_json(&common.out, &artifact)?;
    if violations > 0 {
        return Err(Failure::module(
            "round_trip_failed",
            format!("{violations} round-trip violations"),
        ));
    }
    Ok(())
}

fn trajectory_csv(traj: &Trajectory, dim: usize) -> String {
    let mut header = String::from("time,eta");
    for j in 0..dim {
        header.push_str(&format!(",re{j},im{j}"));
    }
    header.push('\n');
    let mut csv = header;
    for sample in &traj.samples {
        csv.push_str(&format!("{},{}", sample.time, sample.eta));
        for c in sample.point.vector().iter() {
            csv.push_str(&format!(",{},{}", c.re, c.im));
        }
        csv.push('\n');
    }
    csv
}

fn run_flow(
    common: &Common,
    point: Option<&str>,
    seed: Option<u64>,
    step: f64,
    stop_tol: f64,
    max_steps: usize,
) -> Result<(), Failure> {
    let spec = load_rep(&common.rep)?;
    let start = match point {
        Some(text) => parse_point(&spec, text)?,
        None => {
            let mut s = Sampler::new(resolve_seed(seed));
            ProjectivePoint::new(s.unit_complex_vector(spec.dim_v))
        }
    };
    let params = FlowParams {
        step,
        stop_tol,
        max_steps,
    };
    let traj = flow_eta(&spec, &start, &params);
    let certificate = match extreme_certificate(&spec, &traj) {
        Ok(c) => json!({
            "verdict": "pass",
            "vertex_index": c.vertex_index,
            "vertex": reals(&c.vertex),
            "spectrum_error": c.spectrum_error,
            "eta_gap": c.eta_gap,
            "classified_max": c.classified_max,
            "stabilizer_residual": c.stabilizer_residual,
        }),
        Err(e) => json!({
            "verdict": "fail",
            "code": e.code(),
            "message": e.to_string(),
        }),
    };
    let artifact = json!({
        "converged": traj.converged,
        "steps": traj.steps,
        "eta_limit": traj.eta_limit,
        "beta_limit": reals(&traj.beta_limit),
        "limit": complex_pairs(traj.limit.vector()),
        "certificate": certificate,
    });
    emit_json(&common.out, &artifact)?;
    if let Some(out) = &common.out {
        write_csv(&out.with_extension("csv"), &trajectory_csv(&traj, spec.dim_v))?;
    }
    Ok(())
}

fn run_verify(
    common: &Common,
    samples: usize,
    seed: Option<u64>,
    shards: Option<usize>,
    shard: Option<usize>,
) -> Result<(), Failure> {
    // The file is validated even though the batteries pin their own
    // representations; a bad document should fail fast here.
    load_rep(&common.rep)?;
    let seed = resolve_seed(seed);
    let reports = match shard {
        Some(k) => {
            let n = shards.unwrap_or(1).max(1);
            if k >= n {
                return Err(Failure::module(
                    "bad_shard",
                    format!("shard {k} out of range for {n} shards"),
                ));
            }
            run_batteries(samples, seed, n, k)
        }
        None => {
            let n = shards
                .unwrap_or_else(|| {
                    std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1)
                })
                .max(1);
            if n == 1 {
                run_batteries(samples, seed, 1, 0)
            } else {
                // Shard outputs depend only on the battery index, so the
                // round-robin merge reproduces the single-shard order.
                let mut per_shard = Vec::new();
                std::thread::scope(|scope| {
                    let handles: Vec<_> = (0..n)
                        .map(|k| scope.spawn(move || run_batteries(samples, seed, n, k)))
                        .collect();
                    per_shard = handles
                        .into_iter()
                        .map(|h| h.join().expect("battery worker"))
                        .collect::<Vec<_>>();
                });
                let total: usize = per_shard.iter().map(Vec::len).sum();
                (0..total).map(|i| per_shard[i % n][i / n].clone()).collect()
            }
        }
    };
    let artifact = Value::Array(
        reports
            .iter()
            .map(|r| serde_json::to_value(r).expect("report serializes"))
            .collect(),
    );
    emit_json(&common.out, &artifact)?;
    if common.out.is_some() {
        let mut table = format!(
            "{:<24} {:>8} {:>13} {:>11}",
            "battery", "samples", "max_error", "violations"
        );
        for r in &reports {
            table += &format!(
                "\n{:<24} {:>8} {:>13.3e} {:>11}",
                r.check, r.samples, r.max_error, r.violations
            );
        }
        print_stdout(&table)?;
    }
    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.check.as_str())
        .collect();
    if !failed.is_empty() {
        return Err(Failure::module(
            "verify_failed",
            format!("failing batteries: {}", failed.join(", ")),
        ));
    }
    Ok(())
}
