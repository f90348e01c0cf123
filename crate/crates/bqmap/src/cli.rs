//! Command-line front end: flag and config-file parsing, dispatch to the
//! library, text or JSON output.
//!
//! Exit codes: 0 success, 2 validation or I/O error, 3 budget-limited
//! undetermined verdict (for `bq`, and for `slice` on a 1x1 grid).

use crate::algebra::{
    degenerate_data, derived_constants, gt_map, BoundaryTraces, Color, MarkoffTriple, MuParams,
};
use crate::bq::{bq_test, omega_k, BqVerdict, SearchBudget, Tolerances};
use crate::realcase::{
    classify_real, construct_real_seed, construct_real_seed_auto, ergodicity_decision,
};
use crate::render::{
    evaluate_slice, write_ppm, write_sidecar_json, Palette, PixelKind, PlaneSpec, SliceSpec,
    ZBranch,
};
use crate::tree::{trace_at_slope, Slope};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;
use std::collections::BTreeMap;
use std::path::PathBuf;

/// Environment variable consulted for the default worker count of `slice`.
pub const THREADS_ENV: &str = "BQMAP_THREADS";

#[derive(Debug)]
enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    fn report(&self) -> i32 {
        match self {
            CliError::Validation(msg) => {
                eprintln!("error[E_VALIDATION]: {msg}");
                2
            }
            CliError::Io(msg) => {
                eprintln!("error[E_IO]: {msg}");
                2
            }
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

/// Parse `re`, `imi`, or `re+imi` / `re-imi` (e.g. `1.5`, `-2i`, `1+2i`).
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t = s.trim();
    if t.is_empty() {
        return Err("empty complex literal".to_string());
    }
    if let Some(im_part) = t.strip_suffix(['i', 'I']) {
        // find the split between real and imaginary parts: the last +/- not
        // part of an exponent and not leading
        let bytes = im_part.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            let c = bytes[k] as char;
            if (c == '+' || c == '-') && !matches!(bytes[k - 1] as char, 'e' | 'E') {
                split = Some(k);
                break;
            }
        }
        match split {
            Some(k) => {
                let re: f64 = im_part[..k]
                    .parse()
                    .map_err(|_| format!("bad real part in '{s}'"))?;
                let im_str = &im_part[k..];
                let im: f64 = if im_str == "+" {
                    1.0
                } else if im_str == "-" {
                    -1.0
                } else {
                    im_str.parse().map_err(|_| format!("bad imaginary part in '{s}'"))?
                };
                Ok(Complex64::new(re, im))
            }
            None => {
                let im: f64 = if im_part.is_empty() {
                    1.0
                } else if im_part == "-" {
                    -1.0
                } else {
                    im_part.parse().map_err(|_| format!("bad imaginary part in '{s}'"))?
                };
                Ok(Complex64::new(0.0, im))
            }
        }
    } else {
        let re: f64 = t.parse().map_err(|_| format!("bad number '{s}'"))?;
        Ok(Complex64::new(re, 0.0))
    }
}

fn parse_complex_list(s: &str, n: usize, what: &str) -> Result<Vec<Complex64>, CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != n {
        return Err(invalid(format!(
            "{what} needs {n} comma-separated entries, got {}",
            parts.len()
        )));
    }
    parts
        .iter()
        .map(|p| parse_complex(p).map_err(CliError::Validation))
        .collect()
}

fn parse_mu(s: &str) -> Result<MuParams, CliError> {
    let v = parse_complex_list(s, 4, "--mu")?;
    let mu = MuParams::new(v[0], v[1], v[2], v[3]);
    if !mu.is_finite() {
        return Err(invalid("mu must be finite"));
    }
    Ok(mu)
}

fn parse_tau(s: &str) -> Result<BoundaryTraces, CliError> {
    let v = parse_complex_list(s, 4, "--tau")?;
    Ok(BoundaryTraces::new(v[0], v[1], v[2], v[3]))
}

fn parse_triple(s: &str) -> Result<MarkoffTriple, CliError> {
    let v = parse_complex_list(s, 3, "--triple")?;
    let t = MarkoffTriple::new(v[0], v[1], v[2]);
    if !t.is_finite() {
        return Err(invalid("triple must be finite"));
    }
    Ok(t)
}

/// Parse `p/q`, an integer, or `inf`.
pub fn parse_slope(s: &str) -> Result<Slope, String> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
        return Ok(Slope::INFINITY);
    }
    if let Some((n, d)) = t.split_once('/') {
        let num: i64 = n.trim().parse().map_err(|_| format!("bad slope '{s}'"))?;
        let den: i64 = d.trim().parse().map_err(|_| format!("bad slope '{s}'"))?;
        if num == 0 && den == 0 {
            return Err("slope 0/0".to_string());
        }
        Ok(Slope::new(num, den))
    } else {
        let num: i64 = t.parse().map_err(|_| format!("bad slope '{s}'"))?;
        Ok(Slope::new(num, 1))
    }
}

fn parse_window(s: &str) -> Result<(f64, f64, f64, f64), CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(invalid("--window needs re_min,re_max,im_min,im_max"));
    }
    let mut vals = [0f64; 4];
    for (v, p) in vals.iter_mut().zip(parts.iter()) {
        *v = p
            .trim()
            .parse()
            .map_err(|_| invalid(format!("bad window entry '{p}'")))?;
    }
    Ok((vals[0], vals[1], vals[2], vals[3]))
}

/// Flat key=value text or a JSON object; keys mirror the long flag names
/// with underscores (`mu`, `tau`, `triple`, `slope`, `k`, `y`, `x`,
/// `z_branch`, `line_base`, `line_direction`, `window`, `width`, `height`,
/// `output`, `sidecar`, `threads`, `eps_segment`, `eps_degenerate`,
/// `eps_tie`, `max_descent_steps`, `max_vertices`).
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &PathBuf) -> Result<ConfigFile, String> {
        let text =
            std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        ConfigFile::parse(&text)
    }

    pub fn parse(text: &str) -> Result<ConfigFile, String> {
        let trimmed = text.trim_start();
        let mut values = BTreeMap::new();
        if trimmed.starts_with('{') {
            let doc: serde_json::Value =
                serde_json::from_str(text).map_err(|e| format!("config JSON: {e}"))?;
            let obj = doc.as_object().ok_or("config JSON must be an object")?;
            for (k, v) in obj {
                let s = match v {
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Number(n) => n.to_string(),
                    serde_json::Value::Bool(b) => b.to_string(),
                    serde_json::Value::Array(items) => items
                        .iter()
                        .map(|it| match it {
                            serde_json::Value::String(s) => Ok(s.clone()),
                            serde_json::Value::Number(n) => Ok(n.to_string()),
                            _ => Err(format!("config key '{k}': array entries must be scalars")),
                        })
                        .collect::<Result<Vec<_>, _>>()?
                        .join(","),
                    _ => return Err(format!("config key '{k}': unsupported value type")),
                };
                values.insert(k.replace('-', "_"), s);
            }
        } else {
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or(format!("config line {}: expected key=value", lineno + 1))?;
                values.insert(k.trim().replace('-', "_"), v.trim().to_string());
            }
        }
        Ok(ConfigFile { values })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "bqmap",
    about = "Acceptance decisions on the Markoff-triple tree of the four-holed sphere",
    version
)]
struct Cli {
    /// Emit machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Read defaults from a config file (JSON object or key=value lines);
    /// explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default, Clone)]
struct ParamArgs {
    /// Parameters p,q,r,s (complex entries like `1.5`, `-2i`, `1+2i`).
    #[arg(long)]
    mu: Option<String>,
    /// Boundary traces a,b,c,d; parameters are derived from them.
    #[arg(long)]
    tau: Option<String>,
}

#[derive(Args, Debug, Default, Clone)]
struct TuningArgs {
    #[arg(long)]
    eps_segment: Option<f64>,
    #[arg(long)]
    eps_degenerate: Option<f64>,
    #[arg(long)]
    eps_tie: Option<f64>,
    #[arg(long)]
    max_descent_steps: Option<usize>,
    #[arg(long)]
    max_vertices: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Derived constants alpha, m, M, L and the degenerate trace values.
    Constants {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Trace value of the region with a given rational slope.
    Trace {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        triple: Option<String>,
        /// Slope `p/q`, an integer, or `inf`.
        #[arg(long)]
        slope: Option<String>,
    },
    /// Acceptance decision for a triple.
    Bq {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        triple: Option<String>,
        #[command(flatten)]
        tuning: TuningArgs,
    },
    /// Regions with trace modulus at most k (accepted maps only).
    Omega {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        triple: Option<String>,
        #[arg(long)]
        k: Option<f64>,
        #[command(flatten)]
        tuning: TuningArgs,
    },
    /// Topology of the real slice and the ergodicity criterion.
    Classify {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Construct an accepted real seed and test it.
    Seed {
        #[command(flatten)]
        params: ParamArgs,
        /// Seed height; defaults to the documented schedule.
        #[arg(long)]
        y: Option<f64>,
        #[command(flatten)]
        tuning: TuningArgs,
    },
    /// Rasterize a slice to a portable pixmap.
    Slice {
        #[command(flatten)]
        params: ParamArgs,
        /// Line mode: base triple x,y,z.
        #[arg(long)]
        line_base: Option<String>,
        /// Line mode: direction dx,dy,dz.
        #[arg(long)]
        line_direction: Option<String>,
        /// Plane mode: the fixed x value.
        #[arg(long)]
        x: Option<String>,
        /// Plane mode: z root branch (`plus` or `minus`).
        #[arg(long)]
        z_branch: Option<String>,
        /// re_min,re_max,im_min,im_max of the slice parameter.
        #[arg(long)]
        window: Option<String>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
        /// Output PPM path.
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Optional JSON sidecar path.
        #[arg(long)]
        sidecar: Option<PathBuf>,
        /// Worker threads (default: BQMAP_THREADS or all cores).
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        tuning: TuningArgs,
    },
}

fn pick<'a>(flag: &'a Option<String>, cfg: &'a ConfigFile, key: &str) -> Option<&'a str> {
    flag.as_deref().or_else(|| cfg.get(key))
}

fn pick_parse<T: std::str::FromStr>(
    flag: Option<T>,
    cfg: &ConfigFile,
    key: &str,
) -> Result<Option<T>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match cfg.get(key) {
        Some(s) => s
            .parse()
            .map(Some)
            .map_err(|_| invalid(format!("config key '{key}': bad value '{s}'"))),
        None => Ok(None),
    }
}

/// mu, and the boundary traces when they were the input.
fn resolve_params(
    params: &ParamArgs,
    cfg: &ConfigFile,
) -> Result<(MuParams, Option<BoundaryTraces>), CliError> {
    let mu_s = pick(&params.mu, cfg, "mu");
    let tau_s = pick(&params.tau, cfg, "tau");
    match (mu_s, tau_s) {
        (Some(_), Some(_)) => Err(invalid("give exactly one of --mu and --tau")),
        (Some(m), None) => Ok((parse_mu(m)?, None)),
        (None, Some(t)) => {
            let tau = parse_tau(t)?;
            Ok((gt_map(tau), Some(tau)))
        }
        (None, None) => Err(invalid("one of --mu or --tau is required")),
    }
}

fn resolve_tuning(t: &TuningArgs, cfg: &ConfigFile) -> Result<(Tolerances, SearchBudget), CliError> {
    let mut tol = Tolerances::default();
    let mut budget = SearchBudget::default();
    if let Some(v) = pick_parse(t.eps_segment, cfg, "eps_segment")? {
        tol.eps_segment = v;
    }
    if let Some(v) = pick_parse(t.eps_degenerate, cfg, "eps_degenerate")? {
        tol.eps_degenerate = v;
    }
    if let Some(v) = pick_parse(t.eps_tie, cfg, "eps_tie")? {
        tol.eps_tie = v;
    }
    if let Some(v) = pick_parse(t.max_descent_steps, cfg, "max_descent_steps")? {
        budget.max_descent_steps = v;
    }
    if let Some(v) = pick_parse(t.max_vertices, cfg, "max_vertices")? {
        budget.max_vertices = v;
    }
    if tol.eps_segment < 0.0 || tol.eps_degenerate < 0.0 || tol.eps_tie < 0.0 {
        return Err(invalid("tolerances must be nonnegative"));
    }
    if budget.max_descent_steps == 0 || budget.max_vertices == 0 {
        return Err(invalid("budgets must be positive"));
    }
    Ok((tol, budget))
}

fn cx_json(z: Complex64) -> serde_json::Value {
    // num-complex serializes as the pair [re, im]; match it everywhere
    serde_json::to_value(z).expect("complex serializes")
}

fn mu_json(mu: MuParams) -> serde_json::Value {
    json!({"p": cx_json(mu.p), "q": cx_json(mu.q), "r": cx_json(mu.r), "s": cx_json(mu.s)})
}

fn tau_json(tau: Option<BoundaryTraces>) -> serde_json::Value {
    match tau {
        Some(t) => {
            json!({"a": cx_json(t.a), "b": cx_json(t.b), "c": cx_json(t.c), "d": cx_json(t.d)})
        }
        None => serde_json::Value::Null,
    }
}

fn fmt_cx(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im >= 0.0 {
        format!("{}+{}i", z.re, z.im)
    } else {
        format!("{}{}i", z.re, z.im)
    }
}

fn verdict_summary(verdict: &BqVerdict) -> String {
    match verdict {
        BqVerdict::Accepted { omega_l, .. } => {
            format!("accepted ({} regions at or below L)", omega_l.len())
        }
        BqVerdict::Rejected {
            reason, witness, ..
        } => {
            let r = match reason {
                crate::bq::RejectReason::SegmentHit => "segment_hit",
                crate::bq::RejectReason::DegenerateHit => "degenerate_hit",
                crate::bq::RejectReason::SmallRay => "small_ray",
            };
            format!(
                "rejected ({r}; witness slope {} value {})",
                witness.slope,
                fmt_cx(witness.value)
            )
        }
        BqVerdict::Undetermined {
            vertices_used,
            frontier_size,
        } => format!("undetermined (vertices {vertices_used}, frontier {frontier_size})"),
    }
}

fn run_command(cli: &Cli) -> Result<i32, CliError> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p).map_err(CliError::Validation)?,
        None => ConfigFile::default(),
    };
    match &cli.command {
        Command::Constants { params } => {
            let (mu, tau) = resolve_params(params, &cfg)?;
            let consts = derived_constants(mu).map_err(|e| invalid(e.to_string()))?;
            let mut locus = Vec::new();
            for color in Color::ALL {
                let data = degenerate_data(mu, color).map_err(|e| invalid(e.to_string()))?;
                locus.push(json!({
                    "color": color.index() + 1,
                    "quartic": data.quartic.iter().map(|c| cx_json(*c)).collect::<Vec<_>>(),
                    "roots": data.roots.iter().map(|c| cx_json(*c)).collect::<Vec<_>>(),
                    "exclusions": data.exclusions.iter().map(|c| cx_json(*c)).collect::<Vec<_>>(),
                }));
            }
            if cli.json {
                let doc = json!({
                    "command": "constants",
                    "mu": mu_json(mu),
                    "tau": tau_json(tau),
                    "alpha": consts.alpha,
                    "m": consts.m,
                    "big_m": consts.big_m,
                    "big_l": consts.big_l,
                    "degenerate_locus": locus,
                });
                println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            } else {
                println!(
                    "alpha = {}\nm = {}\nM = {}\nL = {}",
                    consts.alpha, consts.m, consts.big_m, consts.big_l
                );
                for color in Color::ALL {
                    let data = degenerate_data(mu, color).map_err(|e| invalid(e.to_string()))?;
                    let roots: Vec<String> = data.roots.iter().map(|r| fmt_cx(*r)).collect();
                    println!("degenerate values (color {color}): {}", roots.join(", "));
                }
            }
            Ok(0)
        }
        Command::Trace {
            params,
            triple,
            slope,
        } => {
            let (mu, tau) = resolve_params(params, &cfg)?;
            let t = parse_triple(
                pick(triple, &cfg, "triple").ok_or_else(|| invalid("--triple is required"))?,
            )?;
            let slope = parse_slope(
                pick(slope, &cfg, "slope").ok_or_else(|| invalid("--slope is required"))?,
            )
            .map_err(CliError::Validation)?;
            let value = trace_at_slope(t, mu, slope).map_err(|e| invalid(e.to_string()))?;
            if cli.json {
                let doc = json!({
                    "command": "trace",
                    "mu": mu_json(mu),
                    "tau": tau_json(tau),
                    "slope": slope,
                    "value": cx_json(value),
                });
                println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            } else {
                println!("trace at slope {slope}: {}", fmt_cx(value));
            }
            Ok(0)
        }
        Command::Bq {
            params,
            triple,
            tuning,
        } => {
            let (mu, tau) = resolve_params(params, &cfg)?;
            let t = parse_triple(
                pick(triple, &cfg, "triple").ok_or_else(|| invalid("--triple is required"))?,
            )?;
            let (tol, budget) = resolve_tuning(tuning, &cfg)?;
            let verdict = bq_test(t, mu, tol, budget).map_err(|e| invalid(e.to_string()))?;
            if cli.json {
                let doc = json!({
                    "command": "bq",
                    "mu": mu_json(mu),
                    "tau": tau_json(tau),
                    "triple": {"x": cx_json(t.x), "y": cx_json(t.y), "z": cx_json(t.z)},
                    "verdict": verdict,
                });
                println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            } else {
                println!("{}", verdict_summary(&verdict));
            }
            Ok(if matches!(verdict, BqVerdict::Undetermined { .. }) {
                3
            } else {
                0
            })
        }
        Command::Omega {
            params,
            triple,
            k,
            tuning,
        } => {
            let (mu, tau) = resolve_params(params, &cfg)?;
            let t = parse_triple(
                pick(triple, &cfg, "triple").ok_or_else(|| invalid("--triple is required"))?,
            )?;
            let k = pick_parse(*k, &cfg, "k")?.ok_or_else(|| invalid("--k is required"))?;
            let (tol, budget) = resolve_tuning(tuning, &cfg)?;
            let regions = omega_k(t, mu, k, tol, budget).map_err(|e| invalid(e.to_string()))?;
            if cli.json {
                let doc = json!({
                    "command": "omega",
                    "mu": mu_json(mu),
                    "tau": tau_json(tau),
                    "k": k,
                    "count": regions.len(),
                    "regions": regions,
                });
                println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            } else {
                println!("{} region(s) with |value| <= {k}", regions.len());
                for r in &regions {
                    println!("  slope {}: {}", r.slope, fmt_cx(r.value));
                }
            }
            Ok(0)
        }
        Command::Classify { params } => {
            let tau_s = pick(&params.tau, &cfg, "tau")
                .ok_or_else(|| invalid("classify requires --tau (real boundary traces)"))?;
            let tau = parse_tau(tau_s)?;
            let topology = classify_real(tau).map_err(|e| invalid(e.to_string()))?;
            let ergodicity = ergodicity_decision(tau).map_err(|e| invalid(e.to_string()))?;
            if cli.json {
                let doc = json!({
                    "command": "classify",
                    "tau": tau_json(Some(tau)),
                    "mu": mu_json(gt_map(tau)),
                    "topology": topology,
                    "ergodicity": ergodicity,
                });
                println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            } else {
                println!(
                    "topology: {:?} (n = {})",
                    topology.case, topology.n_in_segment
                );
                if !topology.euler_note.is_empty() {
                    println!("euler: {}", topology.euler_note);
                }
                println!("ergodicity: {:?}", ergodicity.verdict);
                println!("  {}", ergodicity.rationale);
            }
            Ok(0)
        }
        Command::Seed { params, y, tuning } => {
            let (mu, tau) = resolve_params(params, &cfg)?;
            let y = pick_parse(*y, &cfg, "y")?;
            let seed = match y {
                Some(y) => construct_real_seed(mu, y),
                None => construct_real_seed_auto(mu),
            }
            .map_err(|e| invalid(e.to_string()))?;
            let (tol, budget) = resolve_tuning(tuning, &cfg)?;
            let verdict =
                bq_test(seed.triple, seed.mu, tol, budget).map_err(|e| invalid(e.to_string()))?;
            if cli.json {
                let doc = json!({
                    "command": "seed",
                    "mu_input": mu_json(mu),
                    "tau": tau_json(tau),
                    "seed": seed,
                    "verdict": verdict,
                });
                println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            } else {
                println!(
                    "seed triple ({}, {}, {}) for mu = ({}, {}, {}, {})",
                    fmt_cx(seed.triple.x),
                    fmt_cx(seed.triple.y),
                    fmt_cx(seed.triple.z),
                    fmt_cx(seed.mu.p),
                    fmt_cx(seed.mu.q),
                    fmt_cx(seed.mu.r),
                    fmt_cx(seed.mu.s)
                );
                println!("permutation {:?}, mirrored {}", seed.perm, seed.mirrored);
                println!("epsilon = {}", seed.epsilon);
                println!("{}", verdict_summary(&verdict));
            }
            Ok(if matches!(verdict, BqVerdict::Undetermined { .. }) {
                3
            } else {
                0
            })
        }
        Command::Slice {
            params,
            line_base,
            line_direction,
            x,
            z_branch,
            window,
            width,
            height,
            output,
            sidecar,
            threads,
            tuning,
        } => {
            let (mu, _tau) = resolve_params(params, &cfg)?;
            let (tol, budget) = resolve_tuning(tuning, &cfg)?;
            let window = parse_window(
                pick(window, &cfg, "window").ok_or_else(|| invalid("--window is required"))?,
            )?;
            let width =
                pick_parse(*width, &cfg, "width")?.ok_or_else(|| invalid("--width is required"))?;
            let height = pick_parse(*height, &cfg, "height")?
                .ok_or_else(|| invalid("--height is required"))?;

            let base_s = pick(line_base, &cfg, "line_base");
            let dir_s = pick(line_direction, &cfg, "line_direction");
            let x_s = pick(x, &cfg, "x");
            let plane = match (base_s, dir_s, x_s) {
                (Some(b), Some(d), None) => {
                    let base = parse_triple(b)?;
                    let d = parse_complex_list(d, 3, "--line-direction")?;
                    PlaneSpec::Line {
                        base,
                        direction: (d[0], d[1], d[2]),
                    }
                }
                (None, None, Some(xs)) => {
                    let xv = parse_complex(xs).map_err(CliError::Validation)?;
                    let branch = match pick(z_branch, &cfg, "z_branch").unwrap_or("plus") {
                        "plus" => ZBranch::Plus,
                        "minus" => ZBranch::Minus,
                        other => return Err(invalid(format!("bad --z-branch '{other}'"))),
                    };
                    PlaneSpec::XyPlane {
                        x: xv,
                        z_branch: branch,
                    }
                }
                _ => {
                    return Err(invalid(
                        "give either --line-base with --line-direction, or --x [--z-branch]",
                    ))
                }
            };
            let out_path = output
                .clone()
                .or_else(|| cfg.get("output").map(PathBuf::from))
                .ok_or_else(|| invalid("--output is required"))?;
            let sidecar_path = sidecar
                .clone()
                .or_else(|| cfg.get("sidecar").map(PathBuf::from));

            let spec = SliceSpec {
                mu,
                plane,
                window,
                width,
                height,
                budget,
                tol,
            };
            let threads = match pick_parse(*threads, &cfg, "threads")? {
                Some(n) => Some(n),
                None => match std::env::var(THREADS_ENV) {
                    Ok(v) => Some(
                        v.parse()
                            .map_err(|_| invalid(format!("bad {THREADS_ENV} value '{v}'")))?,
                    ),
                    Err(_) => None,
                },
            };
            let grid = match threads {
                Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| invalid(e.to_string()))?
                    .install(|| evaluate_slice(&spec)),
                _ => evaluate_slice(&spec),
            }
            .map_err(|e| invalid(e.to_string()))?;

            let ppm_bytes =
                write_ppm(&grid, &Palette::default(), &out_path).map_err(|e| match e {
                    crate::render::RenderError::Io(io) => CliError::Io(io.to_string()),
                    other => invalid(other.to_string()),
                })?;
            let sidecar_bytes = match &sidecar_path {
                Some(p) => Some(write_sidecar_json(&grid, &spec, p).map_err(|e| match e {
                    crate::render::RenderError::Io(io) => CliError::Io(io.to_string()),
                    other => invalid(other.to_string()),
                })?),
                None => None,
            };

            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for p in &grid.pixels {
                let key = match p.kind {
                    PixelKind::Accepted => "accepted",
                    PixelKind::RejectedSegment => "rejected_segment",
                    PixelKind::RejectedDegenerate => "rejected_degenerate",
                    PixelKind::RejectedSmallRay => "rejected_small_ray",
                    PixelKind::Undetermined => "undetermined",
                    PixelKind::OffVariety => "off_variety",
                };
                *counts.entry(key).or_insert(0) += 1;
            }
            if cli.json {
                let doc = json!({
                    "command": "slice",
                    "output": out_path.display().to_string(),
                    "ppm_bytes": ppm_bytes,
                    "sidecar": sidecar_path.as_ref().map(|p| p.display().to_string()),
                    "sidecar_bytes": sidecar_bytes,
                    "width": grid.width,
                    "height": grid.height,
                    "counts": counts,
                });
                println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            } else {
                println!(
                    "wrote {} ({} bytes), {}x{}",
                    out_path.display(),
                    ppm_bytes,
                    grid.width,
                    grid.height
                );
                for (k, v) in &counts {
                    println!("  {k}: {v}");
                }
            }
            // single-point budget exhaustion is reported in the exit code
            let single_undetermined = grid.pixels.len() == 1
                && grid.pixels[0].kind == PixelKind::Undetermined;
            Ok(if single_undetermined { 3 } else { 0 })
        }
    }
}

/// Entry point used by the `bqmap` binary; returns the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own message (help/version exit 0)
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_command(&cli) {
        Ok(code) => code,
        Err(e) => e.report(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("1.5").unwrap(), Complex64::new(1.5, 0.0));
        assert_eq!(parse_complex("-2").unwrap(), Complex64::new(-2.0, 0.0));
        assert_eq!(parse_complex("2i").unwrap(), Complex64::new(0.0, 2.0));
        assert_eq!(parse_complex("-2i").unwrap(), Complex64::new(0.0, -2.0));
        assert_eq!(parse_complex("1+2i").unwrap(), Complex64::new(1.0, 2.0));
        assert_eq!(parse_complex("1-2i").unwrap(), Complex64::new(1.0, -2.0));
        assert_eq!(
            parse_complex("-1.5e-3+2.25i").unwrap(),
            Complex64::new(-1.5e-3, 2.25)
        );
        assert_eq!(parse_complex("1e2").unwrap(), Complex64::new(100.0, 0.0));
        assert_eq!(parse_complex("1E2i").unwrap(), Complex64::new(0.0, 100.0));
        assert_eq!(parse_complex("3+i").unwrap(), Complex64::new(3.0, 1.0));
        assert_eq!(parse_complex("3-i").unwrap(), Complex64::new(3.0, -1.0));
        assert!(parse_complex("").is_err());
        assert!(parse_complex("nope").is_err());
    }

    #[test]
    fn slope_parsing() {
        assert_eq!(parse_slope("3/5").unwrap(), Slope::new(3, 5));
        assert_eq!(parse_slope("-2").unwrap(), Slope::new(-2, 1));
        assert_eq!(parse_slope("inf").unwrap(), Slope::INFINITY);
        assert_eq!(parse_slope("4/6").unwrap(), Slope::new(2, 3));
        assert!(parse_slope("x").is_err());
        assert!(parse_slope("0/0").is_err());
    }

    #[test]
    fn config_parsing() {
        let kv = ConfigFile::parse("mu = 0,0,1,20\n# comment\nwidth=32\n").unwrap();
        assert_eq!(kv.get("mu"), Some("0,0,1,20"));
        assert_eq!(kv.get("width"), Some("32"));

        let js = ConfigFile::parse(r#"{"mu": "0,0,1,20", "width": 32, "window": [-1, 1, -1, 1]}"#)
            .unwrap();
        assert_eq!(js.get("mu"), Some("0,0,1,20"));
        assert_eq!(js.get("width"), Some("32"));
        assert_eq!(js.get("window"), Some("-1,1,-1,1"));

        assert!(ConfigFile::parse("not a config").is_err());
    }

    #[test]
    fn run_smoke() {
        assert_eq!(
            run(["bqmap", "bq", "--mu", "0,0,0,4", "--triple", "0,0,2"]),
            0
        );
        assert_eq!(run(["bqmap", "bq", "--mu", "0,0,0,4"]), 2);
        assert_eq!(
            run(["bqmap", "classify", "--tau", "3,3,3,-3", "--json"]),
            0
        );
        // undetermined exit code
        assert_eq!(
            run([
                "bqmap",
                "bq",
                "--mu",
                "0,0,0,200",
                "--triple",
                "5,5,5",
                "--max-vertices",
                "1"
            ]),
            3
        );
    }
}
