use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adelic_core::config::EngineConfig;
use adelic_core::identities::{run_suite, SUITES};
use adelic_core::loopspace::{adelic_map, project_plus_seq, SequencePoint};
use adelic_core::novikov::{theorem3_transform, theorem4_operator_form, theorem4_transform, DiffOp, NovikovSeries, NovikovShape, Theorem4Input};
use adelic_core::qfun::LaurentPoly;
use adelic_core::qk_point::{check_theorem1_pt, dq_multiply, generalized_flow, reconstruct, string_flow, theorem2_generate, PtParams};
use adelic_core::LambdaElement;
use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "adelic", version, about = "Exact symbolic engine for points of the permutation-equivariant quantum K-theory cone")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Λ₊ filtration order.
    #[arg(long = "D", global = true)]
    d: Option<u32>,
    /// Order of series in u = q - 1.
    #[arg(long = "E", global = true)]
    e: Option<u32>,
    /// Sequence length.
    #[arg(long = "R", global = true)]
    r: Option<u32>,
    /// Largest root-of-unity order.
    #[arg(long = "M-max", global = true)]
    m_max: Option<u32>,
    /// Novikov degree bound.
    #[arg(long = "G", global = true)]
    g: Option<u32>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON config file with keys D, E, R, M_max, G, seed.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Read the main input from stdin and write the result to stdout.
    #[arg(long, global = true)]
    stdio: bool,
    /// Output file (stdout when absent).
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Builds the point with the given parameters `{tau: {k: λ}, t: {r: laurent}}`.
    Generate { params: Option<PathBuf> },
    /// Moves a point along the string flow or the generalized flow.
    Flow {
        #[arg(long, value_enum)]
        kind: FlowKind,
        /// `{tau: {k: λ}}` for the string flow, `{D: {k: laurent}}` for the generalized flow.
        #[arg(long = "with")]
        with: PathBuf,
        point: Option<PathBuf>,
    },
    /// Multiplies entries by Laurent polynomials `{D: {r: laurent}}`.
    Multiply {
        #[arg(long = "with")]
        with: PathBuf,
        point: Option<PathBuf>,
    },
    /// Applies the operator exponential transform to Novikov series.
    Transform3 { input: Option<PathBuf> },
    /// Evaluates the explicit reconstruction formula, checked against its operator form.
    Transform4 { input: Option<PathBuf> },
    /// Projects every entry to its Laurent polynomial part.
    Project { point: Option<PathBuf> },
    /// Checks a point against the adelic criteria and writes a certificate.
    Check { point: Option<PathBuf> },
    /// Finds parameters whose point projects onto the given targets.
    Reconstruct {
        targets: Option<PathBuf>,
        #[arg(long)]
        params_out: Option<PathBuf>,
        #[arg(long)]
        point_out: Option<PathBuf>,
    },
    /// Runs an identity suite: hurwitz, todd, box-delta, adams-ops, expansion-lemma or all.
    Identities {
        suite: String,
        /// Injects a detectable error into the Todd and box/delta comparisons.
        #[arg(long)]
        perturb: bool,
    },
    /// Expands every entry at every root of unity of order at most M_max.
    AdelicExpand { point: Option<PathBuf> },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FlowKind {
    String,
    Generalized,
}

/// A failure carrying the process exit code.
#[derive(Debug)]
struct Exit {
    code: u8,
    message: String,
}

impl Exit {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Exit { code, message: message.into() }
    }
}

impl From<anyhow::Error> for Exit {
    fn from(e: anyhow::Error) -> Self {
        Exit::new(2, format!("{e:#}"))
    }
}

type CmdResult = std::result::Result<Option<Value>, Exit>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: &Cli) -> std::result::Result<(), Exit> {
    let g = &cli.global;
    let (value, exit) = match &cli.command {
        Command::Generate { params } => split(cmd_generate(g, params.as_deref())),
        Command::Flow { kind, with, point } => split(cmd_flow(g, *kind, with, point.as_deref())),
        Command::Multiply { with, point } => split(cmd_multiply(g, with, point.as_deref())),
        Command::Transform3 { input } => split(cmd_transform3(g, input.as_deref())),
        Command::Transform4 { input } => split(cmd_transform4(g, input.as_deref())),
        Command::Project { point } => split(cmd_project(g, point.as_deref())),
        Command::Check { point } => cmd_check(g, point.as_deref())?,
        Command::Reconstruct { targets, params_out, point_out } => {
            split(cmd_reconstruct(g, targets.as_deref(), params_out.as_deref(), point_out.as_deref()))
        }
        Command::Identities { suite, perturb } => cmd_identities(g, suite, *perturb)?,
        Command::AdelicExpand { point } => split(cmd_adelic_expand(g, point.as_deref())),
    };
    if let Some(v) = value {
        write_output(g, &v)?;
    }
    match exit {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn split(r: CmdResult) -> (Option<Value>, Option<Exit>) {
    match r {
        Ok(v) => (v, None),
        Err(e) => (None, Some(e)),
    }
}

fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn write_output(g: &GlobalArgs, v: &Value) -> std::result::Result<(), Exit> {
    write_to(g.output.as_deref().filter(|_| !g.stdio), v).map_err(Exit::from)
}

fn write_to(path: Option<&Path>, v: &Value) -> anyhow::Result<()> {
    let text = render(v);
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn read_json(path: &Path) -> anyhow::Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// The main input: the given file, or stdin with `--stdio` or when no file is given.
fn read_main(g: &GlobalArgs, path: Option<&Path>) -> anyhow::Result<Value> {
    match path {
        Some(p) if !g.stdio => read_json(p),
        _ => {
            let mut text = String::new();
            std::io::stdin().read_to_string(&mut text).context("reading stdin")?;
            serde_json::from_str(&text).context("parsing stdin")
        }
    }
}

/// Defaults, then the config embedded in `embedded`, then `--config`, then flags.
fn resolve_config(g: &GlobalArgs, embedded: Option<&Value>) -> anyhow::Result<EngineConfig> {
    let mut c = EngineConfig::default();
    if let Some(v) = embedded {
        c.merge_json(v)?;
    }
    if let Some(p) = &g.config {
        c.merge_json(&read_json(p)?)?;
    }
    if let Some(d) = g.d {
        c.d = d;
    }
    if let Some(e) = g.e {
        c.e = e as i64;
    }
    if let Some(r) = g.r {
        c.r = r;
    }
    if let Some(m) = g.m_max {
        c.m_max = m;
    }
    if let Some(x) = g.g {
        c.g = x;
    }
    if let Some(s) = g.seed {
        c.seed = s;
    }
    c.validate()?;
    Ok(c)
}

fn read_point(g: &GlobalArgs, path: Option<&Path>) -> anyhow::Result<SequencePoint> {
    let v = read_main(g, path)?;
    let config = resolve_config(g, v.get("config"))?;
    Ok(SequencePoint::from_json(&v, &config)?)
}

fn indexed<T>(v: Option<&Value>, what: &str, parse: impl Fn(&Value) -> anyhow::Result<T>) -> anyhow::Result<BTreeMap<u32, T>> {
    let Some(v) = v else {
        return Ok(BTreeMap::new());
    };
    let obj = v.as_object().ok_or_else(|| anyhow!("`{what}` must be an object keyed by index"))?;
    obj.iter()
        .map(|(k, x)| {
            let i: u32 = k.parse().map_err(|_| anyhow!("bad index `{k}` in `{what}`"))?;
            if i == 0 {
                bail!("indices in `{what}` start at 1");
            }
            Ok((i, parse(x)?))
        })
        .collect()
}

fn cmd_generate(g: &GlobalArgs, params: Option<&Path>) -> CmdResult {
    let v = match params {
        None if !g.stdio => json!({}),
        p => read_main(g, p)?,
    };
    let config = resolve_config(g, None)?;
    let p = PtParams::from_json(&v, config.d).map_err(|e| Exit::new(2, e.to_string()))?;
    p.validate().map_err(|e| Exit::new(2, format!("invalid parameters: {e}")))?;
    let f = theorem2_generate(&p, &config).map_err(|e| Exit::new(2, e.to_string()))?;
    Ok(Some(f.to_json()))
}

fn cmd_flow(g: &GlobalArgs, kind: FlowKind, with: &Path, point: Option<&Path>) -> CmdResult {
    let f = read_point(g, point)?;
    let w = read_json(with)?;
    let d = f.config.d;
    let moved = match kind {
        FlowKind::String => {
            let tau = indexed(w.get("tau"), "tau", |x| Ok(LambdaElement::from_json(x, d)?))?;
            string_flow(&f, &tau)
        }
        FlowKind::Generalized => {
            let ops = indexed(w.get("D"), "D", |x| Ok(LaurentPoly::from_json(x, d)?))?;
            generalized_flow(&f, &ops)
        }
    };
    Ok(Some(moved.map_err(|e| Exit::new(2, e.to_string()))?.to_json()))
}

fn cmd_multiply(g: &GlobalArgs, with: &Path, point: Option<&Path>) -> CmdResult {
    let f = read_point(g, point)?;
    let w = read_json(with)?;
    let ops = indexed(w.get("D"), "D", |x| Ok(LaurentPoly::from_json(x, f.config.d)?))?;
    Ok(Some(dq_multiply(&f, &ops).map_err(|e| Exit::new(2, e.to_string()))?.to_json()))
}

fn novikov_shape(v: &Value, config: &EngineConfig) -> anyhow::Result<NovikovShape> {
    let nil = match v.get("nil") {
        Some(n) => n
            .as_array()
            .ok_or_else(|| anyhow!("`nil` must be a list"))?
            .iter()
            .map(|x| x.as_u64().map(|x| x as u32).ok_or_else(|| anyhow!("`nil` entries must be integers")))
            .collect::<anyhow::Result<Vec<u32>>>()?,
        None => vec![1],
    };
    Ok(NovikovShape { nil, g: config.g, order: config.d })
}

fn series_list(v: Option<&Value>, shape: &NovikovShape) -> anyhow::Result<Vec<NovikovSeries>> {
    let items = v.and_then(Value::as_array).ok_or_else(|| anyhow!("missing list `f`"))?;
    items.iter().map(|x| Ok(NovikovSeries::from_json(x, shape)?)).collect()
}

fn cmd_transform3(g: &GlobalArgs, input: Option<&Path>) -> CmdResult {
    let v = read_main(g, input)?;
    let config = resolve_config(g, v.get("config"))?;
    let shape = novikov_shape(&v, &config)?;
    let f = series_list(v.get("f"), &shape)?;
    let ops = indexed(v.get("ops"), "ops", |x| Ok(DiffOp::from_json(x, &shape)?))?;
    let out = theorem3_transform(&f, &ops).map_err(|e| Exit::new(2, e.to_string()))?;
    Ok(Some(json!({"g": out.iter().map(NovikovSeries::to_json).collect::<Vec<_>>()})))
}

fn triple_list<T>(v: Option<&Value>, what: &str, parse: impl Fn(&Value) -> anyhow::Result<T>) -> anyhow::Result<BTreeMap<(usize, u32), T>> {
    let Some(items) = v else {
        return Ok(BTreeMap::new());
    };
    let items = items.as_array().ok_or_else(|| anyhow!("`{what}` must be a list of [alpha, index, value]"))?;
    items
        .iter()
        .map(|item| {
            let t = item.as_array().filter(|t| t.len() == 3).ok_or_else(|| anyhow!("bad `{what}` entry {item}"))?;
            let alpha = t[0].as_u64().ok_or_else(|| anyhow!("bad basis index in `{what}`"))? as usize;
            let idx = t[1].as_u64().filter(|i| *i > 0).ok_or_else(|| anyhow!("bad index in `{what}`"))? as u32;
            Ok(((alpha, idx), parse(&t[2])?))
        })
        .collect()
}

fn cmd_transform4(g: &GlobalArgs, input: Option<&Path>) -> CmdResult {
    let v = read_main(g, input)?;
    let config = resolve_config(g, v.get("config"))?;
    let shape = novikov_shape(&v, &config)?;
    let d = config.d;
    let basis: Vec<Vec<u32>> = serde_json::from_value(v.get("basis").cloned().ok_or_else(|| anyhow!("missing `basis`"))?)
        .context("`basis` must be a list of exponent vectors")?;
    let input = Theorem4Input {
        shape: shape.clone(),
        f: series_list(v.get("f"), &shape)?,
        c: triple_list(v.get("c"), "c", |x| Ok(LaurentPoly::from_json(x, d)?))?,
        tau: triple_list(v.get("tau"), "tau", |x| Ok(LambdaElement::from_json(x, d)?))?,
        basis,
    };
    let closed = theorem4_transform(&input).map_err(|e| Exit::new(2, e.to_string()))?;
    let operator = theorem4_operator_form(&input).map_err(|e| Exit::new(2, e.to_string()))?;
    let agree = closed == operator;
    let out = json!({"g": closed.iter().map(NovikovSeries::to_json).collect::<Vec<_>>(), "operator_form_agrees": agree});
    if !agree {
        write_output(g, &out)?;
        return Err(Exit::new(1, "closed formula and operator form disagree"));
    }
    Ok(Some(out))
}

fn cmd_project(g: &GlobalArgs, point: Option<&Path>) -> CmdResult {
    let f = read_point(g, point)?;
    let targets: Vec<Value> = project_plus_seq(&f).iter().map(LaurentPoly::to_json).collect();
    Ok(Some(json!({"config": f.config.to_json(), "targets": targets})))
}

fn cmd_check(g: &GlobalArgs, point: Option<&Path>) -> std::result::Result<(Option<Value>, Option<Exit>), Exit> {
    let f = read_point(g, point)?;
    let cert = check_theorem1_pt(&f);
    let v = cert.to_json();
    let exit = if !cert.passed() {
        Some(Exit::new(1, format!("failed: {}", cert.failure_ids().join(", "))))
    } else if !cert.unchecked_in_window().is_empty() {
        let ids: Vec<String> = cert.unchecked_in_window().iter().map(|(r, m, a)| format!("r{r}_zeta{m}_{a}")).collect();
        Some(Exit::new(3, format!("unchecked cells in the window: {}", ids.join(", "))))
    } else {
        None
    };
    Ok((Some(v), exit))
}

fn cmd_reconstruct(g: &GlobalArgs, targets: Option<&Path>, params_out: Option<&Path>, point_out: Option<&Path>) -> CmdResult {
    let v = read_main(g, targets)?;
    let config = resolve_config(g, v.get("config"))?;
    let items = v.get("targets").and_then(Value::as_array).ok_or_else(|| anyhow!("missing list `targets`"))?;
    let targets: Vec<LaurentPoly> = items.iter().map(|x| LaurentPoly::from_json(x, config.d)).collect::<Result<_, _>>().map_err(|e| Exit::new(2, e.to_string()))?;
    let (params, point) = reconstruct(&targets, &config).map_err(|e| Exit::new(2, e.to_string()))?;
    if let Some(p) = params_out {
        write_to(Some(p), &params.to_json())?;
    }
    if let Some(p) = point_out {
        write_to(Some(p), &point.to_json())?;
    }
    Ok(Some(json!({"params": params.to_json(), "point": point.to_json()})))
}

fn cmd_identities(g: &GlobalArgs, suite: &str, perturb: bool) -> std::result::Result<(Option<Value>, Option<Exit>), Exit> {
    if suite != "all" && !SUITES.contains(&suite) {
        return Err(Exit::new(2, format!("unknown suite `{suite}`; expected one of {}, all", SUITES.join(", "))));
    }
    let config = resolve_config(g, None)?;
    let results = run_suite(suite, &config, perturb).map_err(|e| Exit::new(2, e.to_string()))?;
    let passed = results.iter().all(|r| r.passed);
    let v = json!({"suite": suite, "passed": passed, "results": results.iter().map(|r| r.to_json()).collect::<Vec<_>>()});
    let exit = results.iter().find(|r| !r.passed).map(|r| Exit::new(1, format!("identity failed: {} / {}", r.suite, r.name)));
    Ok((Some(v), exit))
}

fn cmd_adelic_expand(g: &GlobalArgs, point: Option<&Path>) -> CmdResult {
    let f = read_point(g, point)?;
    let table = adelic_map(&f).map_err(|e| Exit::new(2, e.to_string()))?;
    Ok(Some(table.to_json()))
}
