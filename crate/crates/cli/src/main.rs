//! Command-line frontend.
//!
//! Exit codes: 0 success, 1 a verification reported failure, 2 usage or format
//! error, 3 enumeration budget exceeded.

mod output;

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use stable_theta::config::{OutputFormat, CONFIG_ENV};
use stable_theta::expansion::{deserialize, singular_support_check, AnyExpansion};
use stable_theta::lattice::{count_vectors_by_norm, is_even_unimodular, min_norm};
use stable_theta::numeric::{
    check_inversion_genus1, eval_jacobi_expansion, eval_jacobi_theta_direct, eval_siegel_expansion, eval_theta_direct,
    SiegelJacobiPoint, DEFAULT_TOL,
};
use stable_theta::operators::{shimura_product, siegel_jacobi_psi, siegel_phi, verify_stable, FamilyKind};
use stable_theta::schottky::{igusa_form, pair_condition, schottky_jacobi_candidate, theta_difference};
use stable_theta::theta::{jacobi_theta, siegel_theta, theta_sc};
use stable_theta::{
    Catalog, Error, EvenLattice, IntMatrix, JacobiExpansion, JacobiIndex, Limits, RunConfig, SiegelExpansion,
};

use output::Rendered;

#[derive(Parser)]
#[command(
    name = "stable-theta",
    version,
    about = "Fourier expansions of theta series of even unimodular lattices"
)]
struct Cli {
    /// Write the result to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format: json or table.
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<OutputFormat>,
    /// Worker threads for enumeration.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run configuration (TOML or JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lattice data.
    Lattice {
        #[command(subcommand)]
        command: LatticeCommand,
    },
    /// Theta series expansions.
    Theta {
        #[command(subcommand)]
        command: ThetaCommand,
    },
    /// theta_{E8+E8} - theta_{D16plus}.
    Igusa(GenusBound),
    /// theta_P - theta_Q.
    Diff(DiffArgs),
    /// (theta_Q - theta_P) times the Jacobi theta series of --index-lattice.
    SchottkyJacobi(SchottkyArgs),
    /// Degree-lowering operators on an expansion document.
    Op {
        #[command(subcommand)]
        command: OpCommand,
    },
    /// Product of a Siegel and a Jacobi expansion (two --input documents).
    Product(Inputs),
    /// Structural checks; exit 1 when a check fails.
    Verify {
        #[command(subcommand)]
        command: VerifyCommand,
    },
    /// Lattice pair conditions and numeric identities.
    Check {
        #[command(subcommand)]
        command: CheckCommand,
    },
    /// Evaluate an expansion, or a lattice theta series directly, at a point.
    Eval(EvalArgs),
}

#[derive(Subcommand)]
enum LatticeCommand {
    /// Rank, determinant, minimal norm and norm counts up to --bound.
    Info(InfoArgs),
}

#[derive(Subcommand)]
enum ThetaCommand {
    /// Siegel theta series of --lattice.
    Siegel(LatticeGenusBound),
    /// Jacobi theta series of index --index-lattice / 2.
    Jacobi(IndexGenusBound),
    /// Theta series of --lattice twisted by --c-matrix.
    Sc(ScArgs),
}

#[derive(Subcommand)]
enum OpCommand {
    /// Siegel Phi on a Siegel document.
    Phi(Inputs),
    /// Siegel-Jacobi Psi on a Jacobi document.
    Psi(Inputs),
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Check that a family is stable under Phi or Psi.
    Stable(StableArgs),
    /// Check that every coefficient of a Jacobi expansion sits on a singular index.
    Singular(SingularArgs),
}

#[derive(Subcommand)]
enum CheckCommand {
    /// Minimal-norm condition and norm-count case of a lattice pair.
    Pair(PairArgs),
    /// Genus-1 inversion law at the point in --input.
    Inversion(InversionArgs),
}

#[derive(Args)]
struct GenusBound {
    #[arg(long)]
    genus: usize,
    /// Trace bound; defaults to the configured bound.
    #[arg(long)]
    bound: Option<i64>,
}

#[derive(Args)]
struct LatticeGenusBound {
    #[arg(long)]
    lattice: String,
    #[command(flatten)]
    gb: GenusBound,
}

#[derive(Args)]
struct IndexGenusBound {
    #[arg(long = "index-lattice")]
    index_lattice: String,
    #[command(flatten)]
    gb: GenusBound,
}

#[derive(Args)]
struct InfoArgs {
    #[arg(long)]
    lattice: String,
    /// Even norm bound for the norm counts.
    #[arg(long, default_value_t = 4)]
    bound: i64,
}

#[derive(Args)]
struct ScArgs {
    #[arg(long)]
    lattice: String,
    /// JSON file holding the integer matrix c.
    #[arg(long = "c-matrix")]
    c_matrix: PathBuf,
    #[command(flatten)]
    gb: GenusBound,
}

#[derive(Args)]
struct DiffArgs {
    #[arg(long)]
    p: String,
    #[arg(long)]
    q: String,
    #[command(flatten)]
    gb: GenusBound,
}

#[derive(Args)]
struct SchottkyArgs {
    #[arg(long)]
    p: String,
    #[arg(long)]
    q: String,
    #[arg(long = "index-lattice")]
    index_lattice: String,
    #[command(flatten)]
    gb: GenusBound,
}

#[derive(Args)]
struct Inputs {
    /// Expansion or point documents; `-` reads stdin.
    #[arg(long)]
    input: Vec<String>,
}

#[derive(Args)]
struct StableArgs {
    #[arg(long)]
    kind: FamilyKind,
    /// Lattice of a Siegel theta family (or the index of a Jacobi family).
    #[arg(long)]
    lattice: Option<String>,
    #[arg(long = "index-lattice")]
    index_lattice: Option<String>,
    #[arg(long = "max-genus")]
    max_genus: Option<usize>,
    #[arg(long)]
    bound: Option<i64>,
    /// Family members in increasing genus, instead of a theta family.
    #[arg(long)]
    input: Vec<String>,
}

#[derive(Args)]
struct SingularArgs {
    #[arg(long)]
    input: Vec<String>,
    #[arg(long = "index-lattice")]
    index_lattice: Option<String>,
    #[arg(long)]
    lattice: Option<String>,
    #[arg(long = "c-matrix")]
    c_matrix: Option<PathBuf>,
    #[arg(long)]
    genus: Option<usize>,
    #[arg(long)]
    bound: Option<i64>,
}

#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    p: String,
    #[arg(long)]
    q: String,
}

#[derive(Args)]
struct InversionArgs {
    #[arg(long)]
    lattice: String,
    /// Genus-1 point document.
    #[arg(long)]
    input: String,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    /// A point document, optionally followed or preceded by an expansion document.
    #[arg(long)]
    input: Vec<String>,
    /// Sum the theta series of this lattice directly instead.
    #[arg(long)]
    lattice: Option<String>,
    /// Sum the Jacobi theta series of this index directly instead.
    #[arg(long = "index-lattice")]
    index_lattice: Option<String>,
    /// Trace bound of the direct sum (norms up to twice this).
    #[arg(long)]
    bound: Option<i64>,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    match s {
        "json" => Ok(OutputFormat::Json),
        "table" => Ok(OutputFormat::Table),
        _ => Err(format!("unknown format {s:?} (expected json or table)")),
    }
}

/// Failure of a command, carrying its exit code.
enum Failure {
    Usage(String),
    Budget(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Budget { .. } => Failure::Budget(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type CmdResult<T> = Result<T, Failure>;

struct Ctx {
    cfg: RunConfig,
    limits: Limits,
    catalog: Catalog,
}

impl Ctx {
    fn new(cli: &Cli) -> CmdResult<Self> {
        let path = cli.config.clone().or_else(|| {
            std::env::var_os(CONFIG_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
        });
        let mut cfg = match path {
            Some(p) => RunConfig::load(&p)?,
            None => RunConfig::default(),
        };
        if let Some(t) = cli.threads {
            if t == 0 {
                return Err(Failure::Usage("--threads must be positive".into()));
            }
            cfg.threads = t;
        }
        if let Some(f) = cli.format {
            cfg.format = f;
        }
        let mut catalog = Catalog::default();
        if let Some(p) = &cfg.catalog_path {
            catalog.extend_from_file(p)?;
        }
        Ok(Ctx {
            limits: cfg.limits(),
            cfg,
            catalog,
        })
    }

    fn lattice(&self, name: &str) -> CmdResult<EvenLattice> {
        Ok(self.catalog.get(name)?)
    }

    fn index(&self, name: &str) -> CmdResult<JacobiIndex> {
        Ok(JacobiIndex::from_lattice(&self.lattice(name)?)?)
    }

    fn bound(&self, b: Option<i64>) -> CmdResult<i64> {
        match b {
            Some(b) if b < 0 => Err(Failure::Usage(format!("--bound must be nonnegative, got {b}"))),
            Some(b) => Ok(b),
            None => Ok(self.cfg.default_bound as i64),
        }
    }
}

fn read_input(path: &str) -> CmdResult<String> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Usage(format!("stdin: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{path}: {e}")))
}

fn read_expansion(path: &str) -> CmdResult<AnyExpansion> {
    deserialize(&read_input(path)?).map_err(|e| Failure::Usage(format!("{path}: {e}")))
}

fn read_point(path: &str) -> CmdResult<SiegelJacobiPoint> {
    SiegelJacobiPoint::from_json(&read_input(path)?).map_err(|e| Failure::Usage(format!("{path}: {e}")))
}

fn read_matrix(path: &Path) -> CmdResult<IntMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let rows: Vec<Vec<i64>> =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(IntMatrix::from_rows(&rows)?)
}

fn one_input(inputs: &[String]) -> CmdResult<&str> {
    match inputs {
        [one] => Ok(one),
        _ => Err(Failure::Usage(format!("expected one --input, got {}", inputs.len()))),
    }
}

fn siegel_input(path: &str) -> CmdResult<SiegelExpansion> {
    match read_expansion(path)? {
        AnyExpansion::Siegel(e) => Ok(e),
        AnyExpansion::Jacobi(_) => Err(Failure::Usage(format!("{path}: expected a siegel expansion"))),
    }
}

fn jacobi_input(path: &str) -> CmdResult<JacobiExpansion> {
    match read_expansion(path)? {
        AnyExpansion::Jacobi(e) => Ok(e),
        AnyExpansion::Siegel(_) => Err(Failure::Usage(format!("{path}: expected a jacobi expansion"))),
    }
}

/// Result of a command: the rendered output and whether a verification passed.
struct Outcome {
    body: Rendered,
    pass: bool,
}

impl Outcome {
    fn ok(body: Rendered) -> Self {
        Outcome { body, pass: true }
    }
}

fn report<T: Serialize>(v: &T) -> Rendered {
    Rendered::Report(serde_json::to_value(v).expect("report serializes"))
}

fn run(cli: &Cli, ctx: &Ctx) -> CmdResult<Outcome> {
    let lim = &ctx.limits;
    let out = match &cli.command {
        Command::Lattice {
            command: LatticeCommand::Info(a),
        } => {
            let l = ctx.lattice(&a.lattice)?;
            let even_unimodular = is_even_unimodular(l.gram());
            let mu = if l.rank() == 0 { None } else { Some(min_norm(&l, lim)?) };
            let profile = count_vectors_by_norm(&l, a.bound, lim)?;
            Outcome::ok(report(&json!({
                "name": l.label(),
                "rank": l.rank(),
                "det": l.det().to_string(),
                "even_unimodular": even_unimodular,
                "min_norm": mu,
                "norm_bound": a.bound,
                "norm_counts": profile.counts,
            })))
        }
        Command::Theta { command } => {
            let e: AnyExpansion = match command {
                ThetaCommand::Siegel(a) => {
                    siegel_theta(&ctx.lattice(&a.lattice)?, a.gb.genus, ctx.bound(a.gb.bound)?, lim)?.into()
                }
                ThetaCommand::Jacobi(a) => {
                    jacobi_theta(&ctx.index(&a.index_lattice)?, a.gb.genus, ctx.bound(a.gb.bound)?, lim)?.into()
                }
                ThetaCommand::Sc(a) => theta_sc(
                    &ctx.lattice(&a.lattice)?,
                    &read_matrix(&a.c_matrix)?,
                    a.gb.genus,
                    ctx.bound(a.gb.bound)?,
                    lim,
                )?
                .into(),
            };
            Outcome::ok(Rendered::Expansion(e))
        }
        Command::Igusa(a) => Outcome::ok(Rendered::Expansion(
            igusa_form(a.genus, ctx.bound(a.bound)?, lim)?.into(),
        )),
        Command::Diff(a) => {
            let d = theta_difference(
                &ctx.lattice(&a.p)?,
                &ctx.lattice(&a.q)?,
                a.gb.genus,
                ctx.bound(a.gb.bound)?,
                lim,
            )?;
            Outcome::ok(Rendered::Expansion(d.into()))
        }
        Command::SchottkyJacobi(a) => {
            let c = schottky_jacobi_candidate(
                &ctx.lattice(&a.p)?,
                &ctx.lattice(&a.q)?,
                &ctx.index(&a.index_lattice)?,
                a.gb.genus,
                ctx.bound(a.gb.bound)?,
                lim,
            )?;
            if let Some(w) = &c.warning {
                eprintln!("warning: {w}");
            }
            Outcome::ok(Rendered::Expansion(c.expansion.into()))
        }
        Command::Op { command } => {
            let e: AnyExpansion = match command {
                OpCommand::Phi(i) => siegel_phi(&siegel_input(one_input(&i.input)?)?)?.into(),
                OpCommand::Psi(i) => siegel_jacobi_psi(&jacobi_input(one_input(&i.input)?)?)?.into(),
            };
            Outcome::ok(Rendered::Expansion(e))
        }
        Command::Product(i) => {
            let [a, b] = i.input.as_slice() else {
                return Err(Failure::Usage(format!(
                    "product needs two --input documents, got {}",
                    i.input.len()
                )));
            };
            let p = match (read_expansion(a)?, read_expansion(b)?) {
                (AnyExpansion::Siegel(f), AnyExpansion::Jacobi(j))
                | (AnyExpansion::Jacobi(j), AnyExpansion::Siegel(f)) => shimura_product(&f, &j)?,
                _ => {
                    return Err(Failure::Usage(
                        "product needs one siegel and one jacobi expansion".into(),
                    ))
                }
            };
            Outcome::ok(Rendered::Expansion(p.into()))
        }
        Command::Verify {
            command: VerifyCommand::Stable(a),
        } => verify_stable_cmd(ctx, a)?,
        Command::Verify {
            command: VerifyCommand::Singular(a),
        } => {
            let f = if !a.input.is_empty() {
                jacobi_input(one_input(&a.input)?)?
            } else {
                let g = a
                    .genus
                    .ok_or_else(|| Failure::Usage("--genus is required without --input".into()))?;
                let n = ctx.bound(a.bound)?;
                match (&a.index_lattice, &a.lattice, &a.c_matrix) {
                    (Some(m), None, None) => jacobi_theta(&ctx.index(m)?, g, n, lim)?,
                    (None, Some(s), Some(c)) => theta_sc(&ctx.lattice(s)?, &read_matrix(c)?, g, n, lim)?,
                    _ => {
                        return Err(Failure::Usage(
                            "give --input, --index-lattice, or --lattice with --c-matrix".into(),
                        ))
                    }
                }
            };
            let r = singular_support_check(&f)?;
            Outcome {
                pass: r.all_singular,
                body: report(&r),
            }
        }
        Command::Check {
            command: CheckCommand::Pair(a),
        } => Outcome::ok(report(&pair_condition(&ctx.lattice(&a.p)?, &ctx.lattice(&a.q)?, lim)?)),
        Command::Check {
            command: CheckCommand::Inversion(a),
        } => {
            let p = read_point(&a.input)?;
            if p.genus() != 1 {
                return Err(Failure::Usage("the inversion check needs a genus-1 point".into()));
            }
            let tol = a.tol.unwrap_or(DEFAULT_TOL);
            let r = check_inversion_genus1(&ctx.lattice(&a.lattice)?, p.tau(0, 0), tol, lim)?;
            Outcome {
                pass: r.residual <= tol,
                body: report(&r),
            }
        }
        Command::Eval(a) => eval_cmd(ctx, a)?,
    };
    Ok(out)
}

fn verify_stable_cmd(ctx: &Ctx, a: &StableArgs) -> CmdResult<Outcome> {
    let lim = &ctx.limits;
    let r = if !a.input.is_empty() {
        let docs = a
            .input
            .iter()
            .map(|p| read_expansion(p))
            .collect::<CmdResult<Vec<_>>>()?;
        match a.kind {
            FamilyKind::Siegel => {
                let fam = docs
                    .into_iter()
                    .map(|d| match d {
                        AnyExpansion::Siegel(e) => Ok(e),
                        _ => Err(Failure::Usage("expected siegel expansions".into())),
                    })
                    .collect::<CmdResult<Vec<_>>>()?;
                verify_stable(&fam)?
            }
            FamilyKind::Jacobi => {
                let fam = docs
                    .into_iter()
                    .map(|d| match d {
                        AnyExpansion::Jacobi(e) => Ok(e),
                        _ => Err(Failure::Usage("expected jacobi expansions".into())),
                    })
                    .collect::<CmdResult<Vec<_>>>()?;
                verify_stable(&fam)?
            }
        }
    } else {
        let max = a
            .max_genus
            .ok_or_else(|| Failure::Usage("--max-genus is required without --input".into()))?;
        let n = ctx.bound(a.bound)?;
        match a.kind {
            FamilyKind::Siegel => {
                let name = a
                    .lattice
                    .as_deref()
                    .ok_or_else(|| Failure::Usage("--lattice is required".into()))?;
                let l = ctx.lattice(name)?;
                let fam = (0..=max)
                    .map(|g| siegel_theta(&l, g, n, lim))
                    .collect::<Result<Vec<_>, _>>()?;
                verify_stable(&fam)?
            }
            FamilyKind::Jacobi => {
                let name = a
                    .index_lattice
                    .as_deref()
                    .or(a.lattice.as_deref())
                    .ok_or_else(|| Failure::Usage("--index-lattice is required".into()))?;
                let m = ctx.index(name)?;
                let fam = (0..=max)
                    .map(|g| jacobi_theta(&m, g, n, lim))
                    .collect::<Result<Vec<_>, _>>()?;
                verify_stable(&fam)?
            }
        }
    };
    Ok(Outcome {
        pass: r.pass(),
        body: report(&r),
    })
}

fn eval_cmd(ctx: &Ctx, a: &EvalArgs) -> CmdResult<Outcome> {
    let mut point = None;
    let mut expansion = None;
    for path in &a.input {
        let text = read_input(path)?;
        let is_point = serde_json::from_str::<serde_json::Value>(&text)
            .map(|v| v.get("tau_re").is_some())
            .unwrap_or(false);
        if is_point {
            let p = SiegelJacobiPoint::from_json(&text).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
            if point.replace(p).is_some() {
                return Err(Failure::Usage("more than one point given".into()));
            }
        } else {
            let e = deserialize(&text).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
            if expansion.replace(e).is_some() {
                return Err(Failure::Usage("more than one expansion given".into()));
            }
        }
    }
    let p = point.ok_or_else(|| Failure::Usage("eval needs a point document in --input".into()))?;
    let lim = &ctx.limits;
    let body = match (expansion, &a.lattice, &a.index_lattice) {
        (Some(AnyExpansion::Siegel(e)), None, None) => report(&eval_siegel_expansion(&e, &p)?),
        (Some(AnyExpansion::Jacobi(f)), None, None) => report(&eval_jacobi_expansion(&f, &p)?),
        (None, Some(l), None) => {
            let n = 2 * ctx.bound(a.bound)?;
            let v = eval_theta_direct(&ctx.lattice(l)?, p.genus(), &p, n, lim)?;
            report(&json!({ "value": v, "norm_bound": n }))
        }
        (None, None, Some(m)) => {
            let n = 2 * ctx.bound(a.bound)?;
            let v = eval_jacobi_theta_direct(&ctx.index(m)?, p.genus(), &p, n, lim)?;
            report(&json!({ "value": v, "norm_bound": n }))
        }
        _ => {
            return Err(Failure::Usage(
                "eval needs exactly one of: an expansion document, --lattice, --index-lattice".into(),
            ))
        }
    };
    Ok(Outcome::ok(body))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = Ctx::new(&cli).and_then(|ctx| {
        let outcome = run(&cli, &ctx)?;
        let text = outcome.body.render(ctx.cfg.format);
        match &cli.out {
            Some(path) => std::fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
            None => print!("{text}"),
        }
        Ok(outcome.pass)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Budget(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
