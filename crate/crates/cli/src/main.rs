//! `dcopula`: analyze, build and plot discrete copula pmfs.
//!
//! Exit status is 0 on success, 2 when the requested margins are out of reach
//! for the table's support, and 1 for any other error.

mod output;

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dcopula::bernoulli::{bernoulli_copula, ExtendedOddsRatio};
use dcopula::dependence::{odds_ratio_matrix, yule_upsilon};
use dcopula::families::{
    binomial_copula, discretize_copula, fgm_pmf, goodman_copula, truncated_geometric_copula, ContinuousCopula,
};
use dcopula::infinite::{geometric_copula_grid, poisson_copula_grid, DensityGrid};
use dcopula::pmf::{parse_table, JointPmf, MarginPair, TableFormat};
use dcopula::scaling::{classify_existence, copula_pmf, couple, FeasibilityClass, IpfOptions};
use dcopula::viz::{confetti_svg, grid_to_text, heatmap_ppm, ConfettiOptions};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "dcopula", version, about = "Copula pmfs of bivariate discrete distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Margins, odds ratios, existence class, copula pmf and Yule's coefficient of a table.
    Analyze {
        #[command(flatten)]
        table: TableInput,
        #[command(flatten)]
        common: Common,
    },
    /// Copula pmf of a table, as CSV.
    Copula {
        #[command(flatten)]
        table: TableInput,
        #[command(flatten)]
        common: Common,
    },
    /// Gives a copula pmf new margins.
    Couple {
        /// Copula pmf CSV ("-" for standard input).
        #[arg(long)]
        copula: String,
        /// Comma-separated row margin, renormalized to sum to one.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        row_margins: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        col_margins: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Copula pmf of a parametric family, as CSV.
    Family {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Copula density grid of a distribution on the nonnegative integers.
    Grid {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Confetti plot (SVG) of a table, or heat map (PPM) of a density grid.
    Plot {
        #[arg(long, value_enum, default_value_t = PlotKind::Confetti)]
        kind: PlotKind,
        /// Table to draw as confetti.
        #[arg(long)]
        input: Option<String>,
        #[arg(long, default_value = "counts")]
        format: String,
        /// Draw the copula pmf of the table instead of the table itself.
        #[arg(long)]
        copula_pmf: bool,
        /// Cell size in pixels.
        #[arg(long, default_value_t = 40.0)]
        cell_size: f64,
        #[arg(long)]
        no_margins: bool,
        /// Heat map intensity exponent.
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct TableInput {
    /// Table file, one row per line, comma-separated ("-" for standard input).
    #[arg(long, default_value = "-")]
    input: String,
    /// counts or probs.
    #[arg(long, default_value = "counts")]
    format: String,
}

#[derive(Args)]
struct Common {
    /// Largest absolute margin deviation accepted from the fit.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Output file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Round numbers to six significant digits and indent JSON.
    #[arg(long)]
    pretty: bool,
}

impl Common {
    fn ipf(&self) -> IpfOptions {
        let mut opts = IpfOptions::with_tol(self.tol);
        if let Some(m) = self.max_iter {
            opts.max_iter = m;
            opts.b2_max_iter = opts.b2_max_iter.max(m);
        }
        opts
    }
}

#[derive(Args)]
struct FamilyArgs {
    /// bernoulli, binomial, geometric, goodman, fgm, independence, clayton,
    /// gumbel, frank, gaussian or student.
    #[arg(long)]
    name: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<f64>,
    #[arg(long)]
    df: Option<f64>,
    /// Table shape as RxS.
    #[arg(long)]
    shape: Option<String>,
    /// Size parameter: trials for binomial, grid size for geometric.
    #[arg(long = "N")]
    n: Option<usize>,
}

#[derive(Args)]
struct GridArgs {
    /// Grid family: poisson or geometric.
    #[arg(long = "name", default_value = "poisson")]
    family: String,
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<String>,
    #[arg(long = "N", default_value_t = 32)]
    n: usize,
    /// Tail mass allowed beyond the truncation level.
    #[arg(long, default_value_t = 1e-10)]
    epsilon: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    Confetti,
    Heatmap,
}

#[derive(Debug)]
enum Failure {
    Lib(dcopula::Error),
    Io(String, io::Error),
    Usage(String),
}

impl From<dcopula::Error> for Failure {
    fn from(e: dcopula::Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Lib(dcopula::Error::Infeasible(_)) => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Io(what, e) => write!(f, "{what}: {e}"),
            Failure::Usage(m) => f.write_str(m),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn read_source(path: &str) -> Outcome<String> {
    if path == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Io("standard input".into(), e))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Failure::Io(path.into(), e))
    }
}

fn read_table(path: &str, format: &str) -> Outcome<JointPmf> {
    let format: TableFormat = format.parse()?;
    let text = read_source(path)?;
    let values = parse_table(&text, format)?;
    Ok(JointPmf::from_weights(values)?)
}

fn emit(common: &Common, bytes: &[u8]) -> Outcome<()> {
    match &common.out {
        Some(path) => fs::write(path, bytes).map_err(|e| Failure::Io(path.display().to_string(), e)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Io("standard output".into(), e))
        }
    }
}

fn classification_json(c: &FeasibilityClass) -> Value {
    json!({
        "class": c.tag.to_string(),
        "forced_zeros": c.forced_zeros.iter().map(|(x, y)| json!([x, y])).collect::<Vec<_>>(),
        "tight_rectangles": c
            .tight_rectangles
            .iter()
            .map(|(rows, cols)| json!({"rows": rows, "cols": cols}))
            .collect::<Vec<_>>(),
    })
}

/// The analysis document, and whether the table's copula pmf exists.
fn analyze(p: &JointPmf, opts: &IpfOptions) -> Outcome<(Value, bool)> {
    let margins = p.margins();
    let (r, s) = p.shape();
    let class = classify_existence(&p.support(0.0), &MarginPair::uniform(r, s))?;
    let mut doc = json!({
        "pmf": p.to_rows(),
        "margins": {"rows": margins.rows().to_vec(), "cols": margins.cols().to_vec()},
        "omega_matrix": odds_ratio_matrix(p).to_json(),
        "classification": classification_json(&class),
        "copula_pmf": null,
        "upsilon": null,
        "diagnostics": null,
    });
    match copula_pmf(p, opts) {
        Ok((cop, diag)) => {
            doc["copula_pmf"] = json!(cop.to_rows());
            doc["upsilon"] = json!(yule_upsilon(&cop)?);
            doc["diagnostics"] = diag.to_json();
            Ok((doc, true))
        }
        Err(dcopula::Error::Infeasible(_)) => Ok((doc, false)),
        Err(e) => Err(e.into()),
    }
}

fn odds_arg(v: &Option<String>, flag: &str) -> Outcome<ExtendedOddsRatio> {
    let v = v
        .as_deref()
        .ok_or_else(|| Failure::Usage(format!("--{flag} is required for this family")))?;
    Ok(v.parse()?)
}

fn real_arg(v: &Option<String>, flag: &str) -> Outcome<f64> {
    let v = v
        .as_deref()
        .ok_or_else(|| Failure::Usage(format!("--{flag} is required for this family")))?;
    v.parse()
        .map_err(|_| Failure::Usage(format!("--{flag}: '{v}' is not a number")))
}

fn parse_shape(shape: &Option<String>) -> Outcome<(usize, usize)> {
    let s = shape
        .as_deref()
        .ok_or_else(|| Failure::Usage("--shape RxS is required for this family".into()))?;
    let bad = || Failure::Usage(format!("--shape: expected RxS, got '{s}'"));
    let (r, c) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((r.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?))
}

fn family(a: &FamilyArgs, opts: &IpfOptions) -> Outcome<JointPmf> {
    let name = a
        .name
        .as_deref()
        .ok_or_else(|| Failure::Usage("--name is required".into()))?
        .to_ascii_lowercase();
    let need_n = || a.n.ok_or_else(|| Failure::Usage(format!("--N is required for {name}")));
    let pmf = match name.as_str() {
        "bernoulli" => bernoulli_copula(odds_arg(&a.omega, "omega")?),
        "binomial" => binomial_copula(need_n()?, odds_arg(&a.omega, "omega")?, opts)?,
        "geometric" => truncated_geometric_copula(need_n()?, odds_arg(&a.omega, "omega")?, opts)?,
        "goodman" => {
            let (r, s) = parse_shape(&a.shape)?;
            goodman_copula(r, s, odds_arg(&a.theta, "theta")?, opts)?
        }
        "fgm" => {
            let (r, s) = parse_shape(&a.shape)?;
            fgm_pmf(real_arg(&a.theta, "theta")?, r, s)?
        }
        _ => {
            let (r, s) = parse_shape(&a.shape)?;
            let spec = match name.as_str() {
                "independence" | "product" => ContinuousCopula::Independence,
                "clayton" => ContinuousCopula::Clayton { theta: real_arg(&a.theta, "theta")? },
                "gumbel" => ContinuousCopula::Gumbel { theta: real_arg(&a.theta, "theta")? },
                "frank" => ContinuousCopula::Frank { theta: real_arg(&a.theta, "theta")? },
                "gaussian" | "normal" => ContinuousCopula::Gaussian {
                    rho: a.rho.ok_or_else(|| Failure::Usage("--rho is required".into()))?,
                },
                "student" | "t" => ContinuousCopula::Student {
                    rho: a.rho.ok_or_else(|| Failure::Usage("--rho is required".into()))?,
                    df: a.df.ok_or_else(|| Failure::Usage("--df is required".into()))?,
                },
                other => return Err(Failure::Usage(format!("unknown family '{other}'"))),
            };
            spec.validate()?;
            discretize_copula(&spec, r, s)?
        }
    };
    Ok(pmf)
}

fn grid(a: &GridArgs, opts: &IpfOptions) -> Outcome<DensityGrid> {
    match a.family.to_ascii_lowercase().as_str() {
        "poisson" => {
            let w = real_arg(&a.omega, "omega")?;
            Ok(poisson_copula_grid(w, a.n, a.epsilon, opts)?)
        }
        "geometric" => Ok(geometric_copula_grid(odds_arg(&a.omega, "omega")?, a.n, opts)?),
        other => Err(Failure::Usage(format!("unknown grid family '{other}'"))),
    }
}

fn run(cli: Cli) -> Outcome<u8> {
    match cli.command {
        Command::Analyze { table, common } => {
            let p = read_table(&table.input, &table.format)?;
            let (doc, feasible) = analyze(&p, &common.ipf())?;
            emit(&common, output::json(&doc, common.pretty).as_bytes())?;
            if !feasible {
                eprintln!("dcopula: no copula pmf exists for this support (class C)");
                return Ok(2);
            }
        }
        Command::Copula { table, common } => {
            let p = read_table(&table.input, &table.format)?;
            let (cop, _) = copula_pmf(&p, &common.ipf())?;
            emit(&common, output::csv(cop.values(), common.pretty).as_bytes())?;
        }
        Command::Couple {
            copula,
            row_margins,
            col_margins,
            common,
        } => {
            let cop = read_table(&copula, "probs")?;
            let targets = MarginPair::normalized(row_margins, col_margins)?;
            let (p, _) = couple(&cop, &targets, &common.ipf())?;
            emit(&common, output::csv(p.values(), common.pretty).as_bytes())?;
        }
        Command::Family { family: a, common } => {
            let p = family(&a, &common.ipf())?;
            emit(&common, output::csv(p.values(), common.pretty).as_bytes())?;
        }
        Command::Grid { grid: a, common } => {
            let g = grid(&a, &common.ipf())?;
            let text = if common.pretty {
                output::csv(g.heights(), true).replace(',', " ")
            } else {
                grid_to_text(&g)
            };
            emit(&common, text.as_bytes())?;
        }
        Command::Plot {
            kind,
            input,
            format,
            copula_pmf: use_copula,
            cell_size,
            no_margins,
            gamma,
            grid: a,
            common,
        } => match kind {
            PlotKind::Confetti => {
                let input = input.ok_or_else(|| Failure::Usage("--input is required for confetti".into()))?;
                let mut p = read_table(&input, &format)?;
                if use_copula {
                    p = copula_pmf(&p, &common.ipf())?.0;
                }
                let opts = ConfettiOptions {
                    cell_size,
                    show_margins: !no_margins,
                    ..ConfettiOptions::default()
                };
                emit(&common, confetti_svg(&p, &opts)?.as_bytes())?;
            }
            PlotKind::Heatmap => {
                let g = grid(&a, &common.ipf())?;
                emit(&common, &heatmap_ppm(&g, gamma)?)?;
            }
        },
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("dcopula: {e}");
            ExitCode::from(e.code())
        }
    }
}
