use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use picorr::covrep::DEFAULT_TENSOR_CAP;
use picorr::harness::{verify, TheoremId, TrialConfig};
use picorr::io::{read_rep, to_json_string, RepJson};
use picorr::shifts::{self, WeightEntry, WeightedShiftSpec};
use picorr::{powers, products, wold, CovariantRep, Error, Tolerance};

/// Partial isometric representations of finite-dimensional C*-correspondences.
///
/// Every command prints one JSON document to stdout. Exit status: 0 on
/// success, 1 when `verify` records violations, 2 on usage errors, 3 on any
/// other error (unreadable input, invalid representation, failed hypothesis).
#[derive(Parser)]
#[command(name = "picorr", version)]
struct Cli {
    /// Relative rank cutoff for singular values.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol_rank: f64,
    /// Relative tolerance for operator identities.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_eq: f64,
    /// Absolute tolerance for subspace inclusions.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_incl: f64,
    /// Largest tensor-space dimension to build.
    #[arg(long, global = true, default_value_t = DEFAULT_TENSOR_CAP)]
    tensor_cap: usize,
    /// Worker threads for `verify` (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a representation: contractive, (co-)isometric, partial isometric.
    Classify {
        #[arg(long)]
        rep: PathBuf,
    },
    /// Product of representations of the same correspondence.
    Product {
        #[arg(long, num_args = 1.., required = true)]
        reps: Vec<PathBuf>,
        /// Report every product criterion, not only the main one.
        #[arg(long)]
        all_conditions: bool,
    },
    /// Kernel-chain, range-invariance and partial-isometry flags for powers.
    Powers {
        #[arg(long)]
        rep: PathBuf,
        #[arg(long, default_value_t = powers::DEFAULT_N_MAX)]
        nmax: usize,
    },
    /// Root criterion for `Ṽ_k` a partial isometry.
    Root {
        #[arg(long)]
        rep: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// Wold-type decomposition of a bi-regular representation.
    Wold {
        #[arg(long)]
        rep: PathBuf,
        /// Iteration bound for generated subspaces (default: dim H).
        #[arg(long)]
        bound: Option<usize>,
        /// Powers up to which bi-regularity is checked.
        #[arg(long, default_value_t = powers::DEFAULT_N_MAX)]
        nmax: usize,
    },
    /// Truncated weighted shift `V_i e_m = w_{i,m} α_m e_{nm+i}`.
    Shift {
        #[arg(long)]
        n: usize,
        /// Zero set, comma separated.
        #[arg(long = "B", value_delimiter = ',')]
        b: Vec<usize>,
        /// Truncation index (default: smallest supporting cubes).
        #[arg(long = "M")]
        m: Option<usize>,
        #[arg(long, default_value_t = 3)]
        power: usize,
        /// JSON list of `{"i": …, "m": …, "w": …}` weight overrides.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Randomized check of a statement, or with `--falsify` of its false variant.
    Verify {
        /// Statement id; see `picorr statements`.
        #[arg(long)]
        theorem: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        falsify: bool,
    },
    /// List statement ids with their statements and false variants.
    Statements,
}

struct Ctx {
    tol: Tolerance,
    cap: usize,
}

impl Ctx {
    fn rep(&self, path: &Path) -> Result<CovariantRep> {
        read_rep(path, &self.tol, self.cap).with_context(|| format!("reading {}", path.display()))
    }
}

fn emit<T: Serialize>(value: &T) -> Result<()> {
    let text = to_json_string(value)?;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        // a closed reader (`| head`) is not an error
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

/// A report, or the reason its hypotheses fail.
fn report<T: Serialize>(r: picorr::Result<T>) -> Result<Value> {
    match r {
        Ok(v) => Ok(serde_json::to_value(v)?),
        Err(Error::NotApplicable(why)) => Ok(json!({ "not_applicable": why })),
        Err(e) => Err(e.into()),
    }
}

fn product(ctx: &Ctx, paths: &[PathBuf], all: bool) -> Result<Value> {
    let reps = paths
        .iter()
        .map(|p| ctx.rep(p))
        .collect::<Result<Vec<_>>>()?;
    let prod = products::ProductRep::new(&reps)?;
    let classification = prod.as_rep()?.classify()?;
    let mut out = json!({ "factors": reps.len(), "product": classification });
    if reps.len() == 2 {
        out["commuting_projections"] =
            report(products::commuting_projection_test(&reps[0], &reps[1]))?;
    } else {
        out["chain"] = report(products::erdelyi_chain_test(&reps))?;
    }
    if all {
        if reps.len() == 2 {
            out["sufficient_intertwining"] =
                report(products::sufficient_intertwining_check(&reps[0], &reps[1]))?;
            out["defect_dilation"] = report(products::defect_dilation_test(&reps[0], &reps[1]))?;
        }
        out["chain"] = report(products::erdelyi_chain_test(&reps))?;
        out["pseudoinverse"] = report(products::product_pinv_test(&reps))?;
    }
    Ok(out)
}

fn shift(
    ctx: &Ctx,
    n: usize,
    b: &[usize],
    m: Option<usize>,
    power: usize,
    weights: Option<&Path>,
) -> Result<Value> {
    let mut spec = WeightedShiftSpec::new(n, m)?.with_zero_set(b.iter().copied());
    if let Some(path) = weights {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let entries: Vec<WeightEntry> =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        for e in entries {
            spec = spec.with_weight(e.i, e.m, e.w)?;
        }
    }
    let built = shifts::build_shift(&spec, &ctx.tol)?;
    let kernels = (1..=n)
        .map(|i| shifts::compare_kernel(&spec, i, power, &ctx.tol))
        .collect::<picorr::Result<Vec<_>>>()?;
    let chain = if power >= 2 {
        Some(shifts::chain_inclusion_check(&spec, power - 1, &ctx.tol)?)
    } else {
        None
    };
    Ok(json!({
        "spec": spec,
        "rep": RepJson::from(&built.rep),
        "window_bound": spec.window_bound(),
        "out_of_window": built.out_of_window,
        "criterion": shifts::shift_pi_criterion(&spec, &ctx.tol)?,
        "power": power,
        "power_is_pi": shifts::power_is_pi(&spec, power, &ctx.tol),
        "kernels": kernels,
        "chain_inclusion": chain,
    }))
}

fn run(cli: Cli) -> Result<ExitCode> {
    let tol = Tolerance::new(cli.tol_rank, cli.tol_eq, cli.tol_incl)?;
    if cli.tensor_cap == 0 {
        return Err(Error::Usage("--tensor-cap must be positive".into()).into());
    }
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Error::Usage("--jobs must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()?;
    }
    let ctx = Ctx {
        tol,
        cap: cli.tensor_cap,
    };
    match cli.command {
        Command::Classify { rep } => emit(&ctx.rep(&rep)?.classify()?)?,
        Command::Product {
            reps,
            all_conditions,
        } => emit(&product(&ctx, &reps, all_conditions)?)?,
        Command::Powers { rep, nmax } => {
            if nmax == 0 {
                return Err(Error::Usage("--nmax must be at least 1".into()).into());
            }
            let rep = ctx.rep(&rep)?;
            emit(&json!({
                "powers": powers::power_report(&rep, nmax)?,
                "regularity": powers::regularity(&rep)?,
                "regular_power": powers::regular_pi_iff_power_pi(&rep, nmax)?,
            }))?
        }
        Command::Root { rep, k } => {
            let rep = ctx.rep(&rep)?;
            emit(&json!({
                "root": powers::root_criterion(&rep, k)?,
                "kernel_equality": powers::gupta_criterion(&rep, k)?,
            }))?
        }
        Command::Wold { rep, bound, nmax } => {
            let rep = ctx.rep(&rep)?;
            let bound = bound.unwrap_or(rep.h_dim());
            emit(&wold::wold_decompose(&rep, bound, nmax)?)?
        }
        Command::Shift {
            n,
            b,
            m,
            power,
            weights,
        } => emit(&shift(&ctx, n, &b, m, power, weights.as_deref())?)?,
        Command::Verify {
            theorem,
            trials,
            seed,
            falsify,
        } => {
            let id: TheoremId = theorem.parse()?;
            let cfg = TrialConfig::for_theorem(id, seed, trials);
            let r = verify(id, &cfg, &ctx.tol, falsify)?;
            emit(&r)?;
            if !r.success() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Statements => {
            let list: Vec<Value> = TheoremId::ALL
                .iter()
                .map(|id| json!({ "id": id.as_str(), "statement": id.statement(), "false_claim": id.false_claim() }))
                .collect();
            emit(&list)?
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            // wrapped io errors repeat their source; print each message once
            let mut msg = String::new();
            for cause in e.chain().map(ToString::to_string) {
                if !msg.ends_with(&cause) {
                    msg = if msg.is_empty() {
                        cause
                    } else {
                        format!("{msg}: {cause}")
                    };
                }
            }
            eprintln!("error: {msg}");
            match e.downcast_ref::<Error>() {
                Some(Error::Usage(_)) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
