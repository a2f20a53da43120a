//! Command-line surface for the gamelab toolkit: load and validate
//! games, compute exact values, build repetitions, run sampling
//! experiments, factorize channels, and evaluate decay bounds.
//!
//! Every run is deterministic given its inputs and `--seed`. With
//! `--json`, a run report is printed instead of text: the echoed command
//! line, an FNV-1a digest of all consumed inputs, the seed, the results,
//! and the wall clock. Results depend only on inputs and seed.
//!
//! Exit codes: 0 success, 2 usage, 3 unreadable or unparseable input,
//! 4 validation failure, 5 enumeration budget exceeded, 6 conditioning
//! on a zero-probability event, 7 channel admits no factorization.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use gamelab::bounds::{bound_cover, bound_local, bound_ns, recurrence_bound, BoundQuery};
use gamelab::covers::factorize;
use gamelab::games::{
    builtin, Game, WinEventSpec, DEFAULT_OUTCOME_BUDGET, DEFAULT_STRATEGY_BUDGET,
};
use gamelab::json::{
    BoxFile, ChannelFile, DistributionFile, GameFile, StrategyFile,
};
use gamelab::nosignaling::{box_win_probability, ns_value_report, DEFAULT_LP_VARIABLE_BUDGET};
use gamelab::rational::{format_rational, parse_rational, rat_int, to_f64};
use gamelab::sampling::{coupling_report, embed_plan_with_budget, embedding_distance_exact, play_embedded};
use gamelab::Error as CoreError;

#[derive(Parser)]
#[command(name = "gamelab", version, about = "Exact toolkit for finite two-prover games")]
struct Cli {
    /// Print a machine-readable run report instead of text
    #[arg(long, global = true)]
    json: bool,

    /// Seed for every randomized procedure
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GameSource {
    /// Path to a game JSON file
    game: Option<PathBuf>,

    /// Name of a built-in game (fortnow, chsh)
    #[arg(long, conflicts_with = "game")]
    builtin: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Regime {
    /// Decay for local strategies, rate n / log2(|A| * |B|)
    Local,
    /// Decay for predicates with an exact fractional product cover
    Cover,
    /// Decay for no-signaling boxes
    Ns,
}

#[derive(Subcommand)]
enum Command {
    /// Exact optimal deterministic value of a game, with a witness
    Value {
        #[command(flatten)]
        src: GameSource,
    },
    /// Exact optimal no-signaling value of a game, with a witness box
    NsValue {
        #[command(flatten)]
        src: GameSource,

        /// Write the witness box here, then verify it by reading it back
        #[arg(long)]
        box_out: Option<PathBuf>,
    },
    /// Write the n-fold parallel repetition as a game file
    Repeat {
        #[command(flatten)]
        src: GameSource,

        /// Repetition count
        #[arg(short, long)]
        n: u32,

        /// Output game file; re-read and compared after writing
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Evaluate a decay bound, optionally iterating its recurrence
    Bound {
        /// Single-shot value as a rational (instead of a game file)
        #[arg(long)]
        value: Option<String>,

        #[command(flatten)]
        src: GameSource,

        /// Repetition count
        #[arg(short, long)]
        n: u64,

        /// Which decay regime to evaluate
        #[arg(long, value_enum)]
        theorem: Regime,

        /// Cover size (cover regime only)
        #[arg(long)]
        alpha: Option<u64>,

        /// Answer-pair count |A|*|B| (local regime without a game file)
        #[arg(long)]
        size: Option<u64>,

        /// Also iterate the matching recurrence and report its trace
        #[arg(long)]
        recurrence: bool,
    },
    /// Correlated-sampling agreement experiment on two distributions
    Sample {
        /// First distribution file
        p: PathBuf,

        /// Second distribution file (same alphabet)
        q: PathBuf,

        /// Monte Carlo trials alongside the exact computation
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
    /// Embed a single round into a conditioned repetition and play it
    Embed {
        #[command(flatten)]
        src: GameSource,

        /// Repetition count
        #[arg(short, long)]
        n: u32,

        /// Strategy file for the repeated game
        #[arg(long)]
        strategy: PathBuf,

        /// Coordinates conditioned on winning (1-based, comma separated)
        #[arg(long, value_delimiter = ',')]
        cond: Vec<u32>,

        /// Coordinate the single round is embedded at (1-based)
        #[arg(long)]
        target_j: u32,

        /// Monte Carlo plays alongside the exact win probability
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
    /// Factor a channel into one-sided tables, or report the obstruction
    Factorize {
        /// Channel file mapping answer pairs to a summary symbol
        channel: PathBuf,

        /// Also write the tables to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Failure {
        Failure {
            code,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Failure {
        Failure::new(2, message)
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Failure {
        let code = match &e {
            CoreError::Parse(_) => 3,
            CoreError::UnknownBuiltin(_) => 2,
            CoreError::Validation(_) | CoreError::SchemaMismatch(_) => 4,
            CoreError::BudgetExceeded { .. } | CoreError::RoundCapExceeded(_) => 5,
            CoreError::ZeroProbabilityEvent => 6,
            CoreError::CrossRatioViolation { .. } => 7,
            CoreError::Internal(_) => 1,
        };
        Failure::new(code, e.to_string())
    }
}

/// Accumulates everything a run consumed, for the report's input digest.
struct RunContext {
    seed: u64,
    digest: u64,
}

impl RunContext {
    fn new(seed: u64) -> RunContext {
        RunContext {
            seed,
            digest: 0xcbf2_9ce4_8422_2325,
        }
    }

    fn absorb(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.digest ^= u64::from(b);
            self.digest = self.digest.wrapping_mul(0x1_0000_0000_01b3);
        }
    }

    fn read_file(&mut self, path: &Path) -> Result<String, Failure> {
        let text = fs::read_to_string(path).map_err(|e| {
            Failure::new(3, format!("cannot read {}: {e}", path.display()))
        })?;
        self.absorb(text.as_bytes());
        Ok(text)
    }

    fn load_json<T: serde::de::DeserializeOwned>(&mut self, path: &Path) -> Result<T, Failure> {
        let text = self.read_file(path)?;
        serde_json::from_str(&text).map_err(|e| {
            Failure::new(3, format!("{}: {e}", path.display()))
        })
    }
}

/// Reads a file this run wrote itself: verification input, not a run
/// input, so it stays out of the digest.
fn load_json_plain<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(3, format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::new(3, format!("{}: {e}", path.display())))
}

fn write_json_file<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::new(1, format!("serialization failed: {e}")))?;
    fs::write(path, text + "\n")
        .map_err(|e| Failure::new(3, format!("cannot write {}: {e}", path.display())))
}

impl GameSource {
    fn load(&self, ctx: &mut RunContext) -> Result<Game, Failure> {
        match (&self.game, &self.builtin) {
            (Some(path), None) => {
                let file: GameFile = ctx.load_json(path)?;
                Ok(file.into_game()?)
            }
            (None, Some(name)) => {
                ctx.absorb(name.as_bytes());
                Ok(builtin(name)?)
            }
            (None, None) => Err(Failure::usage(
                "provide a game file or --builtin <name>",
            )),
            (Some(_), Some(_)) => unreachable!("clap rejects conflicting sources"),
        }
    }
}

/// Enumeration budget for a command, taking the GAMELAB_BUDGET override.
fn budget(default: u128) -> Result<u128, Failure> {
    match std::env::var("GAMELAB_BUDGET") {
        Ok(text) => text.trim().parse::<u128>().map_err(|_| {
            Failure::usage(format!("GAMELAB_BUDGET is not an integer: `{text}`"))
        }),
        Err(_) => Ok(default),
    }
}

fn strategy_json(g: &Game, s: &gamelab::games::DeterministicStrategy) -> Value {
    serde_json::to_value(StrategyFile::from_strategy(g, s)).expect("strategy serializes")
}

fn strategy_text(g: &Game, s: &gamelab::games::DeterministicStrategy) -> String {
    let mut out = String::new();
    for x in 0..g.x_alphabet().len() as u32 {
        out.push_str(&format!(
            "  alice {} -> {}\n",
            g.x_alphabet().symbol(x),
            g.a_alphabet().symbol(s.answer_a(x))
        ));
    }
    for y in 0..g.y_alphabet().len() as u32 {
        out.push_str(&format!(
            "  bob   {} -> {}\n",
            g.y_alphabet().symbol(y),
            g.b_alphabet().symbol(s.answer_b(y))
        ));
    }
    out
}

fn cmd_value(src: &GameSource, ctx: &mut RunContext) -> Result<(Value, String), Failure> {
    let g = src.load(ctx)?;
    let (v, witness) = g.classical_value_with_budget(budget(DEFAULT_STRATEGY_BUDGET)?)?;
    let text = format!(
        "value = {}\nwitness strategy:\n{}",
        format_rational(&v),
        strategy_text(&g, &witness)
    );
    let results = json!({
        "value": format_rational(&v),
        "strategy": strategy_json(&g, &witness),
    });
    Ok((results, text))
}

fn cmd_ns_value(
    src: &GameSource,
    box_out: &Option<PathBuf>,
    ctx: &mut RunContext,
) -> Result<(Value, String), Failure> {
    let g = src.load(ctx)?;
    let report = ns_value_report(&g, budget(DEFAULT_LP_VARIABLE_BUDGET)?)?;
    let mut results = json!({
        "value": format_rational(&report.value),
        "lp_variables": report.lp_variables,
        "lp_constraints": report.lp_constraints,
    });
    let mut text = format!("no-signaling value = {}\n", format_rational(&report.value));
    if let Some(path) = box_out {
        write_json_file(path, &BoxFile::from_box(&report.witness))?;
        // Consume the file we just produced: it must reproduce the box
        // and its win probability exactly.
        let reread: BoxFile = load_json_plain(path)?;
        let restored = reread.into_box(&g)?;
        if restored != report.witness {
            return Err(Failure::new(
                1,
                "witness box did not survive the write/read round trip",
            ));
        }
        let replayed = box_win_probability(&g, &restored)?;
        if replayed != report.value {
            return Err(Failure::new(
                1,
                "re-read witness box wins with a different probability",
            ));
        }
        results["box_out"] = json!(path.display().to_string());
        results["box_verified"] = json!(true);
        text.push_str(&format!(
            "witness box written to {} (round-trip verified)\n",
            path.display()
        ));
    }
    Ok((results, text))
}

fn cmd_repeat(
    src: &GameSource,
    n: u32,
    out: &Path,
    ctx: &mut RunContext,
) -> Result<(Value, String), Failure> {
    let g = src.load(ctx)?;
    let rep = g.repeat_with_budget(n, budget(DEFAULT_OUTCOME_BUDGET)?)?;
    write_json_file(out, &GameFile::from_game(&rep))?;

    let reread: GameFile = load_json_plain(out)?;
    let restored = reread.into_game()?;
    let mut identical = restored.query() == rep.query()
        && restored.x_alphabet() == rep.x_alphabet()
        && restored.y_alphabet() == rep.y_alphabet()
        && restored.a_alphabet() == rep.a_alphabet()
        && restored.b_alphabet() == rep.b_alphabet();
    if identical {
        'cells: for x in 0..rep.x_alphabet().len() as u32 {
            for y in 0..rep.y_alphabet().len() as u32 {
                for a in 0..rep.a_alphabet().len() as u32 {
                    for b in 0..rep.b_alphabet().len() as u32 {
                        if restored.wins(x, y, a, b) != rep.wins(x, y, a, b) {
                            identical = false;
                            break 'cells;
                        }
                    }
                }
            }
        }
    }
    if !identical {
        return Err(Failure::new(
            1,
            "repetition did not survive the write/read round trip",
        ));
    }

    let results = json!({
        "out": out.display().to_string(),
        "n": n,
        "weighted_question_pairs": rep.query().support_len(),
        "answer_pairs": rep.a_alphabet().len() * rep.b_alphabet().len(),
        "round_trip_verified": true,
    });
    let text = format!(
        "wrote {}-fold repetition to {} ({} weighted question pairs, {} answer pairs; round-trip verified)\n",
        n,
        out.display(),
        rep.query().support_len(),
        rep.a_alphabet().len() * rep.b_alphabet().len(),
    );
    Ok((results, text))
}

#[allow(clippy::too_many_arguments)]
fn cmd_bound(
    value: &Option<String>,
    src: &GameSource,
    n: u64,
    regime: Regime,
    alpha: Option<u64>,
    size: Option<u64>,
    recurrence: bool,
    ctx: &mut RunContext,
) -> Result<(Value, String), Failure> {
    let has_game = src.game.is_some() || src.builtin.is_some();
    if value.is_some() && has_game {
        return Err(Failure::usage(
            "--value conflicts with a game file or --builtin",
        ));
    }
    if alpha.is_some() && regime != Regime::Cover {
        return Err(Failure::usage("--alpha applies only to --theorem cover"));
    }
    if size.is_some() && regime != Regime::Local {
        return Err(Failure::usage("--size applies only to --theorem local"));
    }
    if size.is_some() && has_game {
        return Err(Failure::usage(
            "--size conflicts with a game file (the game fixes |A|*|B|)",
        ));
    }

    let mut results = json!({ "n": n });
    let mut text = String::new();
    let (v, game_size) = if let Some(text_v) = value {
        ctx.absorb(text_v.as_bytes());
        (parse_rational(text_v)?, None)
    } else if has_game {
        let g = src.load(ctx)?;
        let sz = g.a_alphabet().len() * g.b_alphabet().len();
        let v = match regime {
            Regime::Ns => ns_value_report(&g, budget(DEFAULT_LP_VARIABLE_BUDGET)?)?.value,
            Regime::Local | Regime::Cover => {
                g.classical_value_with_budget(budget(DEFAULT_STRATEGY_BUDGET)?)?.0
            }
        };
        text.push_str(&format!("single-shot value = {}\n", format_rational(&v)));
        (v, Some(sz as u64))
    } else {
        return Err(Failure::usage(
            "provide --value, a game file, or --builtin",
        ));
    };
    results["v"] = json!(format_rational(&v));

    let (bound, query) = match regime {
        Regime::Local => {
            let s = game_size
                .or(size)
                .ok_or_else(|| Failure::usage("--theorem local needs a game or --size"))?
                as usize;
            results["size"] = json!(s);
            (
                bound_local(&v, n, s)?,
                BoundQuery::local(v.clone(), n, s)?,
            )
        }
        Regime::Cover => {
            let a = alpha.ok_or_else(|| Failure::usage("--theorem cover needs --alpha"))?
                as usize;
            results["alpha"] = json!(a);
            let q = if a == 1 {
                BoundQuery::cover(v.clone(), n)?
            } else {
                BoundQuery::local(v.clone(), n, a)?
            };
            (bound_cover(&v, n, a)?, q)
        }
        Regime::Ns => (bound_ns(&v, n)?, BoundQuery::no_signaling(v.clone(), n)?),
    };
    results["bound"] = json!(bound);
    text.push_str(&format!("bound = {bound}\n"));

    if recurrence {
        if n > 1_000_000 {
            return Err(Failure::new(
                4,
                "recurrence traces are limited to n <= 1000000",
            ));
        }
        let trace = recurrence_bound(&query)?;
        let entries: Vec<Value> = trace
            .sequence()
            .iter()
            .enumerate()
            .map(|(m, p)| json!({ "m": m, "p_m": p }))
            .collect();
        results["trace"] = json!({
            "entries": entries,
            "m_star": trace.m_star(),
            "bound": trace.bound(),
        });
        text.push_str(&format!(
            "recurrence minimum p_m = {} at m = {}\n",
            trace.bound(),
            trace.m_star()
        ));
    }
    Ok((results, text))
}

fn cmd_sample(
    p_path: &Path,
    q_path: &Path,
    trials: u64,
    ctx: &mut RunContext,
) -> Result<(Value, String), Failure> {
    let p_file: DistributionFile = ctx.load_json(p_path)?;
    let q_file: DistributionFile = ctx.load_json(q_path)?;
    if p_file.alphabet != q_file.alphabet {
        return Err(Failure::new(
            4,
            "the two distributions must share one alphabet, in the same order",
        ));
    }
    let p = p_file.into_distribution("s")?;
    let q = q_file.into_distribution("s")?;
    let report = coupling_report(&p, &q, trials, ctx.seed)?;
    let exact = format_rational(&report.exact_pairwise_agreement);
    let results = json!({
        "exact_pairwise_agreement": exact,
        "exact_pairwise_agreement_float": to_f64(&report.exact_pairwise_agreement),
        "joint_estimate": report.joint_estimate,
        "confidence_halfwidth": report.confidence_halfwidth,
        "trials": report.trials,
    });
    let text = format!(
        "exact pairwise agreement = {exact} ({})\nempirical joint agreement = {} ± {} over {} trials\n",
        to_f64(&report.exact_pairwise_agreement),
        report.joint_estimate,
        report.confidence_halfwidth,
        report.trials,
    );
    Ok((results, text))
}

#[allow(clippy::too_many_arguments)]
fn cmd_embed(
    src: &GameSource,
    n: u32,
    strategy_path: &Path,
    cond: &[u32],
    target_j: u32,
    trials: u64,
    ctx: &mut RunContext,
) -> Result<(Value, String), Failure> {
    let g = src.load(ctx)?;
    let bud = budget(DEFAULT_OUTCOME_BUDGET)?;
    let cond_spec = WinEventSpec::new(cond.to_vec());
    if cond_spec.len() as u32 >= n {
        return Err(Failure::usage(
            "conditioning on every coordinate leaves nothing to embed",
        ));
    }
    if cond_spec.indices().contains(&target_j) {
        return Err(Failure::usage(
            "--target-j must name a coordinate outside --cond",
        ));
    }

    let rep = g.repeat_with_budget(n, bud)?;
    let strategy_file: StrategyFile = ctx.load_json(strategy_path)?;
    let strategy = strategy_file.into_strategy(&rep)?;

    // One plan per free coordinate; the requested target also gets played.
    let mut per_j = Vec::new();
    let mut distance_sum = rat_int(0);
    let mut target_plan = None;
    for j in 1..=n {
        if cond_spec.indices().contains(&j) {
            continue;
        }
        let plan = embed_plan_with_budget(&g, n, &strategy, &cond_spec, j, bud)?;
        let distance = embedding_distance_exact(&plan)?;
        let (eps_alice, eps_bob) = plan.input_marginal_gaps();
        per_j.push(json!({
            "j": j,
            "eps_alice": format_rational(&eps_alice),
            "eps_bob": format_rational(&eps_bob),
            "distance_bound": format_rational(&plan.distance_bound()),
            "distance_exact": format_rational(&distance),
            "target_conditional_win": format_rational(plan.target_conditional_win()),
        }));
        distance_sum += &distance;
        if j == target_j {
            target_plan = Some((plan, distance));
        }
    }
    let (plan, target_distance) = target_plan.ok_or_else(|| {
        Failure::usage(format!("--target-j {target_j} is not a free coordinate"))
    })?;

    // Aggregate guarantee over all free coordinates: the sum of the
    // per-coordinate deficiencies is controlled by the conditioning.
    let k = (n - cond_spec.len() as u32) as f64;
    let size = (g.a_alphabet().len() * g.b_alphabet().len()) as f64;
    let aggregate_rhs = 15.0
        * k.sqrt()
        * (cond_spec.len() as f64 * size.log2()
            - to_f64(plan.condition_probability()).log2())
        .sqrt();
    let aggregate_holds = to_f64(&distance_sum) <= aggregate_rhs;

    let play = play_embedded(&plan, trials, ctx.seed)?;
    let floor = plan.target_conditional_win() - &target_distance;
    let floor_holds = play.exact_win >= floor;

    let results = json!({
        "n": n,
        "cond": cond_spec.indices(),
        "target_j": target_j,
        "condition_probability": format_rational(plan.condition_probability()),
        "per_coordinate": per_j,
        "distance_sum": format_rational(&distance_sum),
        "aggregate_rhs": aggregate_rhs,
        "aggregate_holds": aggregate_holds,
        "play": {
            "exact_win": format_rational(&play.exact_win),
            "empirical_win": play.empirical_win,
            "trials": play.trials,
        },
        "win_floor": format_rational(&floor),
        "win_floor_holds": floor_holds,
    });
    let text = format!(
        "condition probability = {}\nembedding distance at j={} = {} (bound {})\n\
         sum of distances over {} free coordinates = {} (aggregate right-hand side {aggregate_rhs}; holds: {aggregate_holds})\n\
         embedded play: exact win = {}, empirical {} over {} trials\n\
         win floor (conditional win - distance) = {}; attained: {floor_holds}\n",
        format_rational(plan.condition_probability()),
        target_j,
        format_rational(&target_distance),
        format_rational(&plan.distance_bound()),
        k as u64,
        format_rational(&distance_sum),
        format_rational(&play.exact_win),
        play.empirical_win,
        play.trials,
        format_rational(&floor),
    );
    Ok((results, text))
}

fn cmd_factorize(
    channel_path: &Path,
    out: &Option<PathBuf>,
    ctx: &mut RunContext,
) -> Result<(Value, String), Failure> {
    let file: ChannelFile = ctx.load_json(channel_path)?;
    let pz = file.into_channel()?;
    let factorization = match factorize(&pz) {
        Ok(f) => f,
        Err(CoreError::CrossRatioViolation { z, a0, a1, b0, b1 }) => {
            return Err(Failure::new(
                7,
                format!(
                    "channel admits no product factorization: \
                     P(z|a,b) * P(z|a',b') = P(z|a,b') * P(z|a',b) fails at \
                     z={}, a={}/{}, b={}/{}",
                    file.z_alphabet[z],
                    file.a_alphabet[a0],
                    file.a_alphabet[a1],
                    file.b_alphabet[b0],
                    file.b_alphabet[b1]
                ),
            ));
        }
        Err(e) => return Err(e.into()),
    };
    if factorization.recompose()? != pz {
        return Err(Failure::new(
            1,
            "factor tables do not multiply back to the channel",
        ));
    }

    let mut f_entries = Vec::new();
    let mut text = String::from("factor tables (f for the a side, g for the b side):\n");
    for (ai, a) in file.a_alphabet.iter().enumerate() {
        for (zi, z) in file.z_alphabet.iter().enumerate() {
            let v = factorization.f(ai, zi);
            if *v != rat_int(0) {
                f_entries.push(json!({ "a": a, "z": z, "v": format_rational(v) }));
                text.push_str(&format!("  f({a}, {z}) = {}\n", format_rational(v)));
            }
        }
    }
    let mut g_entries = Vec::new();
    for (bi, b) in file.b_alphabet.iter().enumerate() {
        for (zi, z) in file.z_alphabet.iter().enumerate() {
            let v = factorization.g(bi, zi);
            if *v != rat_int(0) {
                g_entries.push(json!({ "b": b, "z": z, "v": format_rational(v) }));
                text.push_str(&format!("  g({b}, {z}) = {}\n", format_rational(v)));
            }
        }
    }
    text.push_str("recomposition is exact\n");

    let results = json!({
        "f": f_entries,
        "g": g_entries,
        "recomposition_exact": true,
    });
    if let Some(path) = out {
        write_json_file(path, &results)?;
    }
    Ok((results, text))
}

fn run(cli: &Cli, ctx: &mut RunContext) -> Result<(Value, String), Failure> {
    match &cli.command {
        Command::Value { src } => cmd_value(src, ctx),
        Command::NsValue { src, box_out } => cmd_ns_value(src, box_out, ctx),
        Command::Repeat { src, n, out } => cmd_repeat(src, *n, out, ctx),
        Command::Bound {
            value,
            src,
            n,
            theorem,
            alpha,
            size,
            recurrence,
        } => cmd_bound(value, src, *n, *theorem, *alpha, *size, *recurrence, ctx),
        Command::Sample { p, q, trials } => cmd_sample(p, q, *trials, ctx),
        Command::Embed {
            src,
            n,
            strategy,
            cond,
            target_j,
            trials,
        } => cmd_embed(src, *n, strategy, cond, *target_j, *trials, ctx),
        Command::Factorize { channel, out } => cmd_factorize(channel, out, ctx),
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let cli = Cli::parse();
    let echo: Vec<String> = std::env::args().skip(1).collect();
    let echo = echo.join(" ");

    let mut ctx = RunContext::new(cli.seed);
    ctx.absorb(echo.as_bytes());

    match run(&cli, &mut ctx) {
        Ok((results, text)) => {
            let out = if cli.json {
                let report = json!({
                    "command": echo,
                    "inputs_digest": format!("{:016x}", ctx.digest),
                    "seed": ctx.seed,
                    "results": results,
                    "wall_clock_ms": started.elapsed().as_millis() as u64,
                });
                let mut s = serde_json::to_string_pretty(&report).expect("report");
                s.push('\n');
                s
            } else {
                text
            };
            // A consumer that closed the pipe early (head, etc.) is not an
            // error worth reporting: the write result is ignored on purpose.
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.as_bytes());
            let _ = stdout.flush();
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
