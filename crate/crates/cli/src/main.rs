use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;

use packsem::forest::{node_counts, readings_count, validate, Forest};
use packsem::packer::{check_invariants, pack, PackOptions, PackedResult};
use packsem::parser::{parse, pp_sentence};
use packsem::semgrammar::SemGrammar;
use packsem::term::Var;
use packsem::unfolder::{
    enumerate_solutions, equiv_check, oracle_bound, oracle_per_tree, solutions_json, solutions_text,
    Equivalence, Unfolder,
};

/// Packed semantic construction over shared parse forests.
#[derive(Parser)]
#[command(name = "packsem", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a sentence into a shared forest.
    Parse {
        #[command(flatten)]
        grammar: GrammarArg,
        #[command(flatten)]
        sentence: SentenceArg,
        #[arg(long, value_enum, default_value_t = ForestFormat::Json)]
        format: ForestFormat,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build the packed semantic representation.
    Pack {
        #[command(flatten)]
        grammar: GrammarArg,
        #[command(flatten)]
        input: InputArg,
        #[arg(long, value_enum, default_value_t = DumpFormat::Text)]
        dump: DumpFormat,
        /// Generalise OR alternatives pairwise instead of all at once.
        #[arg(long)]
        binary: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// List the readings encoded by the packed representation.
    Enumerate {
        #[command(flatten)]
        grammar: GrammarArg,
        #[command(flatten)]
        input: InputArg,
        /// Stop after this many solutions.
        #[arg(long)]
        cap: Option<usize>,
        /// Comma-separated variables to report, e.g. `_203,_204`; defaults to
        /// the attachment slots, or the root when there are none.
        #[arg(long, value_delimiter = ',')]
        query: Vec<String>,
        #[arg(long, value_enum, default_value_t = SolutionFormat::Text)]
        format: SolutionFormat,
    },
    /// Pack PP sentences and compare against every individual tree.
    Check {
        #[command(flatten)]
        grammar: GrammarArg,
        /// Check sentences with 0 through this many PPs.
        #[arg(long)]
        pp_max: usize,
        /// Reading bound for the per-tree oracle (default: PACKSEM_ORACLE_BOUND or 1000).
        #[arg(long)]
        bound: Option<usize>,
    },
    /// Time packing on PP sentences.
    Bench {
        #[command(flatten)]
        grammar: GrammarArg,
        #[arg(long, default_value_t = 16)]
        pp_max: usize,
        #[arg(long, default_value_t = 2)]
        pp_min: usize,
        #[arg(long, default_value_t = 2)]
        step: usize,
        #[arg(long, value_enum, default_value_t = Switch::On)]
        nary: Switch,
        /// Also time full enumeration when the reading count is at most this.
        #[arg(long, default_value_t = 5000)]
        enum_max: u64,
        /// Write CSV here (`-` for stdout instead of the table).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GrammarArg {
    /// Grammar file; the bundled demo grammar when omitted.
    #[arg(short, long)]
    grammar: Option<PathBuf>,
}

impl GrammarArg {
    fn load(&self) -> Result<SemGrammar> {
        match &self.grammar {
            None => Ok(SemGrammar::demo()),
            Some(p) => {
                let src = read(p)?;
                SemGrammar::parse(&src).with_context(|| format!("loading grammar {}", p.display()))
            }
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SentenceArg {
    /// Sentence to parse, tokens separated by spaces.
    #[arg(short, long)]
    sentence: Option<String>,
    /// Use `i saw a man` followed by N copies of `on a hill`.
    #[arg(long, value_name = "N")]
    pp: Option<usize>,
}

impl SentenceArg {
    fn tokens(&self) -> Vec<String> {
        match (&self.sentence, self.pp) {
            (Some(s), _) => s.split_whitespace().map(str::to_string).collect(),
            (None, Some(n)) => pp_sentence(n),
            (None, None) => unreachable!("clap requires one input"),
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct InputArg {
    /// Forest JSON file.
    #[arg(short, long)]
    forest: Option<PathBuf>,
    #[arg(short, long)]
    sentence: Option<String>,
    #[arg(long, value_name = "N")]
    pp: Option<usize>,
}

impl InputArg {
    fn forest(&self, g: &SemGrammar) -> Result<Forest> {
        let f = match (&self.forest, &self.sentence, self.pp) {
            (Some(p), _, _) => {
                let src = read(p)?;
                Forest::from_json(&src).with_context(|| format!("reading forest {}", p.display()))?
            }
            (None, Some(s), _) => {
                let toks: Vec<&str> = s.split_whitespace().collect();
                parse(&toks, g.backbone())?
            }
            (None, None, Some(n)) => parse(&pp_sentence(n), g.backbone())?,
            _ => unreachable!("clap requires one input"),
        };
        let violations = validate(&f, g.backbone());
        if !violations.is_empty() {
            let mut msg = String::from("forest is not well-formed:");
            for v in &violations {
                let _ = write!(msg, "\n  {v}");
            }
            bail!(msg);
        }
        Ok(f)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ForestFormat {
    Json,
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum DumpFormat {
    Text,
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolutionFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

fn read(p: &Path) -> Result<String> {
    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn slot_names(p: &PackedResult) -> Vec<(String, Var)> {
    p.slot_variables()
        .into_iter()
        .enumerate()
        .map(|(i, v)| (column_name(i), v))
        .collect()
}

/// A, B, ..., Z, A1, B1, ...
fn column_name(i: usize) -> String {
    let letter = (b'A' + (i % 26) as u8) as char;
    match i / 26 {
        0 => letter.to_string(),
        k => format!("{letter}{k}"),
    }
}

fn parse_var(s: &str) -> Result<Var> {
    s.trim()
        .strip_prefix('_')
        .and_then(|d| d.parse().ok())
        .map(Var)
        .ok_or_else(|| anyhow!("`{s}` is not a variable; write it as it appears in the dump, e.g. `_42`"))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Parse {
            grammar,
            sentence,
            format,
            output,
        } => {
            let g = grammar.load()?;
            let f = parse(&sentence.tokens(), g.backbone())?;
            let violations = validate(&f, g.backbone());
            if !violations.is_empty() {
                bail!("parser produced an ill-formed forest: {}", violations[0]);
            }
            eprintln!("{} readings, {} nodes", readings_count(&f), f.len());
            let text = match format {
                ForestFormat::Json => f.to_json() + "\n",
                ForestFormat::Dot => f.to_dot(),
            };
            emit(&text, output.as_deref())?;
        }
        Command::Pack {
            grammar,
            input,
            dump,
            binary,
            output,
        } => {
            let g = grammar.load()?;
            let f = input.forest(&g)?;
            let p = pack(&f, &g, PackOptions { nary: !binary })?;
            let text = match dump {
                DumpFormat::Text => p.dump(),
                DumpFormat::Dot => p.root_dot(),
            };
            emit(&text, output.as_deref())?;
        }
        Command::Enumerate {
            grammar,
            input,
            cap,
            query,
            format,
        } => {
            let g = grammar.load()?;
            let f = input.forest(&g)?;
            let p = pack(&f, &g, PackOptions::default())?;
            let names: Vec<(String, Var)> = if query.is_empty() {
                slot_names(&p)
            } else {
                query
                    .iter()
                    .map(|q| Ok((q.trim().to_string(), parse_var(q)?)))
                    .collect::<Result<_>>()?
            };
            let known = p.known_vars();
            if let Some((_, v)) = names.iter().find(|(_, v)| !known.contains(v)) {
                bail!("variable {v} does not occur in the packed result");
            }
            let vars = names.iter().map(|(_, v)| *v).collect();
            let sols: Vec<_> = Unfolder::new(&p.sem_root, &p.d_root, &p.env)
                .query(vars)
                .take(cap.unwrap_or(usize::MAX))
                .collect();
            match format {
                SolutionFormat::Text => print!("{}", solutions_text(&sols, &names)),
                SolutionFormat::Json => println!("{}", solutions_json(&sols, &names)),
            }
            eprintln!("{} solutions", sols.len());
        }
        Command::Check {
            grammar,
            pp_max,
            bound,
        } => {
            let g = grammar.load()?;
            let bound = bound.unwrap_or_else(oracle_bound);
            let last = parse(&pp_sentence(pp_max), g.backbone())?;
            let top = readings_count(&last);
            if top.to_usize().map_or(true, |r| r > bound) {
                bail!(
                    "refusing to check: {pp_max} PPs give {top} readings, above the oracle bound of {bound} \
                     (raise it with --bound or PACKSEM_ORACLE_BOUND)"
                );
            }
            let mut failed = false;
            for n in 0..=pp_max {
                let f = parse(&pp_sentence(n), g.backbone())?;
                let line = match check_one(&f, &g, bound) {
                    Ok(line) => line,
                    Err(e) => {
                        failed = true;
                        format!("FAIL {e:#}")
                    }
                };
                println!("n={n:<2} readings={:<4} {line}", readings_count(&f));
            }
            if failed {
                return Ok(ExitCode::from(1));
            }
            println!("all checks passed");
        }
        Command::Bench {
            grammar,
            pp_max,
            pp_min,
            step,
            nary,
            enum_max,
            csv,
        } => {
            let g = grammar.load()?;
            let opts = PackOptions { nary: nary == Switch::On };
            let mut rows = Vec::new();
            let mut n = pp_min;
            while n <= pp_max {
                let f = parse(&pp_sentence(n), g.backbone())?;
                let readings = readings_count(&f);
                let nodes = node_counts(&f).internal();
                let t = Instant::now();
                let p = pack(&f, &g, opts)?;
                let pack_ms = t.elapsed().as_secs_f64() * 1e3;
                let enum_ms = if readings.to_u64().is_some_and(|r| r <= enum_max) {
                    let t = Instant::now();
                    let count = enumerate_solutions(&p, usize::MAX).count();
                    let ms = t.elapsed().as_secs_f64() * 1e3;
                    if readings.to_usize() != Some(count) {
                        bail!("n={n}: enumerated {count} solutions but the forest has {readings} readings");
                    }
                    Some(ms)
                } else {
                    None
                };
                rows.push((n, readings, nodes, pack_ms, enum_ms));
                n += step.max(1);
            }
            let mut csv_text = String::from("n,readings,and_or_nodes,pack_ms,enum_ms\n");
            for (n, r, nodes, p, e) in &rows {
                let e = e.map(|e| format!("{e:.3}")).unwrap_or_default();
                let _ = writeln!(csv_text, "{n},{r},{nodes},{p:.3},{e}");
            }
            let mut table = format!("{:>3}  {:>12}  {:>12}  {:>10}  {:>10}\n", "n", "readings", "and_or_nodes", "pack_ms", "enum_ms");
            for (n, r, nodes, p, e) in &rows {
                let e = e.map(|e| format!("{e:.1}")).unwrap_or_else(|| "-".into());
                let _ = writeln!(table, "{n:>3}  {r:>12}  {nodes:>12}  {p:>10.1}  {e:>10}");
            }
            let half = rows.iter().find(|r| r.0 * 2 == pp_max).or(rows.first());
            if let (Some(a), Some(b)) = (half, rows.last()) {
                if a.0 < b.0 {
                    let rr = b.1.to_f64().unwrap_or(f64::INFINITY) / a.1.to_f64().unwrap_or(1.0);
                    let _ = writeln!(
                        table,
                        "growth n={}..{}: pack time x{:.1}, readings x{:.3e}",
                        a.0,
                        b.0,
                        b.3 / a.3.max(1e-9),
                        rr
                    );
                }
            }
            match csv.as_deref() {
                Some(p) if p == Path::new("-") => print!("{csv_text}"),
                Some(p) => {
                    fs::write(p, &csv_text).with_context(|| format!("writing {}", p.display()))?;
                    print!("{table}");
                }
                None => print!("{table}"),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn check_one(f: &Forest, g: &SemGrammar, bound: usize) -> Result<String> {
    let p = pack(f, g, PackOptions::default())?;
    let report = check_invariants(&p, f, g, bound.min(100));
    if let Some(v) = report.violations.first() {
        bail!("invariant violated: {v}");
    }
    let oracle = oracle_per_tree(f, g, bound)?;
    match equiv_check(&p, &oracle) {
        Equivalence::Equal => {}
        Equivalence::Diff { missing, extra } => {
            let mut msg = format!("packed result differs from the trees: {} missing, {} extra", missing.len(), extra.len());
            for t in missing.iter().take(3) {
                let _ = write!(msg, "\n  missing {t}");
            }
            for t in extra.iter().take(3) {
                let _ = write!(msg, "\n  extra {t}");
            }
            bail!(msg);
        }
    }
    Ok(format!(
        "oracle forms={} equal; invariants ok on {} nodes ({} skipped)",
        oracle.len(),
        report.nodes_checked,
        report.nodes_skipped
    ))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
