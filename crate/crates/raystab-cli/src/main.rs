//! Command-line interface: classification, membership, language enumeration,
//! Schreier graphs, grammar construction, generating functions, transduction,
//! and the end-to-end cross-validation matrix.
//!
//! Exit codes: 0 success (or membership holds), 1 definite negative
//! (non-member, failed validation, failed cross-check), 2 usage or input
//! errors, 3 internal cap exceeded.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use raystab::classify::{classify, Classification};
use raystab::et0l::text::{parse_grammar, render_grammar};
use raystab::et0l::{generate, validate_limiting, Et0lGrammar, LimitingGrammar};
use raystab::schreier::{
    closed_walk_counts, export_dot, green_coeffs, level_graph, level_graph_component,
    stabilized_walk_counts, LevelGraph,
};
use raystab::series::{gfun_recurrence, green_from_f, UniSeries};
use raystab::stab::{enumerate_wp, member_periodic};
use raystab::transducer::{parse_gsm, transform_grammar};
use raystab::tree::{parse_group_file, GeneratingSet, Ray, Vertex, Word};
use raystab::wp_grammar::build_grammars;

#[derive(Parser)]
#[command(
    name = "raystab",
    version,
    about = "Stabiliser membership languages of boundary rays in bounded automata groups"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct GroupArgs {
    /// Group definition file (wreath recursions)
    #[arg(long)]
    group: PathBuf,
    /// Add missing inverse generators (`name^-1`) before computing
    #[arg(long, default_value_t = false)]
    symmetrize: bool,
}

#[derive(Args, Clone)]
struct RayArgs {
    /// Initial segment of the ray (digit word, may be empty)
    #[arg(long, default_value = "")]
    initial: String,
    /// Period of the ray (nonempty digit word)
    #[arg(long)]
    period: String,
}

#[derive(Args, Clone)]
struct OutArg {
    /// Write output here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify each generator as finitary / directed / bounded / unbounded
    Classify {
        #[command(flatten)]
        group: GroupArgs,
        /// Machine-readable CSV instead of text
        #[arg(long, default_value_t = false)]
        csv: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Decide membership of a word in the stabiliser of a·b^ω
    Member {
        #[command(flatten)]
        group: GroupArgs,
        #[command(flatten)]
        ray: RayArgs,
        /// Word over the generators (quoted, space-separated or compact)
        #[arg(long)]
        word: String,
    },
    /// Enumerate the membership language up to a length bound
    EnumWp {
        #[command(flatten)]
        group: GroupArgs,
        #[command(flatten)]
        ray: RayArgs,
        #[arg(long)]
        max_len: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Build a finite-level Schreier graph; print walk counts or DOT
    Schreier {
        #[command(flatten)]
        group: GroupArgs,
        /// Tree level n
        #[arg(long)]
        level: usize,
        /// Base vertex (defaults to the level-n prefix of a·b^ω if a ray is given)
        #[arg(long)]
        base: Option<String>,
        #[arg(long, default_value = "")]
        initial: String,
        #[arg(long)]
        period: Option<String>,
        /// Write DOT to this path
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Print closed-walk counts up to this length
        #[arg(long)]
        counts: Option<usize>,
        /// Materialize only the component of the base
        #[arg(long, default_value_t = false)]
        component_only: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Export a level graph as DOT
    ExportDot {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long)]
        level: usize,
        #[arg(long)]
        base: Option<String>,
        #[arg(long, default_value = "")]
        initial: String,
        #[arg(long)]
        period: Option<String>,
        #[arg(long, default_value_t = false)]
        component_only: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Green-function coefficients of the simple random walk (CSV)
    Green {
        #[command(flatten)]
        group: GroupArgs,
        #[command(flatten)]
        ray: RayArgs,
        #[arg(long)]
        max_len: usize,
        /// Fixed level (default: auto-stabilized)
        #[arg(long)]
        level: Option<usize>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Construct the stabiliser grammar (or its complement) and write it
    Grammar {
        #[command(flatten)]
        group: GroupArgs,
        #[command(flatten)]
        ray: RayArgs,
        /// Which grammar: the language (e) or its complement (eprime)
        #[arg(long, default_value = "e")]
        variant: String,
        #[command(flatten)]
        out: OutArg,
        /// Print nonterminal/table statistics to stderr
        #[arg(long, default_value_t = false)]
        stats: bool,
    },
    /// Words of a grammar up to a length bound
    Lang {
        /// Grammar file
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        max_len: usize,
        /// Control-length cap for non-limiting grammars
        #[arg(long, default_value_t = 16)]
        control_cap: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Validate the limiting shape and desk-scale semantic properties
    CheckGrammar {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long, default_value_t = 5)]
        max_len: usize,
        #[arg(long, default_value_t = 7)]
        rounds: usize,
    },
    /// Generating-function coefficients of a limiting grammar (CSV)
    Gfun {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        max_deg: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Transform a limiting grammar by a string transducer
    Transduce {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        gsm: PathBuf,
        /// Exhaustive injectivity check length
        #[arg(long, default_value_t = 6)]
        check_len: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run the full cross-validation matrix
    Xval {
        #[command(flatten)]
        group: GroupArgs,
        #[command(flatten)]
        ray: RayArgs,
        #[arg(long, default_value_t = 6)]
        max_len: usize,
        /// Seed for the randomized membership sample
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Randomized membership sample size
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Use this grammar file instead of the constructed language grammar
        #[arg(long)]
        grammar_e: Option<PathBuf>,
        /// Use this grammar file instead of the constructed complement grammar
        #[arg(long)]
        grammar_eprime: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_of(&e))
        }
    }
}

type DynError = Box<dyn std::error::Error>;

fn exit_code_of(e: &DynError) -> u8 {
    let msg = e.to_string();
    let capped = ["cap", "exceeded", "stabilization", "exhausted"];
    if capped.iter().any(|k| msg.contains(k)) {
        3
    } else {
        2
    }
}

fn emit(out: &OutArg, text: &str) -> Result<(), DynError> {
    match &out.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn load_group(args: &GroupArgs) -> Result<GeneratingSet, DynError> {
    let text = std::fs::read_to_string(&args.group)
        .map_err(|e| format!("cannot read {}: {e}", args.group.display()))?;
    let gens = parse_group_file(&text)?;
    Ok(if args.symmetrize { gens.symmetrized() } else { gens })
}

fn parse_ray(gens: &GeneratingSet, ray: &RayArgs) -> Result<(Vertex, Vertex), DynError> {
    let a = Vertex::parse(&ray.initial, gens.alphabet())?;
    let b = Vertex::parse(&ray.period, gens.alphabet())?;
    if b.is_empty() {
        return Err("period must be nonempty".into());
    }
    Ok((a, b))
}

fn load_limiting(path: &Path) -> Result<LimitingGrammar, DynError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let grammar = parse_grammar(&text)?;
    Ok(LimitingGrammar::new(grammar)?)
}

fn run(cli: Cli) -> Result<u8, DynError> {
    match cli.cmd {
        Cmd::Classify { group, csv, out } => {
            let gens = load_group(&group)?;
            let mut text = String::new();
            if csv {
                writeln!(text, "generator,tag,depth,spine_initial,spine_period,bounded")?;
            }
            for id in gens.ids() {
                let c = classify(gens.machine(id));
                let bounded = !matches!(c, Classification::Unbounded);
                if csv {
                    let (depth, si, sp) = match &c {
                        Classification::Finitary { depth } => {
                            (depth.to_string(), String::new(), String::new())
                        }
                        Classification::Directed { spine } => {
                            (String::new(), spine.initial.to_string(), spine.period.to_string())
                        }
                        _ => (String::new(), String::new(), String::new()),
                    };
                    writeln!(
                        text,
                        "{},{},{},{},{},{}",
                        gens.name(id),
                        c.tag(),
                        depth,
                        si,
                        sp,
                        bounded
                    )?;
                } else {
                    match &c {
                        Classification::Finitary { depth } => writeln!(
                            text,
                            "{}: finitary, depth {depth}, bounded",
                            gens.name(id)
                        )?,
                        Classification::Directed { spine } => writeln!(
                            text,
                            "{}: directed, spine ({},{}), bounded",
                            gens.name(id),
                            spine.initial,
                            spine.period
                        )?,
                        Classification::BoundedOther => {
                            writeln!(text, "{}: bounded (not finitary or directed)", gens.name(id))?
                        }
                        Classification::Unbounded => {
                            writeln!(text, "{}: unbounded", gens.name(id))?
                        }
                    }
                }
            }
            emit(&out, &text)?;
            Ok(0)
        }
        Cmd::Member { group, ray, word } => {
            let gens = load_group(&group)?;
            let (a, b) = parse_ray(&gens, &ray)?;
            let w = gens.parse_word(&word)?;
            let member = member_periodic(&gens, &w, &a, &b)?;
            println!("{}", if member { "member" } else { "non-member" });
            Ok(if member { 0 } else { 1 })
        }
        Cmd::EnumWp { group, ray, max_len, out } => {
            let gens = load_group(&group)?;
            let (a, b) = parse_ray(&gens, &ray)?;
            let wp = enumerate_wp(&gens, &a, &b, max_len)?;
            let mut text = String::new();
            for w in &wp.words {
                writeln!(text, "{}", gens.format_word(w))?;
            }
            writeln!(text, "length,members,total")?;
            for (m, (c, t)) in wp.counts_by_length.iter().zip(&wp.totals_by_length).enumerate() {
                writeln!(text, "{m},{c},{t}")?;
            }
            emit(&out, &text)?;
            Ok(0)
        }
        Cmd::Schreier { group, level, base, initial, period, dot, counts, component_only, out } => {
            let gens = load_group(&group)?;
            let graph = build_level_graph(&gens, level, base, &initial, period, component_only)?;
            let mut text = String::new();
            writeln!(
                text,
                "level {level}: {} vertices, base {}",
                graph.vertex_count(),
                graph.base_vertex()
            )?;
            if let Some(max_len) = counts {
                let walk = closed_walk_counts(&graph, max_len);
                writeln!(text, "length,walks")?;
                for (m, c) in walk.0.iter().enumerate() {
                    writeln!(text, "{m},{c}")?;
                }
            }
            if let Some(path) = dot {
                std::fs::write(&path, export_dot(&graph))?;
                writeln!(text, "dot written to {}", path.display())?;
            }
            emit(&out, &text)?;
            Ok(0)
        }
        Cmd::ExportDot { group, level, base, initial, period, component_only, out } => {
            let gens = load_group(&group)?;
            let graph = build_level_graph(&gens, level, base, &initial, period, component_only)?;
            emit(&out, &export_dot(&graph))?;
            Ok(0)
        }
        Cmd::Green { group, ray, max_len, level, out } => {
            let gens = load_group(&group)?;
            if !gens.is_symmetric() {
                return Err("green requires a symmetric generating set (use --symmetrize)".into());
            }
            let (a, b) = parse_ray(&gens, &ray)?;
            let coeffs = match level {
                Some(n) => {
                    let base = Ray::new(a.clone(), b.clone()).prefix(n);
                    let graph = level_graph_component(&gens, n, &base)?;
                    green_coeffs(&gens, &graph, max_len)?
                }
                None => {
                    let (counts, _) = stabilized_walk_counts(&gens, &a, &b, max_len)?;
                    let f = UniSeries { coeffs: counts.0 };
                    green_from_f(&f, gens.len())
                }
            };
            let mut text = String::new();
            writeln!(text, "m,p_numerator,p_denominator")?;
            for (m, p) in coeffs.iter().enumerate() {
                writeln!(text, "{m},{},{}", p.numer(), p.denom())?;
            }
            emit(&out, &text)?;
            Ok(0)
        }
        Cmd::Grammar { group, ray, variant, out, stats } => {
            let gens = load_group(&group)?;
            let (a, b) = parse_ray(&gens, &ray)?;
            let (e, eprime) = build_grammars(&gens, &a, &b)?;
            let chosen = match variant.as_str() {
                "e" => e,
                "eprime" => eprime,
                other => return Err(format!("unknown variant `{other}` (use e or eprime)").into()),
            };
            if stats {
                let g = chosen.grammar();
                eprintln!(
                    "nonterminals: {}, terminals: {}",
                    g.symbols.nonterminals().count(),
                    g.symbols.terminals().count()
                );
                for t in &g.tables {
                    let states: usize = t.mapped_symbols().map(|s| t.language(s).n_states()).sum();
                    eprintln!(
                        "table {}: {} productions, {} automaton states",
                        t.name,
                        t.mapped_symbols().count(),
                        states
                    );
                }
            }
            emit(&out, &render_grammar(chosen.grammar()))?;
            Ok(0)
        }
        Cmd::Lang { grammar, max_len, control_cap, out } => {
            let text = std::fs::read_to_string(&grammar)
                .map_err(|e| format!("cannot read {}: {e}", grammar.display()))?;
            let g: Et0lGrammar = parse_grammar(&text)?;
            let words = match LimitingGrammar::new(g.clone()) {
                Ok(lim) => lim.generate_limiting(max_len)?.words,
                Err(_) => generate(&g, max_len, control_cap)?,
            };
            let mut text = String::new();
            for w in &words {
                writeln!(text, "{}", g.symbols.render_word(w))?;
            }
            emit(&out, &text)?;
            Ok(0)
        }
        Cmd::CheckGrammar { grammar, max_len, rounds } => {
            let text = std::fs::read_to_string(&grammar)
                .map_err(|e| format!("cannot read {}: {e}", grammar.display()))?;
            let g = parse_grammar(&text)?;
            let report = validate_limiting(&g, max_len, rounds)?;
            for msg in &report.structural {
                println!("structural: {msg}");
            }
            for (w, first, gap) in &report.persistence {
                println!(
                    "persistence: `{w}` appears at round {first} but is missing at round {gap}"
                );
            }
            for (w, n, count) in &report.ambiguity {
                println!("ambiguity: `{w}` has {count} derivations under alpha beta^{n} gamma");
            }
            if report.is_ok() {
                println!("ok");
                Ok(0)
            } else {
                Ok(1)
            }
        }
        Cmd::Gfun { grammar, max_deg, out } => {
            let lim = load_limiting(&grammar)?;
            let run = gfun_recurrence(&lim, max_deg)?;
            let mut text = String::new();
            writeln!(text, "m,coefficient")?;
            for (m, c) in run.series.coeffs.iter().enumerate() {
                writeln!(text, "{m},{c}")?;
            }
            writeln!(text, "# stabilization index {}", run.stabilization)?;
            emit(&out, &text)?;
            Ok(0)
        }
        Cmd::Transduce { grammar, gsm, check_len, out } => {
            let lim = load_limiting(&grammar)?;
            let gsm_text = std::fs::read_to_string(&gsm)
                .map_err(|e| format!("cannot read {}: {e}", gsm.display()))?;
            let machine = parse_gsm(&gsm_text)?;
            let transformed = transform_grammar(&lim, &machine, check_len)?;
            emit(&out, &render_grammar(transformed.grammar()))?;
            Ok(0)
        }
        Cmd::Xval { group, ray, max_len, seed, samples, grammar_e, grammar_eprime } => {
            let gens = load_group(&group)?;
            let (a, b) = parse_ray(&gens, &ray)?;
            xval(&gens, &a, &b, max_len, seed, samples, grammar_e, grammar_eprime)
        }
    }
}

fn build_level_graph(
    gens: &GeneratingSet,
    level: usize,
    base: Option<String>,
    initial: &str,
    period: Option<String>,
    component_only: bool,
) -> Result<LevelGraph, DynError> {
    let base_vertex = match (base, period) {
        (Some(b), _) => Vertex::parse(&b, gens.alphabet())?,
        (None, Some(p)) => {
            let a = Vertex::parse(initial, gens.alphabet())?;
            let b = Vertex::parse(&p, gens.alphabet())?;
            Ray::new(a, b).prefix(level)
        }
        (None, None) => return Err("need either --base or --period to locate the base".into()),
    };
    Ok(if component_only {
        level_graph_component(gens, level, &base_vertex)?
    } else {
        level_graph(gens, level, &base_vertex)?
    })
}

#[allow(clippy::too_many_arguments)]
fn xval(
    gens: &GeneratingSet,
    a: &Vertex,
    b: &Vertex,
    max_len: usize,
    seed: u64,
    samples: usize,
    grammar_e: Option<PathBuf>,
    grammar_eprime: Option<PathBuf>,
) -> Result<u8, DynError> {
    if !gens.is_symmetric() {
        return Err("xval requires a symmetric generating set (use --symmetrize)".into());
    }
    let mut all_ok = true;
    let mut check = |name: &str, ok: bool, detail: String| {
        println!("{}  {}  {}", if ok { "PASS" } else { "FAIL" }, name, detail);
        all_ok &= ok;
    };

    // oracle
    let wp = enumerate_wp(gens, a, b, max_len)?;
    let oracle_counts = wp.counts_by_length.clone();
    println!("oracle counts      {:?}", oracle_counts);

    // grammars
    let (built_e, built_ep) = build_grammars(gens, a, b)?;
    let e = match &grammar_e {
        Some(path) => load_limiting(path)?,
        None => built_e,
    };
    let eprime = match &grammar_eprime {
        Some(path) => load_limiting(path)?,
        None => built_ep,
    };
    let run_e = e.generate_limiting(max_len)?;
    let run_ep = eprime.generate_limiting(max_len)?;
    let counts_e = run_e.counts_by_length(max_len);
    let counts_ep = run_ep.counts_by_length(max_len);
    println!("grammar E counts   {:?}", counts_e);
    println!("grammar E' counts  {:?}", counts_ep);
    check(
        "grammar-vs-oracle",
        counts_e == oracle_counts,
        format!("{counts_e:?} vs {oracle_counts:?}"),
    );
    let complement = wp.complement_counts();
    check(
        "complement-partition",
        counts_ep == complement,
        format!("{counts_ep:?} vs {complement:?}"),
    );
    // word-level comparison
    let words_e: std::collections::BTreeSet<String> =
        run_e.words.iter().map(|w| e.symbols().render_word(w)).collect();
    let words_ep: std::collections::BTreeSet<String> =
        run_ep.words.iter().map(|w| eprime.symbols().render_word(w)).collect();
    let oracle_words: std::collections::BTreeSet<String> =
        wp.words.iter().map(|w| gens.format_word(w)).collect();
    check(
        "language-equality",
        words_e == oracle_words,
        format!("{} grammar words vs {} oracle words", words_e.len(), oracle_words.len()),
    );
    check(
        "languages-disjoint",
        words_e.is_disjoint(&words_ep),
        format!("{} overlapping words", words_e.intersection(&words_ep).count()),
    );

    // Schreier walk counts
    let (walks, level) = stabilized_walk_counts(gens, a, b, max_len)?;
    let walks_u64 = walks.as_u64().unwrap_or_default();
    check("schreier-walks", walks_u64 == oracle_counts, format!("level {level}: {walks_u64:?}"));

    // generating function
    let gfun = gfun_recurrence(&e, max_len)?;
    let gfun_counts = gfun.series.as_u64().unwrap_or_default();
    check("gfun-coefficients", gfun_counts == oracle_counts, format!("{gfun_counts:?}"));
    check(
        "gfun-stabilization",
        gfun.stabilization == run_e.stabilization,
        format!("{} vs {}", gfun.stabilization, run_e.stabilization),
    );

    // Green function: series route vs graph route
    let green_series = green_from_f(&gfun.series, gens.len());
    let base = Ray::new(a.clone(), b.clone()).prefix(level);
    let graph = level_graph_component(gens, level, &base)?;
    let green_graph = green_coeffs(gens, &graph, max_len)?;
    check(
        "green-function",
        green_series == green_graph,
        format!("{} coefficients", green_series.len()),
    );

    // randomized membership sample: pigeonhole test vs direct prefix fixing
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agree = true;
    for _ in 0..samples {
        let len = rng.gen_range(0..=max_len.max(1));
        let w = Word((0..len).map(|_| rng.gen_range(0..gens.len() as u16)).collect());
        let member = member_periodic(gens, &w, a, b)?;
        let machine = gens.word_automorphism(&w);
        let depth = (machine.state_count() + 1) * b.len() + a.len() + 4;
        let prefix = Ray::new(a.clone(), b.clone()).prefix(depth);
        let direct = machine.apply(&prefix) == prefix;
        if member != direct {
            agree = false;
            break;
        }
    }
    check("member-sample", agree, format!("{samples} random words, seed {seed}"));

    Ok(if all_ok { 0 } else { 1 })
}
