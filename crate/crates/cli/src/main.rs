use std::io::{Read, Write};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};
use serde_json::{json, Value};
use tropichinese::minimizer::minimized_rep;
use tropichinese::words::DEFAULT_CLASS_CAP;
use tropichinese::{
    adjan, build_rep, canonical_oracle, canonical_via_rep, check_in_chn, check_in_tropical, eval_word,
    expand, growth_count, growth_oracle, recover_from_image, BlockDiagMatrix, ChnVerdict, Error, Identity,
    TropVerdict, Word,
};

const MAX_REPR_RANK: usize = 8;

#[derive(Parser)]
#[command(name = "tropichinese", version, about = "Tropical representations of the Chinese monoid")]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Canonical form of a word, computed through the representation.
    Canon {
        #[arg(short = 'n', long = "rank", value_parser = clap::value_parser!(u64).range(1..))]
        rank: u64,
        /// Word such as "a2 a3 a1" or "231".
        word: String,
        /// Cross-check against equivalence-class enumeration.
        #[arg(long)]
        oracle: bool,
        /// Largest class the oracle may enumerate.
        #[arg(long, default_value_t = DEFAULT_CLASS_CAP, value_parser = positive)]
        cap: usize,
    },
    /// The representation of Ch_n as block-diagonal tropical matrices.
    Repr {
        #[arg(short = 'n', long = "rank", value_parser = clap::value_parser!(u64).range(3..=MAX_REPR_RANK as u64))]
        rank: u64,
        /// Keep only blocks needed to determine the canonical form.
        #[arg(long)]
        minimize: bool,
    },
    /// Image of a word under the representation.
    Eval {
        #[arg(short = 'n', long = "rank", value_parser = clap::value_parser!(u64).range(1..))]
        rank: u64,
        word: String,
    },
    /// Canonical form from an image given as JSON (file, or stdin when omitted).
    Recover {
        #[arg(short = 'n', long = "rank", value_parser = clap::value_parser!(u64).range(3..))]
        rank: u64,
        file: Option<std::path::PathBuf>,
    },
    /// Search for counterexamples to a semigroup identity.
    #[command(group(ArgGroup::new("target").required(true).args(["chn", "trop"])))]
    #[command(group(ArgGroup::new("which").required(true).args(["identity", "adjan"])))]
    Check {
        /// Identity such as "x y = y x".
        identity: Option<String>,
        /// Check the Adjan identity.
        #[arg(long)]
        adjan: bool,
        /// Check in Ch_n by random word substitutions.
        #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
        chn: Option<u64>,
        /// Check over DIM x DIM upper-triangular tropical matrices.
        #[arg(long, value_name = "DIM", value_parser = clap::value_parser!(u64).range(1..))]
        trop: Option<u64>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Longest substituted word (Ch_n).
        #[arg(long, default_value_t = 8, value_parser = positive)]
        maxlen: usize,
        /// Smallest finite matrix entry (tropical).
        #[arg(long, default_value_t = -10, allow_hyphen_values = true)]
        min: i64,
        /// Largest finite matrix entry (tropical).
        #[arg(long, default_value_t = 10, allow_hyphen_values = true)]
        max: i64,
        #[arg(long, env = "TROPICHINESE_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Number of elements of Ch_n of each length.
    Growth {
        #[arg(short = 'n', long = "rank", value_parser = clap::value_parser!(u64).range(1..))]
        rank: u64,
        /// Largest length.
        #[arg(short = 'm', long = "max-len")]
        max_len: usize,
        /// Also count by enumerating all words.
        #[arg(long)]
        oracle: bool,
        /// Largest number of words the oracle may enumerate per length.
        #[arg(long, default_value_t = DEFAULT_CLASS_CAP, value_parser = positive)]
        cap: usize,
    },
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be positive".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

enum Failure {
    Lib(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(Failure::Lib(e @ Error::CapExceeded { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn emit(json: bool, value: Value, text: String) {
    let out = if json { serde_json::to_string_pretty(&value).expect("serializable") } else { text };
    let mut stdout = std::io::stdout().lock();
    // a closed pipe (e.g. `| head`) is not an error worth reporting
    let _ = writeln!(stdout, "{out}").and_then(|_| stdout.flush());
}

fn run(cli: Cli) -> Outcome {
    let json = cli.json;
    match cli.command {
        Command::Canon { rank, word, oracle, cap } => canon(json, rank as usize, &word, oracle, cap),
        Command::Repr { rank, minimize } => repr(json, rank as usize, minimize),
        Command::Eval { rank, word } => eval(json, rank as usize, &word),
        Command::Recover { rank, file } => recover(json, rank as usize, file),
        Command::Check { identity, adjan: use_adjan, chn, trop, samples, maxlen, min, max, seed } => {
            let id = match identity {
                Some(text) => Identity::parse(&text)?,
                None => {
                    debug_assert!(use_adjan);
                    adjan()
                }
            };
            match (chn, trop) {
                (Some(n), _) => check_chn(json, &id, n as usize, samples, maxlen, seed),
                (_, Some(dim)) => {
                    if min > max {
                        return Err(Failure::Usage(format!("--min {min} exceeds --max {max}")));
                    }
                    check_trop(json, &id, dim as usize, samples, (min, max), seed)
                }
                (None, None) => unreachable!("clap requires one target"),
            }
        }
        Command::Growth { rank, max_len, oracle, cap } => growth(json, rank as usize, max_len, oracle, cap),
    }
}

fn canon(json: bool, rank: usize, text: &str, oracle: bool, cap: usize) -> Outcome {
    let w = Word::parse(rank, text)?;
    let k = canonical_via_rep(&w)?;
    let word = expand(&k).to_string();
    let mut value = json!({ "tuple": k, "word": word });
    let mut lines = vec![k.to_string(), if word.is_empty() { "(empty word)".into() } else { word }];
    let mut code = ExitCode::SUCCESS;
    if oracle {
        let expect = canonical_oracle(&w, cap)?;
        let agree = expect == k;
        value["oracle"] = json!({ "tuple": expect, "agrees": agree });
        lines.push(if agree { "oracle: agrees".into() } else { format!("oracle: MISMATCH {expect}") });
        if !agree {
            code = ExitCode::from(1);
        }
    }
    emit(json, value, lines.join("\n"));
    Ok(code)
}

fn repr(json: bool, rank: usize, minimize: bool) -> Outcome {
    let (rep, selection) = if minimize {
        let (rep, sel) = minimized_rep(rank)?;
        (rep, Some(sel))
    } else {
        (build_rep(rank)?, None)
    };
    let mut text = format!("Ch_{rank}: {} blocks of size 2", rep.block_count());
    if let Some(sel) = &selection {
        let blocks: Vec<String> = sel.selected.iter().map(usize::to_string).collect();
        text += &format!(", selected from the full representation: {}", blocks.join(" "));
        text += &format!("\ncertificate: rank {} on rows {:?}", sel.rank, sel.certificate.pivot_rows);
    }
    for (g, image) in rep.images().iter().enumerate() {
        text += &format!("\na{}:", g + 1);
        for (b, m) in image.blocks().iter().enumerate() {
            text += &format!("\n  block {b}: {m}");
        }
    }
    let value = match selection {
        Some(sel) => json!({ "representation": rep, "selection": sel }),
        None => serde_json::to_value(&rep).expect("serializable"),
    };
    emit(json, value, text);
    Ok(ExitCode::SUCCESS)
}

fn eval(json: bool, rank: usize, text: &str) -> Outcome {
    let w = Word::parse(rank, text)?;
    let target = rank.max(3);
    let image = eval_word(&build_rep(target)?, &w.embed(target)?)?;
    let mut out = String::new();
    if target != rank {
        out += &format!("(evaluated in Ch_{target})\n");
    }
    let lines: Vec<String> =
        image.blocks().iter().enumerate().map(|(b, m)| format!("block {b}: {m}")).collect();
    out += &lines.join("\n");
    emit(json, serde_json::to_value(&image).expect("serializable"), out);
    Ok(ExitCode::SUCCESS)
}

fn recover(json: bool, rank: usize, file: Option<std::path::PathBuf>) -> Outcome {
    let input = match file.as_deref() {
        Some(path) if path.as_os_str() != "-" => {
            std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|e| Failure::Usage(e.to_string()))?;
            s
        }
    };
    let image: BlockDiagMatrix =
        serde_json::from_str(&input).map_err(|e| Failure::Usage(format!("invalid image: {e}")))?;
    let k = recover_from_image(rank, &image)?;
    let word = expand(&k).to_string();
    emit(json, json!({ "tuple": k, "word": word }), format!("{k}\n{word}"));
    Ok(ExitCode::SUCCESS)
}

fn substitution_text(id: &Identity, images: &[String]) -> String {
    id.letters().iter().zip(images).map(|(c, w)| format!("{c} = {w}")).collect::<Vec<_>>().join(", ")
}

fn check_chn(json: bool, id: &Identity, n: usize, samples: usize, maxlen: usize, seed: u64) -> Outcome {
    let verdict = check_in_chn(id, n, samples, maxlen, seed)?;
    let value = serde_json::to_value(&verdict).expect("serializable");
    match &verdict {
        ChnVerdict::Holds { samples } => {
            emit(json, value, format!("holds in Ch_{n} on {samples} samples (seed {seed})"));
            Ok(ExitCode::SUCCESS)
        }
        ChnVerdict::Counterexample(cx) => {
            let text = format!(
                "counterexample in Ch_{n} at sample {}: {}\n  lhs: {}\n  rhs: {}\n  block {}: {} vs {}",
                cx.sample,
                substitution_text(id, &cx.substitution),
                cx.lhs,
                cx.rhs,
                cx.witness_block,
                cx.witness_lhs,
                cx.witness_rhs
            );
            emit(json, value, text);
            Ok(ExitCode::from(1))
        }
    }
}

fn check_trop(
    json: bool,
    id: &Identity,
    dim: usize,
    samples: usize,
    range: (i64, i64),
    seed: u64,
) -> Outcome {
    let verdict = check_in_tropical(id, dim, samples, range, seed)?;
    let value = serde_json::to_value(&verdict).expect("serializable");
    match &verdict {
        TropVerdict::NoCounterexample { samples } => {
            emit(json, value, format!("no counterexample in U_{dim} on {samples} samples (seed {seed})"));
            Ok(ExitCode::SUCCESS)
        }
        TropVerdict::Counterexample { sample, substitution, lhs, rhs } => {
            let images: Vec<String> = substitution.iter().map(ToString::to_string).collect();
            let text = format!(
                "counterexample in U_{dim} at sample {sample}: {}\n  lhs: {lhs}\n  rhs: {rhs}",
                substitution_text(id, &images)
            );
            emit(json, value, text);
            Ok(ExitCode::from(1))
        }
    }
}

fn growth(json: bool, rank: usize, max_len: usize, oracle: bool, cap: usize) -> Outcome {
    let mut rows = Vec::new();
    let mut lines = vec![if oracle { "m\tcount\toracle".to_string() } else { "m\tcount".to_string() }];
    let mut mismatch = false;
    for m in 0..=max_len {
        let count = growth_count(rank, m).to_string();
        let count_value =
            count.parse::<u64>().map(Value::from).unwrap_or_else(|_| Value::from(count.clone()));
        if oracle {
            let o = growth_oracle(rank, m, cap)?;
            let agree = o.to_string() == count;
            mismatch |= !agree;
            rows.push(json!({ "m": m, "count": count_value, "oracle": o, "agrees": agree }));
            lines.push(format!("{m}\t{count}\t{o}{}", if agree { "" } else { "\tMISMATCH" }));
        } else {
            rows.push(json!({ "m": m, "count": count_value }));
            lines.push(format!("{m}\t{count}"));
        }
    }
    emit(json, json!({ "rank": rank, "rows": rows }), lines.join("\n"));
    Ok(if mismatch { ExitCode::from(1) } else { ExitCode::SUCCESS })
}
