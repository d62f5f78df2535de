//! Command-line front end: builds balls, runs partition searches, emits
//! divisibility tables, certificates, and scaling-window reports, with a
//! run-configuration digest embedded in every artifact for replayability.

use crate::cayley::{ball_for_loop, loop_from_word, CayleyBall};
use crate::divisibility::{
    certify_gersten, certify_tv, certify_z2_rectangles, divisibility_table, tv_ratio_table,
    SearchFamily,
};
use crate::error::{Error, Result};
use crate::oracle::GroupOracle;
use crate::partition::inscribed_square_partition;
use crate::presentation::{parse_presentation, parse_word_expr};
use crate::scalewindow::build_diagonal_scaling;
use crate::search::{is_partitionable, min_pieces_chord, min_pieces_steiner, SearchBudgets};
use clap::{Parser, Subcommand};
use num::rational::Ratio;
use serde_json::json;
use sha2::{Digest, Sha256};
use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "loopdiv", version, about = "loop partitions and divisibility tables in Cayley graphs")]
struct Cli {
    /// Append a JSON line per run to this report file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Worker cap (current search backends are sequential; accepted for
    /// forward compatibility).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Build a ball in the Cayley graph and write it as JSON.
    Ball {
        #[arg(long)]
        group: String,
        #[arg(long, allow_hyphen_values = true)]
        radius: i64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimal-piece partition search for one loop at one mesh threshold.
    Partition {
        #[arg(long)]
        group: String,
        #[arg(long = "loop")]
        loop_word: String,
        /// Mesh threshold: integer, rational "p/q", "half", "/2^i", "/M:m".
        #[arg(long)]
        delta: String,
        /// auto | chord | steiner | square
        #[arg(long, default_value = "auto")]
        family: String,
        #[arg(long, default_value_t = 12)]
        max_pieces: usize,
        #[arg(long, default_value_t = 2)]
        max_interior: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sup of minimal piece counts per loop length, as CSV.
    Divisibility {
        #[arg(long)]
        group: String,
        #[arg(long)]
        n_max: usize,
        /// Mesh exponent: thresholds are n / 2^i.
        #[arg(long, default_value_t = 1)]
        i: u32,
        /// chord | steiner
        #[arg(long, default_value = "chord")]
        family: String,
        #[arg(long, default_value_t = 10)]
        max_pieces: usize,
        #[arg(long, default_value_t = 1)]
        max_interior: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Non-divisibility certificates and negative controls.
    Certify {
        /// gersten | tv-gi | z2-rectangles
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = 10)]
        k_max: u32,
        /// tv-gi relator parameters, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [4u64, 16, 256])]
        params: Vec<u64>,
        /// z2-rectangles side range "lo-hi".
        #[arg(long, default_value = "4-7")]
        k_range: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diagonal scaling-sequence construction from a table CSV.
    Scalewindow {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        levels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_group(spec: &str) -> Result<GroupOracle> {
    match spec {
        "z2" => Ok(GroupOracle::free_abelian(&['a', 'b'])),
        "free2" => Ok(GroupOracle::free(&['a', 'b'])),
        s if s.starts_with("bs(") && s.ends_with(')') => {
            let body = &s[3..s.len() - 1];
            let (p, q) = body
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad group spec {s}")))?;
            GroupOracle::baumslag_solitar(
                p.trim().parse().map_err(|_| Error::Parse(format!("bad p in {s}")))?,
                q.trim().parse().map_err(|_| Error::Parse(format!("bad q in {s}")))?,
            )
        }
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Parse(format!("group spec {path}: not a preset and not a readable presentation file ({e})"))
            })?;
            GroupOracle::small_cancellation(parse_presentation(&text)?, Ratio::new(1, 6))
        }
    }
}

fn resolve_delta(spec: &str, len: u64) -> Result<Ratio<u64>> {
    let bad = || Error::Parse(format!("bad delta spec {spec}"));
    if spec == "half" {
        return Ok(Ratio::new(len, 2));
    }
    if let Some(i) = spec.strip_prefix("/2^") {
        let i: u32 = i.parse().map_err(|_| bad())?;
        return Ok(Ratio::new(len, 1u64.checked_shl(i).ok_or_else(bad)?));
    }
    if let Some(m) = spec.strip_prefix("/M:") {
        let m: u64 = m.parse().map_err(|_| bad())?;
        if m == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(len, m));
    }
    if let Some((p, q)) = spec.split_once('/') {
        let p: u64 = p.parse().map_err(|_| bad())?;
        let q: u64 = q.parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(p, q));
    }
    Ok(Ratio::new(spec.parse().map_err(|_| bad())?, 1))
}

fn digest_of(config: &serde_json::Value) -> String {
    let mut h = Sha256::new();
    h.update(config.to_string().as_bytes());
    format!("{:x}", h.finalize())
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn append_report(path: &Option<PathBuf>, row: serde_json::Value) -> Result<()> {
    if let Some(p) = path {
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(p)?;
        writeln!(f, "{row}")?;
    }
    Ok(())
}

fn parse_search_family(
    name: &str,
    max_pieces: usize,
    max_interior: usize,
) -> Result<SearchFamily> {
    match name {
        "chord" => Ok(SearchFamily::Chord),
        "steiner" => Ok(SearchFamily::Steiner(SearchBudgets::new(
            max_pieces,
            max_interior,
        ))),
        other => Err(Error::Parse(format!("unknown search family {other}"))),
    }
}

/// Exit code semantics: 0 success, 2 usage/parse error, 3 a search settled
/// on NOT-FOUND, 4 a budget was exhausted before settling.
fn run(cli: &Cli) -> Result<i32> {
    let started = Instant::now();
    let (config, exit, summary) = match &cli.cmd {
        Cmd::Ball { group, radius, out } => {
            if *radius < 0 {
                return Err(Error::Parse("radius must be nonnegative".into()));
            }
            let config = json!({"command": "ball", "group": group, "radius": radius});
            let oracle = parse_group(group)?;
            let ball = CayleyBall::build(oracle, *radius as usize)?;
            let artifact = json!({
                "run_config": config,
                "digest": digest_of(&config),
                "vertex_count": ball.vertex_count(),
                "ball": serde_json::from_str::<serde_json::Value>(&ball.to_json()?)?,
            });
            write_or_print(out, &serde_json::to_string_pretty(&artifact)?)?;
            (config, 0, format!("{} vertices", ball.vertex_count()))
        }
        Cmd::Partition {
            group,
            loop_word,
            delta,
            family,
            max_pieces,
            max_interior,
            out,
        } => {
            let config = json!({
                "command": "partition", "group": group, "loop": loop_word,
                "delta": delta, "family": family,
                "max_pieces": max_pieces, "max_interior": max_interior,
            });
            let oracle = parse_group(group)?;
            let gens: Vec<char> = oracle.generators().to_vec();
            let word = parse_word_expr(loop_word, &gens, None)?;
            let ball = ball_for_loop(oracle, &word)?;
            let lp = loop_from_word(&ball, &word)?;
            let d = resolve_delta(delta, lp.len() as u64)?;
            let budgets = SearchBudgets::new(*max_pieces, *max_interior);
            let result = match family.as_str() {
                "auto" => is_partitionable(&lp, d, budgets)?,
                "chord" => min_pieces_chord(&lp, d)?,
                "steiner" => min_pieces_steiner(&lp, d, budgets)?,
                "square" => {
                    let w = inscribed_square_partition(&lp)?;
                    crate::search::MinPiecesResult {
                        value: Some(w.piece_count()),
                        witness: Some(w),
                        family: "inscribed-square".into(),
                        explored: 1,
                        exhaustive: false,
                    }
                }
                other => return Err(Error::Parse(format!("unknown family {other}"))),
            };
            let witness_json = match &result.witness {
                Some(w) => serde_json::from_str::<serde_json::Value>(&w.to_json()?)?,
                None => serde_json::Value::Null,
            };
            let artifact = json!({
                "run_config": config,
                "digest": digest_of(&config),
                "loop_length": lp.len(),
                "delta": format!("{}/{}", d.numer(), d.denom()),
                "family": result.family,
                "value": result.value,
                "exhaustive": result.exhaustive,
                "explored": result.explored,
                "witness": witness_json,
            });
            write_or_print(out, &serde_json::to_string_pretty(&artifact)?)?;
            let (exit, summary) = match result.value {
                Some(v) => (0, format!("P = {v} ({})", result.family)),
                None => (3, "NOT-FOUND".to_string()),
            };
            (config, exit, summary)
        }
        Cmd::Divisibility {
            group,
            n_max,
            i,
            family,
            max_pieces,
            max_interior,
            out,
        } => {
            let config = json!({
                "command": "divisibility", "group": group, "n_max": n_max,
                "i": i, "family": family,
                "max_pieces": max_pieces, "max_interior": max_interior,
            });
            let oracle = parse_group(group)?;
            let fam = parse_search_family(family, *max_pieces, *max_interior)?;
            let table = divisibility_table(&oracle, *n_max, *i, fam)?;
            let mut csv_text = table.to_csv()?;
            csv_text.push_str(&format!("#digest,{},\n", digest_of(&config)));
            write_or_print(out, &csv_text)?;
            (config, 0, format!("{} rows", table.entries.len()))
        }
        Cmd::Certify {
            preset,
            k_max,
            params,
            k_range,
            out,
        } => {
            let config = json!({
                "command": "certify", "preset": preset, "k_max": k_max,
                "params": params, "k_range": k_range,
            });
            let (cert, extra) = match preset.as_str() {
                "gersten" => (certify_gersten(*k_max)?, serde_json::Value::Null),
                "tv-gi" => {
                    let cert = certify_tv(params)?;
                    let ratios: Vec<serde_json::Value> = tv_ratio_table(3)?
                        .into_iter()
                        .map(|(n, k, r)| {
                            json!({"n": n, "k": k, "ratio": format!("{}/{}", r.numer(), r.denom())})
                        })
                        .collect();
                    (cert, json!(ratios))
                }
                "z2-rectangles" => {
                    let (lo, hi) = k_range
                        .split_once('-')
                        .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
                        .ok_or_else(|| Error::Parse(format!("bad k-range {k_range}")))?;
                    (certify_z2_rectangles(lo..=hi)?, serde_json::Value::Null)
                }
                other => return Err(Error::Parse(format!("unknown preset {other}"))),
            };
            let artifact = json!({
                "run_config": config,
                "digest": digest_of(&config),
                "certificate": serde_json::from_str::<serde_json::Value>(&cert.to_json()?)?,
                "length_ratio_table": extra,
            });
            write_or_print(out, &serde_json::to_string_pretty(&artifact)?)?;
            (config, 0, cert.verdict.clone())
        }
        Cmd::Scalewindow { table, levels, out } => {
            let config = json!({
                "command": "scalewindow", "table": table.display().to_string(),
                "levels": levels,
            });
            let text = std::fs::read_to_string(table)?;
            let t = crate::divisibility::DivisibilityTable::from_csv(&text)?;
            let seq = build_diagonal_scaling(&t, *levels)?;
            let artifact = json!({
                "run_config": config,
                "digest": digest_of(&config),
                "report": serde_json::from_str::<serde_json::Value>(&seq.to_json()?)?,
                "terms_csv": seq.terms_csv(),
            });
            write_or_print(out, &serde_json::to_string_pretty(&artifact)?)?;
            (
                config,
                0,
                format!("{} levels, all_contained={}", seq.achieved_levels, seq.all_contained),
            )
        }
    };
    append_report(
        &cli.report,
        json!({
            "digest": digest_of(&config),
            "config": config,
            "summary": summary,
            "exit": exit,
            "wall_ms": started.elapsed().as_millis() as u64,
        }),
    )?;
    eprintln!("{summary}");
    Ok(exit)
}

pub fn cli_main() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(Error::Parse(msg)) | Err(Error::Precondition(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Error::BudgetExceeded(msg)) => {
            eprintln!("budget exhausted: {msg}");
            4
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
