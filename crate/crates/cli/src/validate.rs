//! Interactive edge validation.

use crate::{coded, ValidateArgs};
use anyhow::{Context, Result};
use cgbench::compare::{deserialize_merged, serialize_merged, set_validity, MergedGraph};
use cgbench::model::{format_edge_key, parse_edge_key, EdgeKey, NodeKey};
use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

enum Answer {
    Valid(bool),
    Skip,
    Quit,
}

fn parse_answer(line: &str) -> Option<Answer> {
    match line.trim().to_ascii_lowercase().as_str() {
        "t" | "true" | "y" | "yes" => Some(Answer::Valid(true)),
        "f" | "false" | "n" | "no" => Some(Answer::Valid(false)),
        "" | "s" | "skip" => Some(Answer::Skip),
        "q" | "quit" => Some(Answer::Quit),
        _ => None,
    }
}

struct Sources {
    root: PathBuf,
    cache: HashMap<String, Option<Vec<String>>>,
}

impl Sources {
    fn lines(&mut self, file: &str) -> Option<&[String]> {
        let root = &self.root;
        self.cache
            .entry(file.to_string())
            .or_insert_with(|| {
                let path = Path::new(file);
                let path = if path.is_absolute() { path.to_path_buf() } else { root.join(path) };
                fs::read_to_string(path).ok().map(|t| t.lines().map(String::from).collect())
            })
            .as_deref()
    }

    fn excerpt(&mut self, key: &NodeKey, context: usize, out: &mut impl Write) -> std::io::Result<()> {
        if key.is_toplevel() {
            return writeln!(out, "    (global scope)");
        }
        let Some(lines) = self.lines(key.file()) else {
            return writeln!(out, "    MISSING_SOURCE {}", key.file());
        };
        let line = key.line() as usize;
        if line > lines.len() {
            return writeln!(out, "    MISSING_SOURCE {} has only {} lines", key.file(), lines.len());
        }
        let lo = line.saturating_sub(context).max(1);
        let hi = (line + context).min(lines.len());
        for n in lo..=hi {
            let mark = if n == line { '>' } else { ' ' };
            writeln!(out, "  {mark}{n:>6} | {}", lines[n - 1])?;
        }
        Ok(())
    }
}

fn read_only_keys(path: &Path) -> Result<BTreeSet<EdgeKey>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut keys = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match parse_edge_key(line) {
            Some(k) => {
                keys.insert(k);
            }
            None => anyhow::bail!("{}:{}: not an edge key", path.display(), i + 1),
        }
    }
    Ok(keys)
}

/// Writes through a sibling temporary file so an interrupted write never
/// truncates the document.
fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, text).with_context(|| format!("cannot write {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("cannot replace {}", path.display()))
}

fn pending(m: &MergedGraph, revisit: bool, only: Option<&BTreeSet<EdgeKey>>) -> Vec<EdgeKey> {
    let mut keys: Vec<EdgeKey> = m
        .edges()
        .filter(|e| revisit || e.valid.is_none())
        .map(|e| m.edge_key(e))
        .filter(|k| only.is_none_or(|o| o.contains(k)))
        .collect();
    keys.sort();
    keys
}

pub fn run(args: &ValidateArgs, input: &mut impl BufRead, out: &mut impl Write) -> Result<()> {
    let text = fs::read_to_string(&args.merged).with_context(|| format!("cannot read {}", args.merged.display()))?;
    let merged = deserialize_merged(&text).map_err(coded)?;
    let only = args.only.as_deref().map(read_only_keys).transpose()?;
    if let Some(only) = &only {
        if let Some(k) = only.iter().find(|k| merged.find_edge(k).is_none()) {
            return Err(coded(cgbench::compare::CompareError::UnknownEdge(format_edge_key(k))));
        }
    }
    let todo = pending(&merged, args.revisit, only.as_ref());
    let labels: HashMap<NodeKey, &str> = merged.nodes().iter().map(|n| (n.key(), n.label.as_str())).collect();
    let mut sources = Sources {
        root: args.root.clone(),
        cache: HashMap::new(),
    };
    let mut answers: Vec<(EdgeKey, bool)> = Vec::new();
    let mut line = String::new();
    'edges: for (i, key) in todo.iter().enumerate() {
        let edge = merged.find_edge(key).expect("pending edges exist");
        let tools: Vec<&str> = edge.tools.iter().map(String::as_str).collect();
        let current = match edge.valid {
            Some(true) => "true",
            Some(false) => "false",
            None => "unset",
        };
        writeln!(out, "\n[{}/{}] {} -> {}", i + 1, todo.len(), labels[&key.0], labels[&key.1])?;
        writeln!(out, "  edge  {}", format_edge_key(key))?;
        writeln!(out, "  tools {}  current {}", tools.join(","), current)?;
        writeln!(out, "  caller {}", key.0)?;
        sources.excerpt(&key.0, args.context, out)?;
        writeln!(out, "  callee {}", key.1)?;
        sources.excerpt(&key.1, args.context, out)?;
        loop {
            write!(out, "valid? [t]rue/[f]alse/[s]kip/[q]uit: ")?;
            out.flush()?;
            line.clear();
            if input.read_line(&mut line)? == 0 {
                writeln!(out)?;
                break 'edges;
            }
            match parse_answer(&line) {
                Some(Answer::Valid(v)) => {
                    if edge.valid != Some(v) {
                        answers.push((key.clone(), v));
                    }
                    break;
                }
                Some(Answer::Skip) => break,
                Some(Answer::Quit) => break 'edges,
                None => writeln!(out, "  please answer t, f, s or q")?,
            }
        }
    }
    let target = args.output.as_deref().unwrap_or(&args.merged);
    if answers.is_empty() {
        writeln!(out, "no changes")?;
        if args.output.is_some() && target != args.merged {
            write_atomic(target, &text)?;
        }
        return Ok(());
    }
    let updated = set_validity(&merged, &answers).map_err(coded)?;
    write_atomic(target, &serialize_merged(&updated))?;
    let remaining = updated.edge_count() - updated.validated_count();
    writeln!(
        out,
        "{} edge(s) updated, {} of {} validated, {} remaining; wrote {}",
        answers.len(),
        updated.validated_count(),
        updated.edge_count(),
        remaining,
        target.display()
    )?;
    Ok(())
}
