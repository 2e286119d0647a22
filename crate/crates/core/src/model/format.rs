//! Line-based text formats for systems, schemes, witnesses, and queries.

use std::fmt::Write as _;

use super::{Configuration, Lps, ModelError, RunWitness, SemanticsMode, Vass};
use crate::rational::{Rational, RationalVec};

fn perr(line: usize, reason: impl Into<String>) -> ModelError {
    ModelError::Parse { line, reason: reason.into() }
}

/// Non-empty, comment-stripped lines with 1-based numbers. A leading
/// `format 1` line is consumed; other versions are rejected.
fn content_lines(text: &str) -> Result<Vec<(usize, Vec<&str>)>, ModelError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = line.split_whitespace().collect();
        if !toks.is_empty() {
            out.push((i + 1, toks));
        }
    }
    if let Some((n, toks)) = out.first() {
        if toks[0] == "format" {
            if toks.len() != 2 || toks[1] != "1" {
                return Err(perr(*n, "unsupported format version"));
            }
            out.remove(0);
        }
    }
    Ok(out)
}

fn parse_rational(line: usize, tok: &str) -> Result<Rational, ModelError> {
    tok.parse().map_err(|_| perr(line, format!("invalid number `{tok}`")))
}

fn parse_vector(line: usize, toks: &[&str], dim: usize) -> Result<RationalVec, ModelError> {
    if toks.len() != dim {
        return Err(perr(line, format!("expected {dim} values, found {}", toks.len())));
    }
    toks.iter().map(|t| parse_rational(line, t)).collect()
}

pub fn parse_vass(text: &str) -> Result<Vass, ModelError> {
    let lines = content_lines(text)?;
    let mut it = lines.iter();
    let (n, header) = it.next().ok_or_else(|| perr(1, "missing `vass <d>` header"))?;
    if header[0] != "vass" || header.len() != 2 {
        return Err(perr(*n, "expected `vass <d>`"));
    }
    let dim: usize = header[1].parse().map_err(|_| perr(*n, "invalid dimension"))?;
    let mut vass = Vass::new(dim).map_err(|e| perr(*n, e.to_string()))?;
    for (n, toks) in it {
        let n = *n;
        match toks[0] {
            "state" => {
                if toks.len() < 2 || toks.len() > 3 {
                    return Err(perr(n, "expected `state <id> [z=<j>,...]`"));
                }
                let mut coords = Vec::new();
                if let Some(spec) = toks.get(2) {
                    let list = spec.strip_prefix("z=").ok_or_else(|| perr(n, "expected `z=`"))?;
                    for c in list.split(',') {
                        let j: usize = c.parse().map_err(|_| perr(n, format!("invalid coordinate `{c}`")))?;
                        if j == 0 || j > dim {
                            return Err(perr(n, format!("coordinate {j} outside 1..={dim}")));
                        }
                        coords.push(j - 1);
                    }
                }
                if toks[1].contains("->") {
                    return Err(perr(n, "state ids may not contain `->`"));
                }
                vass.add_state(toks[1], &coords).map_err(|e| perr(n, e.to_string()))?;
            }
            "trans" => {
                if toks.len() < 3 {
                    return Err(perr(n, "expected `trans <src> <dst> <c1> ... <cd>`"));
                }
                let label = parse_vector(n, &toks[3..], dim)?;
                vass.add_transition_named(toks[1], toks[2], label)
                    .map_err(|e| perr(n, e.to_string()))?;
            }
            other => return Err(perr(n, format!("unknown directive `{other}`"))),
        }
    }
    Ok(vass)
}

pub fn write_vass(vass: &Vass) -> String {
    let mut s = format!("format 1\nvass {}\n", vass.dim());
    for q in 0..vass.num_states() {
        write!(s, "state {}", vass.state_name(q)).unwrap();
        let z = vass.zero_tests(q);
        if !z.is_empty() {
            let list: Vec<String> = z.iter().map(|c| (c + 1).to_string()).collect();
            write!(s, " z={}", list.join(",")).unwrap();
        }
        s.push('\n');
    }
    for t in 0..vass.num_transitions() {
        let (a, b) = vass.transition(t);
        writeln!(s, "trans {} {} {}", vass.state_name(a), vass.state_name(b), vass.label(t)).unwrap();
    }
    s
}

fn parse_transition_ref(vass: &Vass, line: usize, tok: &str) -> Result<usize, ModelError> {
    let (a, b) = tok
        .split_once("->")
        .ok_or_else(|| perr(line, format!("expected `src->dst`, found `{tok}`")))?;
    vass.find_transition_named(a, b).map_err(|e| perr(line, e.to_string()))
}

/// Parses `path`/`cycle` lines. Missing empty paths between consecutive
/// cycles (and at either end) are inserted; consecutive path lines are
/// concatenated.
pub fn parse_lps(text: &str, vass: &Vass) -> Result<Lps, ModelError> {
    let mut paths: Vec<Vec<usize>> = vec![Vec::new()];
    let mut cycles = Vec::new();
    let mut last_line = 1;
    for (n, toks) in content_lines(text)? {
        last_line = n;
        let ts = toks[1..]
            .iter()
            .map(|t| parse_transition_ref(vass, n, t))
            .collect::<Result<Vec<_>, _>>()?;
        match toks[0] {
            "path" => paths.last_mut().unwrap().extend(ts),
            "cycle" => {
                if ts.is_empty() {
                    return Err(perr(n, "cycle must be nonempty"));
                }
                cycles.push(ts);
                paths.push(Vec::new());
            }
            other => return Err(perr(n, format!("unknown directive `{other}`"))),
        }
    }
    Lps::new(vass, paths, cycles).map_err(|e| perr(last_line, e.to_string()))
}

pub fn write_lps(lps: &Lps, vass: &Vass) -> String {
    let mut s = String::from("format 1\n");
    for (is_cycle, seg) in lps.segments() {
        s.push_str(if is_cycle { "cycle" } else { "path" });
        for &t in seg {
            s.push(' ');
            s.push_str(&vass.transition_name(t));
        }
        s.push('\n');
    }
    s
}

/// Parses `"<state> <c1> ... <cd>"`.
pub fn parse_configuration(vass: &Vass, text: &str) -> Result<Configuration, ModelError> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    let (name, rest) = toks.split_first().ok_or_else(|| perr(1, "empty configuration"))?;
    let state = vass.state_id(name)?;
    if rest.len() != vass.dim() {
        return Err(ModelError::DimensionMismatch { expected: vass.dim(), found: rest.len() });
    }
    Ok(Configuration::new(state, parse_vector(1, rest, vass.dim())?))
}

pub fn write_configuration(vass: &Vass, c: &Configuration) -> String {
    format!("{} {}", vass.state_name(c.state), c.values)
}

pub fn parse_witness(text: &str, vass: &Vass) -> Result<RunWitness, ModelError> {
    let lines = content_lines(text)?;
    let mut it = lines.iter();
    let (n, first) = it.next().ok_or_else(|| perr(1, "missing `start` line"))?;
    if first[0] != "start" || first.len() < 2 {
        return Err(perr(*n, "expected `start <state> <c1> ... <cd>`"));
    }
    let state = vass.state_id(first[1]).map_err(|e| perr(*n, e.to_string()))?;
    let values = parse_vector(*n, &first[2..], vass.dim())?;
    let mut w = RunWitness::new(Configuration::new(state, values));
    for (n, toks) in it {
        if toks[0] != "step" || toks.len() != 3 {
            return Err(perr(*n, "expected `step <src>-><dst> <alpha>`"));
        }
        let t = parse_transition_ref(vass, *n, toks[1])?;
        w.push(t, parse_rational(*n, toks[2])?);
    }
    Ok(w)
}

pub fn write_witness(w: &RunWitness, vass: &Vass) -> String {
    let mut s = format!("format 1\nstart {}\n", write_configuration(vass, &w.start));
    for (t, a) in &w.steps {
        writeln!(s, "step {} {}", vass.transition_name(*t), a).unwrap();
    }
    s
}

/// A reachability query as stored on disk. Configurations are kept as text
/// because they can only be resolved against a parsed system.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QueryFile {
    pub vass: Option<String>,
    pub lps: Option<String>,
    pub from: Option<String>,
    pub to: Option<String>,
    pub mode: Option<SemanticsMode>,
    /// Bound on the total number of cycle repetitions searched.
    pub reps: Option<usize>,
}

pub fn parse_query(text: &str) -> Result<QueryFile, ModelError> {
    let mut q = QueryFile::default();
    for (n, toks) in content_lines(text)? {
        let rest = || toks[1..].join(" ");
        let single = || {
            if toks.len() == 2 {
                Ok(toks[1].to_string())
            } else {
                Err(perr(n, format!("`{}` takes one argument", toks[0])))
            }
        };
        match toks[0] {
            "vass" => q.vass = Some(single()?),
            "lps" => q.lps = Some(single()?),
            "from" => q.from = Some(rest()),
            "to" => q.to = Some(rest()),
            "mode" => {
                let m = single()?;
                q.mode = Some(SemanticsMode::from_name(&m).ok_or_else(|| perr(n, format!("unknown mode `{m}`")))?);
            }
            "reps" => q.reps = Some(single()?.parse().map_err(|_| perr(n, "invalid repetition bound"))?),
            other => return Err(perr(n, format!("unknown directive `{other}`"))),
        }
    }
    Ok(q)
}

pub fn write_query(q: &QueryFile) -> String {
    let mut s = String::from("format 1\n");
    if let Some(v) = &q.vass {
        writeln!(s, "vass {v}").unwrap();
    }
    if let Some(l) = &q.lps {
        writeln!(s, "lps {l}").unwrap();
    }
    if let Some(f) = &q.from {
        writeln!(s, "from {f}").unwrap();
    }
    if let Some(t) = &q.to {
        writeln!(s, "to {t}").unwrap();
    }
    if let Some(m) = q.mode {
        writeln!(s, "mode {m}").unwrap();
    }
    if let Some(r) = q.reps {
        writeln!(s, "reps {r}").unwrap();
    }
    s
}
