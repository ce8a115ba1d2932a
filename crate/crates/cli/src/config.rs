//! Circuit description files.
//!
//! One statement per line, `#` starts a comment:
//!
//! ```text
//! kind = two_crystal        # a standard geometry, or explicit elements below
//! r = 1.0                   # free variables, referenced by name
//! r1 = r
//! r2 = r
//! phi = 0.5pi
//! pattern = 1,1             # defaults to the geometry's detection pattern
//! policy = auto             # auto | default, then optional overrides:
//! policy.photon_cap = 80
//! ```
//!
//! Explicit circuits give `modes`, optionally `input`, and element lines
//! `squeeze <a> <b> <r> [, <theta>]` and `phase <mode> <phi>`, applied in
//! file order.

use std::collections::{HashMap, HashSet};
use std::fmt;

use sqfock::{Circuit, CircuitKind, OccupationVector, TruncationPolicy};

use crate::expr::{self, Expr};

/// Largest automatic photon cap for circuits with more than two modes; the
/// state size grows with the product of the per-mode caps.
pub const AUTO_MULTIMODE_CAP: u32 = 120;

const RESERVED: [&str; 6] = ["kind", "modes", "input", "pattern", "policy", "pi"];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.msg)
    }
}

impl std::error::Error for ConfigError {}

fn fail<T>(line: usize, col: usize, msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        line,
        col,
        msg: msg.into(),
    })
}

#[derive(Debug, Clone)]
struct Var {
    expr: Expr,
    line: usize,
    /// Column of the expression text within its line.
    col: usize,
}

#[derive(Debug, Clone)]
enum Op {
    Squeeze {
        a: usize,
        b: usize,
        r: Var,
        theta: Option<Var>,
    },
    Phase {
        mode: usize,
        phi: Var,
    },
}

#[derive(Debug, Clone, Default)]
struct PolicySpec {
    library_default: bool,
    photon_cap: Option<u32>,
    k_max: Option<usize>,
    term_floor: Option<f64>,
    prune_floor: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Config {
    kind: Option<CircuitKind>,
    vars: HashMap<String, Var>,
    modes: Option<usize>,
    input: Option<OccupationVector>,
    pattern: Option<OccupationVector>,
    ops: Vec<Op>,
    policy: PolicySpec,
}

/// Splits `text` at the first top-level occurrence of `sep`.
fn split_once_at(text: &str, sep: char) -> Option<(&str, &str)> {
    let i = text.find(sep)?;
    Some((&text[..i], &text[i + 1..]))
}

fn leading_ws(s: &str) -> usize {
    s.len() - s.trim_start().len()
}

fn parse_expr(text: &str, line: usize, col: usize) -> Result<Var, ConfigError> {
    let lead = leading_ws(text);
    let body = text.trim();
    if body.is_empty() {
        return fail(line, col, "missing value");
    }
    match expr::parse(body) {
        Ok(e) => Ok(Var {
            expr: e,
            line,
            col: col + lead,
        }),
        Err(e) => fail(line, col + lead + e.col - 1, e.msg),
    }
}

/// Evaluates an expression that may not reference variables.
fn literal(text: &str, line: usize, col: usize) -> Result<f64, ConfigError> {
    let v = parse_expr(text, line, col)?;
    let mut names = Vec::new();
    v.expr.vars(&mut names);
    if let Some((name, c)) = names.first() {
        return fail(
            line,
            v.col + c - 1,
            format!("'{name}' is not allowed here; use a number"),
        );
    }
    Ok(v.expr.eval(&HashMap::new()))
}

fn parse_pattern(text: &str, line: usize, col: usize) -> Result<OccupationVector, ConfigError> {
    let col = col + leading_ws(text);
    text.trim()
        .parse::<OccupationVector>()
        .or_else(|e| fail(line, col, format!("bad occupation pattern: {e}")))
}

fn parse_mode(tok: &str, line: usize, col: usize) -> Result<usize, ConfigError> {
    tok.parse::<usize>()
        .or_else(|_| fail(line, col, format!("expected a mode index, found '{tok}'")))
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Column (1-based) of `part` inside `line`; `part` must be a subslice.
fn col_of(line: &str, part: &str) -> usize {
    part.as_ptr() as usize - line.as_ptr() as usize + 1
}

impl Config {
    pub fn parse(src: &str) -> Result<Config, ConfigError> {
        let mut cfg = Config {
            kind: None,
            vars: HashMap::new(),
            modes: None,
            input: None,
            pattern: None,
            ops: Vec::new(),
            policy: PolicySpec::default(),
        };
        let mut seen: HashSet<String> = HashSet::new();
        let mut first_op_line = None;
        for (i, raw) in src.lines().enumerate() {
            let line = i + 1;
            let text = raw.split('#').next().unwrap_or("");
            if text.trim().is_empty() {
                continue;
            }
            let word = text.split_whitespace().next().unwrap_or("");
            if (word == "squeeze" || word == "phase") && !text.contains('=') {
                first_op_line.get_or_insert(line);
                cfg.ops.push(parse_op(raw, text, word, line)?);
                continue;
            }
            let Some((key_part, value)) = split_once_at(text, '=') else {
                return fail(
                    line,
                    col_of(raw, text.trim_start()),
                    "expected 'key = value' or an element line",
                );
            };
            let key = key_part.trim();
            let kcol = col_of(raw, key_part) + leading_ws(key_part);
            let vcol = col_of(raw, value);
            if !seen.insert(key.to_string()) {
                return fail(line, kcol, format!("'{key}' is set twice"));
            }
            match key {
                "kind" => {
                    let name = value.trim();
                    let kind = name.parse::<CircuitKind>().or_else(|_| {
                        let known: Vec<&str> = CircuitKind::ALL.iter().map(|k| k.name()).collect();
                        fail(
                            line,
                            vcol + leading_ws(value),
                            format!("unknown kind '{name}' (known: {})", known.join(", ")),
                        )
                    })?;
                    cfg.kind = Some(kind);
                }
                "modes" => {
                    let n = literal(value, line, vcol)?;
                    if !(n >= 1.0 && n <= sqfock::MAX_MODES as f64 && n.fract() == 0.0) {
                        return fail(
                            line,
                            vcol,
                            format!("modes must be an integer in 1..={}", sqfock::MAX_MODES),
                        );
                    }
                    cfg.modes = Some(n as usize);
                }
                "input" => cfg.input = Some(parse_pattern(value, line, vcol)?),
                "pattern" => cfg.pattern = Some(parse_pattern(value, line, vcol)?),
                "policy" => match value.trim() {
                    "auto" => cfg.policy.library_default = false,
                    "default" => cfg.policy.library_default = true,
                    other => {
                        return fail(
                            line,
                            vcol + leading_ws(value),
                            format!("policy must be 'auto' or 'default', found '{other}'"),
                        )
                    }
                },
                _ if key.starts_with("policy.") => {
                    let v = literal(value, line, vcol)?;
                    let whole = |v: f64| v >= 1.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX);
                    match &key["policy.".len()..] {
                        "photon_cap" if whole(v) => cfg.policy.photon_cap = Some(v as u32),
                        "k_max" if whole(v) => cfg.policy.k_max = Some(v as usize),
                        "term_floor" if v > 0.0 => cfg.policy.term_floor = Some(v),
                        "prune_floor" if v > 0.0 => cfg.policy.prune_floor = Some(v),
                        "photon_cap" | "k_max" => return fail(line, vcol, "expected a positive integer"),
                        "term_floor" | "prune_floor" => return fail(line, vcol, "expected a positive number"),
                        other => return fail(line, kcol, format!("unknown policy setting '{other}'")),
                    }
                }
                _ if !is_name(key) => return fail(line, kcol, format!("'{key}' is not a valid name")),
                _ if RESERVED.contains(&key) => return fail(line, kcol, format!("'{key}' is reserved")),
                _ => {
                    let var = parse_expr(value, line, vcol)?;
                    cfg.vars.insert(key.to_string(), var);
                }
            }
        }
        if cfg.kind.is_some() {
            if let Some(line) = first_op_line {
                return fail(line, 1, "element lines cannot be combined with 'kind'");
            }
            if cfg.modes.is_some() || cfg.input.is_some() {
                let line = src.lines().position(|l| {
                    let k = l.split('=').next().unwrap_or("").trim();
                    k == "modes" || k == "input"
                });
                return fail(line.map_or(1, |l| l + 1), 1, "'modes' and 'input' are fixed by 'kind'");
            }
        } else if cfg.modes.is_none() {
            return fail(1, 1, "either 'kind' or 'modes' must be given");
        }
        cfg.check_references()?;
        Ok(cfg)
    }

    fn check_references(&self) -> Result<(), ConfigError> {
        let mut all: Vec<&Var> = self.vars.values().collect();
        for op in &self.ops {
            match op {
                Op::Squeeze { r, theta, .. } => {
                    all.push(r);
                    all.extend(theta.iter());
                }
                Op::Phase { phi, .. } => all.push(phi),
            }
        }
        for v in all {
            let mut names = Vec::new();
            v.expr.vars(&mut names);
            for (name, c) in names {
                if !self.vars.contains_key(&name) {
                    return fail(v.line, v.col + c - 1, format!("undefined name '{name}'"));
                }
            }
        }
        Ok(())
    }

    pub fn has_var(&self, name: &str) -> bool {
        self.vars.contains_key(name)
    }

    /// Values of every variable, with `overrides` replacing the definitions
    /// of the named variables.
    pub fn resolve(&self, overrides: &HashMap<String, f64>) -> Result<HashMap<String, f64>, ConfigError> {
        let mut env: HashMap<String, f64> = overrides.clone();
        let mut names: Vec<&String> = self.vars.keys().collect();
        names.sort();
        for name in names {
            let mut stack = Vec::new();
            self.eval_var(name, &mut env, &mut stack)?;
        }
        Ok(env)
    }

    fn eval_var(
        &self,
        name: &str,
        env: &mut HashMap<String, f64>,
        stack: &mut Vec<String>,
    ) -> Result<f64, ConfigError> {
        if let Some(&v) = env.get(name) {
            return Ok(v);
        }
        let var = &self.vars[name];
        if stack.iter().any(|s| s == name) {
            return fail(
                var.line,
                var.col,
                format!("'{name}' depends on itself ({} -> {name})", stack.join(" -> ")),
            );
        }
        stack.push(name.to_string());
        let mut refs = Vec::new();
        var.expr.vars(&mut refs);
        for (r, _) in refs {
            self.eval_var(&r, env, stack)?;
        }
        stack.pop();
        let v = var.expr.eval(env);
        if !v.is_finite() {
            return fail(var.line, var.col, format!("'{name}' evaluates to {v}"));
        }
        env.insert(name.to_string(), v);
        Ok(v)
    }

    fn value(&self, v: &Var, env: &mut HashMap<String, f64>) -> Result<f64, ConfigError> {
        let mut refs = Vec::new();
        v.expr.vars(&mut refs);
        for (r, _) in refs {
            self.eval_var(&r, env, &mut Vec::new())?;
        }
        let x = v.expr.eval(env);
        if !x.is_finite() {
            return fail(v.line, v.col, format!("value evaluates to {x}"));
        }
        Ok(x)
    }

    /// Builds the circuit for one assignment of the variables.
    pub fn circuit(&self, overrides: &HashMap<String, f64>) -> Result<Circuit, crate::CliError> {
        let mut env = self.resolve(overrides)?;
        if let Some(kind) = self.kind {
            let mut params = Vec::new();
            for name in kind.param_names() {
                let Some(&v) = env.get(*name) else {
                    return Err(ConfigError {
                        line: 1,
                        col: 1,
                        msg: format!(
                            "kind '{kind}' needs '{name}' (parameters: {})",
                            kind.param_names().join(", ")
                        ),
                    }
                    .into());
                };
                params.push(v);
            }
            return Ok(sqfock::standard_circuit(kind, &params)?);
        }
        let modes = self.modes.expect("checked at parse time");
        let mut c = Circuit::new(modes)?;
        if let Some(input) = self.input {
            c = c.with_input(input)?;
        }
        for op in &self.ops {
            c = match op {
                Op::Squeeze { a, b, r, theta } => {
                    let rv = self.value(r, &mut env)?;
                    let tv = match theta {
                        Some(t) => self.value(t, &mut env)?,
                        None => 0.0,
                    };
                    c.squeeze(*a, *b, rv, tv)?
                }
                Op::Phase { mode, phi } => {
                    let pv = self.value(phi, &mut env)?;
                    c.phase(*mode, pv)?
                }
            };
        }
        Ok(c)
    }

    /// Output pattern from the file, else the geometry's detection pattern.
    pub fn pattern(&self) -> Option<OccupationVector> {
        self.pattern.or(self.kind.map(CircuitKind::detection_pattern))
    }

    /// `auto` sizes the photon cap for the strongest squeezer (limited to
    /// [`AUTO_MULTIMODE_CAP`] beyond two modes); `default` uses the fixed
    /// caps of the standard geometries, 40 for two modes and 24 per mode
    /// beyond. Explicit `policy.*` settings win in both cases.
    pub fn policy(&self, circuit: &Circuit) -> TruncationPolicy {
        let spec = &self.policy;
        let mut p = if spec.library_default {
            if circuit.mode_count() > 2 {
                CircuitKind::FourCrystal.default_policy()
            } else {
                CircuitKind::TwoCrystal.default_policy()
            }
        } else {
            auto_policy(circuit)
        };
        if let Some(cap) = spec.photon_cap {
            p = p.with_photon_cap(cap);
            if spec.k_max.is_none() {
                p = p.with_k_max(p.k_max.max(2 * cap as usize));
            }
        }
        if let Some(k) = spec.k_max {
            p = p.with_k_max(k);
        }
        if let Some(f) = spec.term_floor {
            p = p.with_term_floor(f);
        }
        if let Some(f) = spec.prune_floor {
            p = p.with_prune_floor(f);
        }
        p
    }
}

/// Policy sized for the strongest squeezer of `circuit`.
pub fn auto_policy(circuit: &Circuit) -> TruncationPolicy {
    let sized = TruncationPolicy::sized_for(circuit.max_r());
    if circuit.mode_count() > 2 && sized.photon_cap > AUTO_MULTIMODE_CAP {
        sized.with_photon_cap(AUTO_MULTIMODE_CAP)
    } else {
        sized
    }
}

fn parse_op(raw: &str, text: &str, word: &str, line: usize) -> Result<Op, ConfigError> {
    let after = &text[text.find(word).expect("word is in text") + word.len()..];
    let want = if word == "squeeze" { 2 } else { 1 };
    let mut rest = after;
    let mut modes = Vec::new();
    for _ in 0..want {
        let tok_start = leading_ws(rest);
        let trimmed = &rest[tok_start..];
        let tok_len = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
        let tok = &trimmed[..tok_len];
        if tok.is_empty() {
            return fail(
                line,
                col_of(raw, trimmed),
                format!("'{word}' needs {want} mode index(es)"),
            );
        }
        modes.push(parse_mode(tok, line, col_of(raw, tok))?);
        rest = &trimmed[tok_len..];
    }
    if word == "phase" {
        return Ok(Op::Phase {
            mode: modes[0],
            phi: parse_expr(rest, line, col_of(raw, rest))?,
        });
    }
    let (r_text, theta_text) = match split_once_at(rest, ',') {
        Some((r, t)) => (r, Some(t)),
        None => (rest, None),
    };
    Ok(Op::Squeeze {
        a: modes[0],
        b: modes[1],
        r: parse_expr(r_text, line, col_of(raw, r_text))?,
        theta: theta_text.map(|t| parse_expr(t, line, col_of(raw, t))).transpose()?,
    })
}
