//! Line-oriented system description files.
//!
//! A file is a sequence of `[model <id>]` sections holding `key = value`
//! lines; `#` starts a comment. Each section declares one model through its
//! `kind` and is evaluated to `(model_id, metric, value)` rows:
//!
//! ```text
//! [model pump_line]
//! kind = rbd
//! structure = series(parallel(pump_a, pump_b), valve)
//! component.pump_a = 0.9
//! component.pump_b = weibull(1.5, 1000)
//! component.valve = 0.99
//! times = 10, 100
//!
//! [model controller]
//! kind = fta
//! tree = and(or(cpu, psu), watchdog)
//! event.cpu = 0.01
//! event.psu = 0.02
//! event.watchdog = 0.1
//!
//! [model link]
//! kind = markov
//! state.up = operational
//! state.down = failed
//! rate.up.down = 0.1
//! rate.down.up = 0.9
//! initial.up = 1
//! times = 1, 100
//!
//! [model replicated]
//! kind = frer
//! path.a.delivery = 0.9
//! path.a.delay = 0.7, 0.3
//! path.b.delivery = 0.8
//! deadline = 0, 1
//!
//! [model radio]
//! kind = weibull
//! shape = 2
//! scale = 1000
//! times = 100
//!
//! [model gateway]
//! kind = availability
//! mean_uptime = 999
//! mean_downtime = 1
//! ```
//!
//! RBD expressions use `series(..)`, `parallel(..)` and `kofn(k, ..)`;
//! components repeated across branches must be listed in `shared = a, b`.
//! Fault-tree expressions use `and(..)` and `or(..)`. An RBD whose
//! components include Weibull lifetimes needs `times`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::{
    frer_delivery, fta_top_event, markov_steady_state, markov_transient, rbd_reliability, rbd_to_fault_tree,
    steady_state_availability, AvailabilityRecord, Block, DelayedPath, FailureModel, FaultTree,
    MarkovAvailabilityModel, MarkovState, RedundantPathSet, StructureModel,
};

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub model_id: String,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptionError {
    pub line: usize,
    pub model: Option<String>,
    pub message: String,
}

impl fmt::Display for DescriptionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}", self.line)?;
        if let Some(m) = &self.model {
            write!(f, ": model `{m}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for DescriptionError {}

type DResult<T> = std::result::Result<T, DescriptionError>;

#[derive(Debug)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug)]
struct Section {
    id: String,
    line: usize,
    entries: BTreeMap<String, Entry>,
    /// Keys in declaration order, needed for Markov state ordering.
    order: Vec<String>,
}

impl Section {
    fn err(&self, line: usize, message: impl Into<String>) -> DescriptionError {
        DescriptionError { line, model: Some(self.id.clone()), message: message.into() }
    }

    fn required(&self, key: &str) -> DResult<&Entry> {
        self.entries.get(key).ok_or_else(|| self.err(self.line, format!("missing key `{key}`")))
    }

    fn number(&self, key: &str) -> DResult<f64> {
        let e = self.required(key)?;
        parse_number(&e.value).map_err(|m| self.err(e.line, format!("`{key}`: {m}")))
    }

    fn numbers(&self, key: &str) -> DResult<Option<Vec<f64>>> {
        self.entries
            .get(key)
            .map(|e| {
                e.value
                    .split(',')
                    .map(|v| parse_number(v).map_err(|m| self.err(e.line, format!("`{key}`: {m}"))))
                    .collect()
            })
            .transpose()
    }

    fn check_keys(&self, allowed: impl Fn(&str) -> bool) -> DResult<()> {
        for key in &self.order {
            if key != "kind" && !allowed(key) {
                let e = &self.entries[key];
                return Err(self.err(e.line, format!("unknown key `{key}`")));
            }
        }
        Ok(())
    }

    fn prefixed<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (&'a str, &'a Entry)> + 'a {
        self.order.iter().filter_map(move |k| k.strip_prefix(prefix).map(|rest| (rest, &self.entries[k])))
    }
}

fn parse_number(text: &str) -> std::result::Result<f64, String> {
    let t = text.trim();
    t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| format!("expected a number, got `{t}`"))
}

fn valid_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c))
}

fn split_sections(text: &str) -> DResult<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(header) = content.strip_prefix('[') {
            let inner = header.strip_suffix(']').ok_or_else(|| DescriptionError {
                line,
                model: None,
                message: "unterminated section header".into(),
            })?;
            let id = inner.trim().strip_prefix("model").map(str::trim).unwrap_or("");
            if !inner.trim().starts_with("model ") || !valid_ident(id) {
                return Err(DescriptionError {
                    line,
                    model: None,
                    message: format!("expected `[model <id>]`, got `[{inner}]`"),
                });
            }
            if sections.iter().any(|s| s.id == id) {
                return Err(DescriptionError { line, model: Some(id.into()), message: "duplicate model id".into() });
            }
            sections.push(Section { id: id.into(), line, entries: BTreeMap::new(), order: Vec::new() });
            continue;
        }
        let Some(section) = sections.last_mut() else {
            return Err(DescriptionError {
                line,
                model: None,
                message: "key outside of a `[model <id>]` section".into(),
            });
        };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| section.err(line, format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim().to_string();
        if !valid_ident(&key) {
            return Err(section.err(line, format!("invalid key `{key}`")));
        }
        if section.entries.contains_key(&key) {
            return Err(section.err(line, format!("duplicate key `{key}`")));
        }
        section.order.push(key.clone());
        section.entries.insert(key, Entry { value: value.trim().to_string(), line });
    }
    Ok(sections)
}

/// Parsed expression tree shared by the RBD and fault-tree syntaxes.
#[derive(Debug)]
enum Expr {
    Name(String),
    Call(String, Vec<Expr>),
}

fn parse_expr(text: &str) -> std::result::Result<Expr, String> {
    let mut p = ExprParser { chars: text.char_indices().peekable(), text };
    let e = p.expr()?;
    p.skip_ws();
    match p.chars.peek() {
        None => Ok(e),
        Some((i, c)) => Err(format!("unexpected `{c}` at column {}", i + 1)),
    }
}

struct ExprParser<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    text: &'a str,
}

impl ExprParser<'_> {
    fn skip_ws(&mut self) {
        while self.chars.next_if(|(_, c)| c.is_whitespace()).is_some() {}
    }

    fn ident(&mut self) -> std::result::Result<String, String> {
        self.skip_ws();
        let start = match self.chars.peek() {
            Some(&(i, c)) if c.is_ascii_alphanumeric() || "_-.".contains(c) => i,
            Some(&(i, c)) => return Err(format!("unexpected `{c}` at column {}", i + 1)),
            None => return Err("unexpected end of expression".into()),
        };
        let mut end = start;
        while let Some((i, c)) = self.chars.next_if(|(_, c)| c.is_ascii_alphanumeric() || "_-.".contains(*c)) {
            end = i + c.len_utf8();
        }
        Ok(self.text[start..end].to_string())
    }

    fn expr(&mut self) -> std::result::Result<Expr, String> {
        let name = self.ident()?;
        self.skip_ws();
        if self.chars.next_if(|(_, c)| *c == '(').is_none() {
            return Ok(Expr::Name(name));
        }
        let mut args = Vec::new();
        loop {
            args.push(self.expr()?);
            self.skip_ws();
            match self.chars.next() {
                Some((_, ',')) => continue,
                Some((_, ')')) => return Ok(Expr::Call(name, args)),
                Some((i, c)) => return Err(format!("unexpected `{c}` at column {}", i + 1)),
                None => return Err(format!("missing `)` for `{name}(`")),
            }
        }
    }
}

fn to_block(e: &Expr) -> std::result::Result<Block, String> {
    match e {
        Expr::Name(n) => Ok(Block::Component(n.clone())),
        Expr::Call(f, args) => {
            let children = |a: &[Expr]| a.iter().map(to_block).collect::<std::result::Result<Vec<_>, _>>();
            match f.as_str() {
                "series" => Ok(Block::Series(children(args)?)),
                "parallel" => Ok(Block::Parallel(children(args)?)),
                "kofn" => {
                    let k = match args.first() {
                        Some(Expr::Name(k)) => k
                            .parse::<usize>()
                            .map_err(|_| format!("kofn: first argument must be an integer, got `{k}`"))?,
                        _ => return Err("kofn: first argument must be an integer".into()),
                    };
                    Ok(Block::KofN { k, children: children(&args[1..])? })
                }
                other => Err(format!("unknown block type `{other}`")),
            }
        }
    }
}

fn to_tree(e: &Expr, events: &HashMap<String, f64>) -> std::result::Result<FaultTree, String> {
    match e {
        Expr::Name(n) => events
            .get(n)
            .map(|p| FaultTree::basic(n.clone(), *p))
            .ok_or_else(|| format!("no probability given for basic event `{n}`")),
        Expr::Call(g, args) => {
            let children = args.iter().map(|a| to_tree(a, events)).collect::<std::result::Result<Vec<_>, _>>()?;
            match g.as_str() {
                "and" => Ok(FaultTree::And(children)),
                "or" => Ok(FaultTree::Or(children)),
                other => Err(format!("unknown gate type `{other}`")),
            }
        }
    }
}

enum ComponentLaw {
    Fixed(f64),
    Lifetime(FailureModel),
}

fn parse_law(text: &str) -> std::result::Result<ComponentLaw, String> {
    let t = text.trim();
    if let Some(args) = t.strip_prefix("weibull(").and_then(|r| r.strip_suffix(')')) {
        let v: Vec<f64> = args.split(',').map(parse_number).collect::<std::result::Result<_, _>>()?;
        let [shape, scale] = v[..] else {
            return Err("weibull(shape, scale) takes two numbers".into());
        };
        return FailureModel::new(shape, scale).map(ComponentLaw::Lifetime).map_err(|e| e.to_string());
    }
    parse_number(t).map(ComponentLaw::Fixed)
}

/// Parse and evaluate every model in `text`.
pub fn analyze(text: &str) -> DResult<Vec<MetricRow>> {
    let mut rows = Vec::new();
    for section in split_sections(text)? {
        let kind = section.required("kind")?;
        let metrics = match kind.value.as_str() {
            "rbd" => eval_rbd(&section)?,
            "fta" => eval_fta(&section)?,
            "markov" => eval_markov(&section)?,
            "frer" => eval_frer(&section)?,
            "weibull" => eval_weibull(&section)?,
            "availability" => eval_availability(&section)?,
            other => return Err(section.err(kind.line, format!("unknown model kind `{other}`"))),
        };
        rows.extend(metrics.into_iter().map(|(metric, value)| MetricRow {
            model_id: section.id.clone(),
            metric,
            value,
        }));
    }
    Ok(rows)
}

fn time_label(t: f64) -> String {
    format!("{t}")
}

fn eval_rbd(s: &Section) -> DResult<Vec<(String, f64)>> {
    s.check_keys(|k| matches!(k, "structure" | "shared" | "times") || k.starts_with("component."))?;
    let st = s.required("structure")?;
    let block =
        parse_expr(&st.value).and_then(|e| to_block(&e)).map_err(|m| s.err(st.line, format!("`structure`: {m}")))?;
    let shared: Vec<String> = s
        .entries
        .get("shared")
        .map(|e| e.value.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect())
        .unwrap_or_default();
    let model = StructureModel::with_shared(block, shared).map_err(|e| s.err(st.line, e.to_string()))?;

    let mut laws = HashMap::new();
    for (id, e) in s.prefixed("component.") {
        let law = parse_law(&e.value).map_err(|m| s.err(e.line, format!("component `{id}`: {m}")))?;
        laws.insert(id.to_string(), law);
    }
    for id in model.components() {
        if !laws.contains_key(&id) {
            return Err(s.err(st.line, format!("no `component.{id}` given")));
        }
    }
    let times = s.numbers("times")?;
    let has_lifetimes = laws.values().any(|l| matches!(l, ComponentLaw::Lifetime(_)));

    let at = |t: Option<f64>| -> DResult<HashMap<String, f64>> {
        laws.iter()
            .map(|(id, law)| {
                let p = match (law, t) {
                    (ComponentLaw::Fixed(p), _) => *p,
                    (ComponentLaw::Lifetime(m), Some(t)) => {
                        m.reliability_at(t).map_err(|e| s.err(st.line, e.to_string()))?
                    }
                    (ComponentLaw::Lifetime(_), None) => unreachable!(),
                };
                Ok((id.clone(), p))
            })
            .collect()
    };
    let eval = |p: &HashMap<String, f64>| rbd_reliability(&model, p).map_err(|e| s.err(st.line, e.to_string()));

    let mut out = Vec::new();
    match times {
        None if has_lifetimes => {
            let line = s.entries.get("times").map_or(s.line, |e| e.line);
            return Err(s.err(line, "`times` is required when components have lifetimes"));
        }
        None => {
            let probs = at(None)?;
            out.push(("reliability".to_string(), eval(&probs)?));
            if model.is_kofn_free() {
                let tree = rbd_to_fault_tree(&model, &probs).map_err(|e| s.err(st.line, e.to_string()))?;
                let top = fta_top_event(&tree).map_err(|e| s.err(st.line, e.to_string()))?;
                out.push(("fault_tree_top_event".to_string(), top));
            }
        }
        Some(ts) => {
            for t in ts {
                out.push((format!("reliability@t={}", time_label(t)), eval(&at(Some(t))?)?));
            }
        }
    }
    Ok(out)
}

fn eval_fta(s: &Section) -> DResult<Vec<(String, f64)>> {
    s.check_keys(|k| k == "tree" || k.starts_with("event."))?;
    let mut events = HashMap::new();
    for (id, e) in s.prefixed("event.") {
        let p = parse_number(&e.value).map_err(|m| s.err(e.line, format!("event `{id}`: {m}")))?;
        events.insert(id.to_string(), p);
    }
    let tr = s.required("tree")?;
    let tree =
        parse_expr(&tr.value).and_then(|e| to_tree(&e, &events)).map_err(|m| s.err(tr.line, format!("`tree`: {m}")))?;
    let top = fta_top_event(&tree).map_err(|e| s.err(tr.line, e.to_string()))?;
    Ok(vec![("top_event_probability".into(), top)])
}

fn eval_markov(s: &Section) -> DResult<Vec<(String, f64)>> {
    s.check_keys(|k| k == "times" || k.starts_with("state.") || k.starts_with("rate.") || k.starts_with("initial."))?;
    let mut states = Vec::new();
    for (label, e) in s.prefixed("state.") {
        let operational = match e.value.as_str() {
            "operational" | "up" => true,
            "failed" | "down" => false,
            other => {
                return Err(s.err(e.line, format!("state `{label}`: expected `operational` or `failed`, got `{other}`")))
            }
        };
        states.push(MarkovState { label: label.to_string(), operational });
    }
    let index = |label: &str, line: usize| {
        states.iter().position(|st| st.label == label).ok_or_else(|| s.err(line, format!("unknown state `{label}`")))
    };
    let n = states.len();
    let mut rates = vec![vec![0.0; n]; n];
    for (pair, e) in s.prefixed("rate.") {
        let (from, to) = pair
            .split_once('.')
            .ok_or_else(|| s.err(e.line, format!("rate key must be `rate.<from>.<to>`, got `rate.{pair}`")))?;
        let (i, j) = (index(from, e.line)?, index(to, e.line)?);
        rates[i][j] = parse_number(&e.value).map_err(|m| s.err(e.line, format!("rate `{pair}`: {m}")))?;
    }
    let mut initial = vec![0.0; n];
    let mut any_initial = false;
    for (label, e) in s.prefixed("initial.") {
        initial[index(label, e.line)?] = parse_number(&e.value).map_err(|m| s.err(e.line, m))?;
        any_initial = true;
    }
    if !any_initial && n > 0 {
        initial[0] = 1.0;
    }
    let model = MarkovAvailabilityModel::new(states, rates, initial).map_err(|e| s.err(s.line, e.to_string()))?;

    let mut out = vec![(
        "steady_state_availability".to_string(),
        markov_steady_state(&model).map_err(|e| s.err(s.line, e.to_string()))?.availability,
    )];
    for t in s.numbers("times")?.unwrap_or_default() {
        let d = markov_transient(&model, t).map_err(|e| s.err(s.line, e.to_string()))?;
        out.push((format!("availability@t={}", time_label(t)), d.availability));
    }
    Ok(out)
}

fn eval_frer(s: &Section) -> DResult<Vec<(String, f64)>> {
    s.check_keys(|k| {
        k == "deadline"
            || k.strip_prefix("path.")
                .and_then(|r| r.rsplit_once('.'))
                .is_some_and(|(_, f)| f == "delivery" || f == "delay")
    })?;
    let mut names: Vec<&str> = Vec::new();
    for (rest, _) in s.prefixed("path.") {
        let name = rest.rsplit_once('.').map_or(rest, |(n, _)| n);
        if !names.contains(&name) {
            names.push(name);
        }
    }
    let mut paths = Vec::new();
    for name in names {
        let delivery = s.number(&format!("path.{name}.delivery"))?;
        let delay = s.numbers(&format!("path.{name}.delay"))?.unwrap_or_else(|| vec![1.0]);
        paths.push(DelayedPath::new(delivery, delay));
    }
    let set = RedundantPathSet::new(paths).map_err(|e| s.err(s.line, e.to_string()))?;
    let dl = s.required("deadline")?;
    let mut out = Vec::new();
    for d in dl.value.split(',') {
        let d: usize = d
            .trim()
            .parse()
            .map_err(|_| s.err(dl.line, format!("`deadline`: expected slot counts, got `{}`", d.trim())))?;
        out.push((format!("delivery@deadline={d}"), frer_delivery(&set, d)));
    }
    Ok(out)
}

fn eval_weibull(s: &Section) -> DResult<Vec<(String, f64)>> {
    s.check_keys(|k| matches!(k, "shape" | "scale" | "times"))?;
    let m = FailureModel::new(s.number("shape")?, s.number("scale")?).map_err(|e| s.err(s.line, e.to_string()))?;
    let mut out = Vec::new();
    for t in s.numbers("times")?.unwrap_or_default() {
        let label = time_label(t);
        let r = m.reliability_at(t).map_err(|e| s.err(s.line, e.to_string()))?;
        out.push((format!("reliability@t={label}"), r));
        let h = m.hazard_at(t).map_err(|e| s.err(s.line, e.to_string()))?;
        out.push((format!("hazard@t={label}"), h));
    }
    Ok(out)
}

fn eval_availability(s: &Section) -> DResult<Vec<(String, f64)>> {
    s.check_keys(|k| matches!(k, "mean_uptime" | "mean_downtime"))?;
    let rec = AvailabilityRecord::new(s.number("mean_uptime")?, s.number("mean_downtime")?)
        .map_err(|e| s.err(s.line, e.to_string()))?;
    Ok(vec![("steady_state_availability".into(), steady_state_availability(&rec))])
}
