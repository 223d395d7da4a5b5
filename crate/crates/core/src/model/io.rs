//! Model file I/O: the JSON schema and the read-only legacy `.pomdp` format.

use super::{Labels, PomdpModel, ProbVector};
use crate::error::{Error, Result};
use std::path::Path;

/// Parses a model file. Content starting with `{` is JSON, anything else is the
/// legacy keyword format.
pub fn parse_model(path: impl AsRef<Path>) -> Result<PomdpModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::InvalidArgument(format!("file not found: {}", path.display()))
        } else {
            Error::Io(e)
        }
    })?;
    parse_model_str(&text)
}

pub fn parse_model_str(text: &str) -> Result<PomdpModel> {
    let model = if text.trim_start().starts_with('{') {
        serde_json::from_str::<PomdpModel>(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?
    } else {
        parse_legacy(text)?
    };
    model.validate()?;
    Ok(model)
}

/// Canonical pretty JSON.
pub fn to_json(model: &PomdpModel) -> String {
    serde_json::to_string_pretty(model).expect("model serialization cannot fail")
}

#[derive(Debug, Clone)]
struct Token {
    text: String,
    line: usize,
    column: usize,
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let mut start: Option<usize> = None;
        let flush = |out: &mut Vec<Token>, s: usize, e: usize| {
            if e > s {
                out.push(Token {
                    text: line[s..e].to_string(),
                    line: ln + 1,
                    column: s + 1,
                });
            }
        };
        for (i, c) in line.char_indices() {
            if c.is_whitespace() || c == ':' {
                if let Some(s) = start.take() {
                    flush(&mut out, s, i);
                }
                if c == ':' {
                    flush(&mut out, i, i + 1);
                }
            } else if start.is_none() {
                start = Some(i);
            }
        }
        if let Some(s) = start {
            flush(&mut out, s, line.len());
        }
    }
    out
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    states: Vec<String>,
    actions: Vec<String>,
    observations: Vec<String>,
}

fn err_at(tok: Option<&Token>, message: impl Into<String>) -> Error {
    let (line, column) = tok.map(|t| (t.line, t.column)).unwrap_or((0, 0));
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, k: usize) -> Option<&Token> {
        self.tokens.get(self.pos + k)
    }

    fn next(&mut self) -> Result<Token> {
        let t = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| err_at(self.tokens.last(), "unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect_colon(&mut self) -> Result<()> {
        let t = self.next()?;
        if t.text != ":" {
            return Err(err_at(Some(&t), format!("expected ':' but found '{}'", t.text)));
        }
        Ok(())
    }

    fn number(&mut self) -> Result<f64> {
        let t = self.next()?;
        t.text
            .parse::<f64>()
            .map_err(|_| err_at(Some(&t), format!("expected a number, found '{}'", t.text)))
    }

    fn numbers(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.number()).collect()
    }

    /// `N` or a list of names up to the next keyword.
    fn names(&mut self) -> Result<Vec<String>> {
        let first = self.next()?;
        if let Ok(n) = first.text.parse::<usize>() {
            return Ok((0..n).map(|i| i.to_string()).collect());
        }
        let mut names = vec![first.text];
        while let Some(t) = self.peek() {
            if self.peek_at(1).map(|c| c.text == ":").unwrap_or(false) || t.text == ":" {
                break;
            }
            names.push(self.next()?.text);
        }
        Ok(names)
    }

    /// Resolves an index token (`*` gives every index).
    fn indices(&self, tok: &Token, names: &[String], what: &str) -> Result<Vec<usize>> {
        if tok.text == "*" {
            return Ok((0..names.len()).collect());
        }
        if let Some(i) = names.iter().position(|n| *n == tok.text) {
            return Ok(vec![i]);
        }
        match tok.text.parse::<usize>() {
            Ok(i) if i < names.len() => Ok(vec![i]),
            _ => Err(err_at(Some(tok), format!("unknown {what} '{}'", tok.text))),
        }
    }

    fn at_colon(&self) -> bool {
        self.peek().map(|t| t.text == ":").unwrap_or(false)
    }
}

/// Parses the legacy line-oriented format (`discount:`, `values:`, `states:`,
/// `actions:`, `observations:`, `start:`, `T:`, `O:`, `R:`).
///
/// Rewards `R(a, s, s', o)` are marginalized to `r(s, a)` with the transition and
/// observation tables. `values: cost` negates them.
pub fn parse_legacy(text: &str) -> Result<PomdpModel> {
    let mut p = Parser {
        tokens: tokenize(text),
        pos: 0,
        states: Vec::new(),
        actions: Vec::new(),
        observations: Vec::new(),
    };
    let mut discount: Option<f64> = None;
    let mut cost = false;
    let mut start: Option<Vec<f64>> = None;
    let mut t: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut o: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut r4: Vec<Vec<Vec<Vec<f64>>>> = Vec::new();

    let ensure_tables = |p: &Parser,
                         t: &mut Vec<Vec<Vec<f64>>>,
                         o: &mut Vec<Vec<Vec<f64>>>,
                         r4: &mut Vec<Vec<Vec<Vec<f64>>>>,
                         tok: &Token|
     -> Result<()> {
        if p.states.is_empty() || p.actions.is_empty() || p.observations.is_empty() {
            return Err(err_at(
                Some(tok),
                "states, actions and observations must be declared before tables",
            ));
        }
        let (ns, na, ny) = (p.states.len(), p.actions.len(), p.observations.len());
        if t.is_empty() {
            *t = vec![vec![vec![0.0; ns]; ns]; na];
            *o = vec![vec![vec![0.0; ny]; ns]; na];
            *r4 = vec![vec![vec![vec![0.0; ny]; ns]; ns]; na];
        }
        Ok(())
    };

    while let Some(tok) = p.peek().cloned() {
        p.pos += 1;
        match tok.text.as_str() {
            "discount" => {
                p.expect_colon()?;
                discount = Some(p.number()?);
            }
            "values" => {
                p.expect_colon()?;
                let v = p.next()?;
                cost = match v.text.as_str() {
                    "reward" => false,
                    "cost" => true,
                    other => return Err(err_at(Some(&v), format!("unknown values '{other}'"))),
                };
            }
            "states" => {
                p.expect_colon()?;
                p.states = p.names()?;
            }
            "actions" => {
                p.expect_colon()?;
                p.actions = p.names()?;
            }
            "observations" => {
                p.expect_colon()?;
                p.observations = p.names()?;
            }
            "start" => {
                p.expect_colon()?;
                let ns = p.states.len();
                if ns == 0 {
                    return Err(err_at(Some(&tok), "start declared before states"));
                }
                let first = p.peek().cloned().ok_or_else(|| err_at(Some(&tok), "missing start"))?;
                if first.text == "uniform" {
                    p.pos += 1;
                    start = Some(vec![1.0 / ns as f64; ns]);
                } else if let Some(v) = (0..ns)
                    .map(|k| p.peek_at(k).and_then(|t| t.text.parse::<f64>().ok()))
                    .collect::<Option<Vec<f64>>>()
                    .filter(|v| (v.iter().sum::<f64>() - 1.0).abs() < 1e-6)
                {
                    p.pos += ns;
                    start = Some(v);
                } else {
                    p.pos += 1;
                    let idx = p.indices(&first, &p.states.clone(), "state")?;
                    let mut v = vec![0.0; ns];
                    v[idx[0]] = 1.0;
                    start = Some(v);
                }
            }
            "T" | "O" => {
                ensure_tables(&p, &mut t, &mut o, &mut r4, &tok)?;
                p.expect_colon()?;
                let is_t = tok.text == "T";
                let ns = p.states.len();
                let width = if is_t { ns } else { p.observations.len() };
                let a_tok = p.next()?;
                let acts = p.indices(&a_tok, &p.actions.clone(), "action")?;
                let table = if is_t { &mut t } else { &mut o };
                let col_names = if is_t { p.states.clone() } else { p.observations.clone() };
                if !p.at_colon() {
                    let kw = p.peek().cloned().ok_or_else(|| err_at(Some(&a_tok), "missing matrix"))?;
                    let mat: Vec<Vec<f64>> = match kw.text.as_str() {
                        "identity" if is_t => {
                            p.pos += 1;
                            (0..ns)
                                .map(|s| (0..ns).map(|j| if j == s { 1.0 } else { 0.0 }).collect())
                                .collect()
                        }
                        "uniform" => {
                            p.pos += 1;
                            vec![vec![1.0 / width as f64; width]; ns]
                        }
                        _ => (0..ns).map(|_| p.numbers(width)).collect::<Result<_>>()?,
                    };
                    for &a in &acts {
                        table[a] = mat.clone();
                    }
                    continue;
                }
                p.expect_colon()?;
                let s_tok = p.next()?;
                let rows = p.indices(&s_tok, &p.states.clone(), "state")?;
                if !p.at_colon() {
                    let row = if p.peek().map(|t| t.text == "uniform").unwrap_or(false) {
                        p.pos += 1;
                        vec![1.0 / width as f64; width]
                    } else {
                        p.numbers(width)?
                    };
                    for &a in &acts {
                        for &s in &rows {
                            table[a][s] = row.clone();
                        }
                    }
                    continue;
                }
                p.expect_colon()?;
                let c_tok = p.next()?;
                let cols = p.indices(&c_tok, &col_names, if is_t { "state" } else { "observation" })?;
                let v = p.number()?;
                for &a in &acts {
                    for &s in &rows {
                        for &c in &cols {
                            table[a][s][c] = v;
                        }
                    }
                }
            }
            "R" => {
                ensure_tables(&p, &mut t, &mut o, &mut r4, &tok)?;
                p.expect_colon()?;
                let (ns, ny) = (p.states.len(), p.observations.len());
                let a_tok = p.next()?;
                let acts = p.indices(&a_tok, &p.actions.clone(), "action")?;
                p.expect_colon()?;
                let s_tok = p.next()?;
                let ss = p.indices(&s_tok, &p.states.clone(), "state")?;
                if !p.at_colon() {
                    let mat: Vec<Vec<f64>> = (0..ns).map(|_| p.numbers(ny)).collect::<Result<_>>()?;
                    for &a in &acts {
                        for &s in &ss {
                            r4[a][s] = mat.clone();
                        }
                    }
                    continue;
                }
                p.expect_colon()?;
                let s2_tok = p.next()?;
                let s2s = p.indices(&s2_tok, &p.states.clone(), "state")?;
                if !p.at_colon() {
                    let row = p.numbers(ny)?;
                    for &a in &acts {
                        for &s in &ss {
                            for &s2 in &s2s {
                                r4[a][s][s2] = row.clone();
                            }
                        }
                    }
                    continue;
                }
                p.expect_colon()?;
                let o_tok = p.next()?;
                let ys = p.indices(&o_tok, &p.observations.clone(), "observation")?;
                let v = p.number()?;
                for &a in &acts {
                    for &s in &ss {
                        for &s2 in &s2s {
                            for &y in &ys {
                                r4[a][s][s2][y] = v;
                            }
                        }
                    }
                }
            }
            other => return Err(err_at(Some(&tok), format!("unexpected token '{other}'"))),
        }
    }

    let discount = discount.ok_or_else(|| err_at(None, "missing field `discount`"))?;
    if t.is_empty() {
        return Err(err_at(None, "missing T/O/R tables"));
    }
    let (ns, na) = (p.states.len(), p.actions.len());
    let sign = if cost { -1.0 } else { 1.0 };
    let reward: Vec<Vec<f64>> = (0..ns)
        .map(|s| {
            (0..na)
                .map(|a| {
                    let mut acc = 0.0;
                    for s2 in 0..ns {
                        let inner: f64 = o[a][s2].iter().zip(&r4[a][s][s2]).map(|(q, r)| q * r).sum();
                        acc += t[a][s][s2] * inner;
                    }
                    sign * acc
                })
                .collect()
        })
        .collect();
    let initial = start.unwrap_or_else(|| vec![1.0 / ns as f64; ns]);
    let numbered = |names: &[String]| names.iter().enumerate().all(|(i, n)| *n == i.to_string());
    let labels = if numbered(&p.states) && numbered(&p.actions) && numbered(&p.observations) {
        None
    } else {
        Some(Labels {
            states: p.states.clone(),
            actions: p.actions.clone(),
            observations: p.observations.clone(),
        })
    };
    Ok(PomdpModel {
        n_states: ns,
        n_actions: na,
        n_observations: p.observations.len(),
        transition: t,
        observation: o,
        reward,
        initial_belief: ProbVector::new(initial)?,
        discount,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs;
    use crate::model::random_pomdp;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TIGER_LEGACY: &str = "\
# classic tiger
discount: 0.95
values: reward
states: tiger-left tiger-right
actions: listen open-left open-right
observations: hear-left hear-right
start: uniform

T: listen
identity
T: open-left
uniform
T: open-right
uniform

O: listen
0.85 0.15
0.15 0.85
O: open-left
uniform
O: open-right
uniform

R: listen : * : * : * -1
R: open-left : tiger-left : * : * -100
R: open-left : tiger-right : * : * 10
R: open-right : tiger-left : * : * 10
R: open-right : tiger-right : * : * -100
";

    #[test]
    fn legacy_tiger_matches_builtin() {
        let m = parse_model_str(TIGER_LEGACY).unwrap();
        let builtin = envs::tiger().model;
        assert_eq!(m.transition, builtin.transition);
        assert_eq!(m.reward, builtin.reward);
        assert_eq!(m.discount, builtin.discount);
        for a in 0..3 {
            for s in 0..2 {
                for y in 0..2 {
                    assert!((m.observation[a][s][y] - builtin.observation[a][s][y]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn legacy_marginalizes_next_state_rewards() {
        let text = "discount: 0.9\nstates: 2\nactions: 1\nobservations: 1\n\
                    T: 0 : 0 : 1 1.0\nT: 0 : 1 : 1 1.0\nO: 0\nuniform\nR: 0 : * : 1 : * 4\n";
        let m = parse_model_str(text).unwrap();
        assert_eq!(m.reward, vec![vec![4.0], vec![4.0]]);
    }

    #[test]
    fn legacy_error_has_position() {
        let err = parse_model_str("discount: 0.9\nstates: 2\nbogus: 1\n").unwrap_err();
        match err {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (3, 1)),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn bundled_tiger_json_parses() {
        let m = parse_model_str(envs::TIGER_JSON).unwrap();
        assert_eq!((m.n_states, m.n_actions, m.n_observations), (2, 3, 2));
    }

    #[test]
    fn missing_discount_names_field() {
        let mut v: serde_json::Value = serde_json::from_str(envs::TIGER_JSON).unwrap();
        v.as_object_mut().unwrap().remove("discount");
        let err = parse_model_str(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("discount"), "{err}");
    }

    #[test]
    fn json_dimension_mismatch_names_field() {
        let mut m = envs::tiger().model;
        m.reward[0].pop();
        let err = parse_model_str(&to_json(&m)).unwrap_err().to_string();
        assert!(err.contains("reward[0]"), "{err}");
    }

    #[test]
    fn roundtrip_random_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for i in 0..100 {
            let m = random_pomdp(&mut rng, 1 + i % 4, 1 + i % 3, 1 + i % 5, 0.5 + 0.004 * i as f64);
            let back = parse_model_str(&to_json(&m)).unwrap();
            assert_eq!(back, m);
        }
    }
}
