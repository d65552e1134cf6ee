//! Parser for the Python-flavored tool-call mini-grammar the agent emits:
//! `name(key=value, ...)` with string/number/bool literals, lists,
//! `Entity(...)` constructors, and `Entity_Type.X` / `Relation.X` paths.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use lbd_kb::query::EntityRef;
use lbd_kb::{EntityType, RelationType};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("bad call: {0}")]
pub struct CallParseError(pub String);

/// A parsed argument value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum ArgValue {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    None,
    List(Vec<ArgValue>),
    Entity(EntityRef),
    Relation(RelationType),
    EntityType(EntityType),
}

impl ArgValue {
    /// Canonical serialization used for repeat detection and call logs.
    pub fn canonical(&self) -> String {
        match self {
            ArgValue::Str(s) => format!("{s:?}"),
            ArgValue::Int(i) => i.to_string(),
            ArgValue::Float(f) => format!("{f:?}"),
            ArgValue::Bool(true) => "True".to_string(),
            ArgValue::Bool(false) => "False".to_string(),
            ArgValue::None => "None".to_string(),
            ArgValue::List(items) => format!(
                "[{}]",
                items.iter().map(ArgValue::canonical).collect::<Vec<_>>().join(", ")
            ),
            ArgValue::Entity(e) => {
                let mut fields = Vec::new();
                if let Some(t) = e.entity_type {
                    fields.push(format!("entity_type=Entity_Type.{}", t.as_str().to_uppercase()));
                }
                if let Some(id) = &e.id {
                    fields.push(format!("id={id:?}"));
                }
                if let Some(n) = &e.name {
                    fields.push(format!("name={n:?}"));
                }
                format!("Entity({})", fields.join(", "))
            }
            ArgValue::Relation(r) => format!("Relation.{}", r.as_str()),
            ArgValue::EntityType(t) => format!("Entity_Type.{}", t.as_str().to_uppercase()),
        }
    }
}

/// A parsed call: function name plus keyword arguments in written order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedCall {
    pub function: String,
    pub args: Vec<(String, ArgValue)>,
}

impl ParsedCall {
    /// Canonical form: arguments sorted by key, values canonically
    /// serialized. Two calls with the same canonical form are repeats.
    pub fn canonical(&self) -> String {
        let mut args = self.args.clone();
        args.sort_by(|a, b| a.0.cmp(&b.0));
        format!(
            "{}({})",
            self.function,
            args.iter()
                .map(|(k, v)| format!("{k}={}", v.canonical()))
                .collect::<Vec<_>>()
                .join(", ")
        )
    }

    pub fn arg(&self, key: &str) -> Option<&ArgValue> {
        self.args.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

// ---- lexer ---------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eq,
    Dot,
}

fn lex(input: &str) -> Result<Vec<Tok>, CallParseError> {
    let mut toks = Vec::new();
    let chars: Vec<char> = input.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                toks.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                toks.push(Tok::RParen);
                i += 1;
            }
            '[' => {
                toks.push(Tok::LBracket);
                i += 1;
            }
            ']' => {
                toks.push(Tok::RBracket);
                i += 1;
            }
            ',' => {
                toks.push(Tok::Comma);
                i += 1;
            }
            '=' => {
                toks.push(Tok::Eq);
                i += 1;
            }
            '.' => {
                toks.push(Tok::Dot);
                i += 1;
            }
            '"' | '\'' => {
                let quote = c;
                let mut s = String::new();
                i += 1;
                loop {
                    if i >= chars.len() {
                        return Err(CallParseError("unterminated string literal".into()));
                    }
                    match chars[i] {
                        '\\' if i + 1 < chars.len() => {
                            let esc = chars[i + 1];
                            s.push(match esc {
                                'n' => '\n',
                                't' => '\t',
                                other => other,
                            });
                            i += 2;
                        }
                        q if q == quote => {
                            i += 1;
                            break;
                        }
                        other => {
                            s.push(other);
                            i += 1;
                        }
                    }
                }
                toks.push(Tok::Str(s));
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' => {
                let start = i;
                i += 1;
                while i < chars.len()
                    && (chars[i].is_ascii_digit() || chars[i] == '.' || chars[i] == 'e' || chars[i] == 'E')
                {
                    // a dot followed by a non-digit belongs to a path, not a number
                    if chars[i] == '.' && (i + 1 >= chars.len() || !chars[i + 1].is_ascii_digit()) {
                        break;
                    }
                    i += 1;
                }
                toks.push(Tok::Num(chars[start..i].iter().collect()));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                toks.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            other => {
                return Err(CallParseError(format!("unexpected character {other:?}")));
            }
        }
    }
    Ok(toks)
}

// ---- parser ----------------------------------------------------------------

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> Result<(), CallParseError> {
        match self.next() {
            Some(t) if t == *tok => Ok(()),
            other => Err(CallParseError(format!("expected {what}, found {other:?}"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, CallParseError> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            other => Err(CallParseError(format!("expected {what}, found {other:?}"))),
        }
    }

    fn kwargs(&mut self) -> Result<Vec<(String, ArgValue)>, CallParseError> {
        let mut args = Vec::new();
        if self.peek() == Some(&Tok::RParen) {
            return Ok(args);
        }
        loop {
            let key = self.ident("parameter name")?;
            self.expect(&Tok::Eq, "'='")?;
            let value = self.value()?;
            args.push((key, value));
            match self.peek() {
                Some(Tok::Comma) => {
                    self.next();
                    if self.peek() == Some(&Tok::RParen) {
                        break; // trailing comma
                    }
                }
                _ => break,
            }
        }
        Ok(args)
    }

    fn value(&mut self) -> Result<ArgValue, CallParseError> {
        match self.next() {
            Some(Tok::Str(s)) => Ok(ArgValue::Str(s)),
            Some(Tok::Num(n)) => {
                if n.contains('.') || n.contains('e') || n.contains('E') {
                    n.parse::<f64>()
                        .map(ArgValue::Float)
                        .map_err(|_| CallParseError(format!("bad number {n:?}")))
                } else {
                    n.parse::<i64>()
                        .map(ArgValue::Int)
                        .map_err(|_| CallParseError(format!("bad number {n:?}")))
                }
            }
            Some(Tok::LBracket) => {
                let mut items = Vec::new();
                if self.peek() == Some(&Tok::RBracket) {
                    self.next();
                    return Ok(ArgValue::List(items));
                }
                loop {
                    items.push(self.value()?);
                    match self.next() {
                        Some(Tok::Comma) => {
                            if self.peek() == Some(&Tok::RBracket) {
                                self.next();
                                break;
                            }
                        }
                        Some(Tok::RBracket) => break,
                        other => {
                            return Err(CallParseError(format!(
                                "expected ',' or ']' in list, found {other:?}"
                            )))
                        }
                    }
                }
                Ok(ArgValue::List(items))
            }
            Some(Tok::Ident(name)) => self.ident_value(name),
            other => Err(CallParseError(format!("expected a value, found {other:?}"))),
        }
    }

    fn ident_value(&mut self, name: String) -> Result<ArgValue, CallParseError> {
        match name.as_str() {
            "True" | "true" => return Ok(ArgValue::Bool(true)),
            "False" | "false" => return Ok(ArgValue::Bool(false)),
            "None" | "null" => return Ok(ArgValue::None),
            _ => {}
        }
        match self.peek() {
            // dotted path: Entity_Type.CHEMICAL, Relation.treat
            Some(Tok::Dot) => {
                self.next();
                let member = self.ident("enum member")?;
                match name.as_str() {
                    "Entity_Type" | "EntityType" => EntityType::parse(&member)
                        .map(ArgValue::EntityType)
                        .map_err(|_| CallParseError(format!("unknown entity type {member:?}"))),
                    "Relation" | "RelationType" => RelationType::parse(&member)
                        .map(ArgValue::Relation)
                        .map_err(|_| CallParseError(format!("unknown relation {member:?}"))),
                    other => Err(CallParseError(format!("unknown namespace {other:?}"))),
                }
            }
            // constructor: Entity(...)
            Some(Tok::LParen) if name == "Entity" => {
                self.next();
                let kwargs = self.kwargs()?;
                self.expect(&Tok::RParen, "')'")?;
                let mut r = EntityRef::default();
                for (key, value) in kwargs {
                    match (key.as_str(), value) {
                        ("name", ArgValue::Str(s)) => r.name = Some(s),
                        ("id", ArgValue::Str(s)) => r.id = Some(s),
                        ("entity_type", ArgValue::EntityType(t)) => r.entity_type = Some(t),
                        ("entity_type", ArgValue::Str(s)) => {
                            r.entity_type = Some(EntityType::parse(&s).map_err(|_| {
                                CallParseError(format!("unknown entity type {s:?}"))
                            })?)
                        }
                        (k, v) => {
                            return Err(CallParseError(format!(
                                "bad Entity field {k}={}",
                                v.canonical()
                            )))
                        }
                    }
                }
                if r.id.is_none() && r.name.is_none() && r.entity_type.is_none() {
                    return Err(CallParseError("Entity() needs name, id, or entity_type".into()));
                }
                Ok(ArgValue::Entity(r))
            }
            Some(Tok::LParen) => Err(CallParseError(format!("unknown constructor {name:?}"))),
            // bare identifier: treat as a string (e.g. relations=[treat])
            _ => Ok(ArgValue::Str(name)),
        }
    }
}

/// Parse one `name(key=value, ...)` call. Trailing input is an error.
pub fn parse_call(input: &str) -> Result<ParsedCall, CallParseError> {
    let toks = lex(input.trim())?;
    let mut p = Parser { toks, pos: 0 };
    let function = p.ident("function name")?;
    p.expect(&Tok::LParen, "'('")?;
    let args = p.kwargs()?;
    p.expect(&Tok::RParen, "')'")?;
    if p.peek().is_some() {
        return Err(CallParseError("unexpected trailing input after call".into()));
    }
    Ok(ParsedCall { function, args })
}
