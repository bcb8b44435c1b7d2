//! Reader for the program file format.
//!
//! ```text
//! % comment
//! :- table p(index, index, min).
//! :- table e/3.
//! p(X,Y,1) :- e(X,Y,nt).
//! p(X,Y,D) :- p(X,Z,D1), p(Z,Y,D2), D is D1 + D2.
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::program::{BuiltinOp, CallPattern, Clause, Literal, Mode, ModeVector, Pattern, Program};
use crate::term::{Atom, Name};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Name(String),
    Var(String),
    Int(i64),
    Punct(&'static str),
    End,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const PUNCTS: [&str; 15] = [
    ":-", "=<", ">=", "(", ")", "[", "]", ",", "|", "=", "<", ">", "+", "-", "*",
];

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, message: String| Error::Parse { line, col, message };
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let advance = |i: &mut usize, line: &mut usize, col: &mut usize| {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col);
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            advance(&mut i, &mut line, &mut col);
            advance(&mut i, &mut line, &mut col);
            loop {
                if i + 1 >= chars.len() {
                    return Err(err(start_line, start_col, "unterminated block comment".into()));
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    advance(&mut i, &mut line, &mut col);
                    advance(&mut i, &mut line, &mut col);
                    break;
                }
                advance(&mut i, &mut line, &mut col);
            }
            continue;
        }
        let tok = if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                advance(&mut i, &mut line, &mut col);
            }
            let value = s
                .parse::<i64>()
                .map_err(|_| err(start_line, start_col, format!("integer {s} out of range")))?;
            Tok::Int(value)
        } else if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                advance(&mut i, &mut line, &mut col);
            }
            if c.is_uppercase() || c == '_' {
                Tok::Var(s)
            } else {
                Tok::Name(s)
            }
        } else if c == '\'' {
            advance(&mut i, &mut line, &mut col);
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => return Err(err(start_line, start_col, "unterminated quoted atom".into())),
                    Some('\'') => {
                        advance(&mut i, &mut line, &mut col);
                        break;
                    }
                    Some('\\') if i + 1 < chars.len() => {
                        advance(&mut i, &mut line, &mut col);
                        s.push(chars[i]);
                        advance(&mut i, &mut line, &mut col);
                    }
                    Some(&ch) => {
                        s.push(ch);
                        advance(&mut i, &mut line, &mut col);
                    }
                }
            }
            Tok::Name(s)
        } else if c == '.' {
            advance(&mut i, &mut line, &mut col);
            Tok::End
        } else if c == '/' {
            advance(&mut i, &mut line, &mut col);
            Tok::Punct("/")
        } else if let Some(p) = PUNCTS.iter().find(|p| text_at(&chars, i, p)) {
            for _ in 0..p.chars().count() {
                advance(&mut i, &mut line, &mut col);
            }
            Tok::Punct(p)
        } else {
            return Err(err(start_line, start_col, format!("unexpected character `{c}`")));
        };
        tokens.push(Token {
            tok,
            line: start_line,
            col: start_col,
        });
    }
    tokens.push(Token { tok: Tok::Eof, line, col });
    Ok(tokens)
}

fn text_at(chars: &[char], i: usize, p: &str) -> bool {
    p.chars().enumerate().all(|(k, pc)| chars.get(i + k) == Some(&pc))
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    fresh: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, token: &Token, message: impl Into<String>) -> Error {
        Error::Parse {
            line: token.line,
            col: token.col,
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        let t = self.next();
        if t.tok == tok {
            Ok(())
        } else {
            Err(self.error_at(&t, format!("expected {what}, found {}", describe(&t.tok))))
        }
    }

    fn eat(&mut self, p: &'static str) -> bool {
        if self.peek().tok == Tok::Punct(p) {
            self.next();
            true
        } else {
            false
        }
    }

    fn program(&mut self) -> Result<Program> {
        let mut clauses = Vec::new();
        let mut directives: BTreeMap<Name, ModeVector> = BTreeMap::new();
        loop {
            if self.peek().tok == Tok::Eof {
                break;
            }
            if self.peek().tok == Tok::Punct(":-") {
                self.next();
                self.directive(&mut directives)?;
            } else {
                clauses.push(self.clause()?);
            }
        }
        Program::assemble(clauses, directives)
    }

    fn directive(&mut self, directives: &mut BTreeMap<Name, ModeVector>) -> Result<()> {
        let t = self.next();
        if t.tok != Tok::Name("table".into()) {
            return Err(self.error_at(&t, "only `table` directives are supported"));
        }
        loop {
            let at = self.peek().clone();
            let (pred, modes) = self.table_spec()?;
            if let Some(existing) = directives.get(&pred) {
                if *existing != modes {
                    return Err(self.error_at(&at, format!("conflicting table directives for {pred}")));
                }
            }
            directives.insert(pred, modes);
            if !self.eat(",") {
                break;
            }
        }
        self.expect(Tok::End, "`.` after directive")
    }

    fn table_spec(&mut self) -> Result<(Name, ModeVector)> {
        let t = self.next();
        let Tok::Name(pred) = t.tok.clone() else {
            return Err(self.error_at(&t, format!("expected predicate name, found {}", describe(&t.tok))));
        };
        let pred: Name = Arc::from(pred.as_str());
        if self.eat("/") {
            let n = self.next();
            let Tok::Int(arity) = n.tok else {
                return Err(self.error_at(&n, "expected arity after `/`"));
            };
            return Ok((
                pred,
                ModeVector {
                    modes: vec![Mode::Index; arity as usize],
                },
            ));
        }
        let mut modes = Vec::new();
        if self.eat("(") {
            loop {
                modes.extend(self.mode_arg()?);
                if !self.eat(",") {
                    break;
                }
            }
            self.expect(Tok::Punct(")"), "`)` closing the mode list")?;
        }
        Ok((pred, ModeVector { modes }))
    }

    // A mode argument; `lattice(_,_,j/3)` expands to several modes.
    fn mode_arg(&mut self) -> Result<Vec<Mode>> {
        let t = self.next();
        let name = match &t.tok {
            Tok::Punct("+") => return Ok(vec![Mode::Index]),
            Tok::Var(v) if v == "_" => return Ok(vec![Mode::Index]),
            Tok::Punct("-") => {
                return Err(Error::UnsupportedMode {
                    line: t.line,
                    col: t.col,
                    mode: "-".into(),
                })
            }
            Tok::Name(n) => n.clone(),
            other => return Err(self.error_at(&t, format!("expected a tabling mode, found {}", describe(other)))),
        };
        match name.as_str() {
            "index" | "nt" => Ok(vec![Mode::Index]),
            "min" => Ok(vec![Mode::Min]),
            "max" => Ok(vec![Mode::Max]),
            "all" => Ok(vec![Mode::All]),
            "first" | "last" | "sum" => Err(Error::UnsupportedMode {
                line: t.line,
                col: t.col,
                mode: name,
            }),
            "lattice" => {
                self.expect(Tok::Punct("("), "`(` after lattice")?;
                let mut modes = Vec::new();
                while self.peek().tok == Tok::Var("_".into()) {
                    self.next();
                    modes.push(Mode::Index);
                    self.expect(Tok::Punct(","), "`,` in lattice(...)")?;
                }
                let join = self.relation_ref(3)?;
                self.expect(Tok::Punct(")"), "`)` closing lattice(...)")?;
                modes.push(Mode::Lattice(join));
                Ok(modes)
            }
            "po" => {
                self.expect(Tok::Punct("("), "`(` after po")?;
                let order = self.relation_ref(2)?;
                self.expect(Tok::Punct(")"), "`)` closing po(...)")?;
                Ok(vec![Mode::Po(order)])
            }
            _ => Err(self.error_at(&t, format!("unknown tabling mode `{name}`"))),
        }
    }

    fn relation_ref(&mut self, arity: i64) -> Result<Name> {
        let t = self.next();
        let Tok::Name(name) = t.tok.clone() else {
            return Err(self.error_at(&t, "expected a relation name"));
        };
        self.expect(Tok::Punct("/"), "`/`")?;
        let a = self.next();
        if a.tok != Tok::Int(arity) {
            return Err(self.error_at(&a, format!("relation {name} must have arity {arity}")));
        }
        Ok(Arc::from(name.as_str()))
    }

    fn clause(&mut self) -> Result<Clause> {
        self.fresh = 0;
        let at = self.peek().clone();
        let head = match self.expr()? {
            Pattern::Symbol(pred) => CallPattern { pred, args: vec![] },
            Pattern::Compound(pred, args) if !is_arith(&pred, args.len()) => CallPattern { pred, args },
            other => return Err(self.error_at(&at, format!("`{other}` cannot be a clause head"))),
        };
        let mut body = Vec::new();
        if self.eat(":-") {
            loop {
                body.push(self.literal()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(Tok::End, "`.` at end of clause")?;
        Ok(Clause { head, body })
    }

    fn literal(&mut self) -> Result<Literal> {
        let at = self.peek().clone();
        let lhs = self.expr()?;
        let op = match &self.peek().tok {
            Tok::Name(n) if n == "is" => Some(BuiltinOp::Is),
            Tok::Punct("=") => Some(BuiltinOp::Eq),
            Tok::Punct("<") => Some(BuiltinOp::Lt),
            Tok::Punct("=<") => Some(BuiltinOp::Le),
            Tok::Punct(">") => Some(BuiltinOp::Gt),
            Tok::Punct(">=") => Some(BuiltinOp::Ge),
            _ => None,
        };
        if let Some(op) = op {
            self.next();
            let rhs = self.expr()?;
            return Ok(Literal::Builtin { op, lhs, rhs });
        }
        match lhs {
            Pattern::Symbol(pred) => Ok(Literal::Call(CallPattern { pred, args: vec![] })),
            Pattern::Compound(pred, args) if !is_arith(&pred, args.len()) => {
                Ok(Literal::Call(CallPattern { pred, args }))
            }
            other => Err(self.error_at(&at, format!("`{other}` is not a goal"))),
        }
    }

    fn expr(&mut self) -> Result<Pattern> {
        let mut left = self.product()?;
        loop {
            let op = if self.eat("+") {
                "+"
            } else if self.eat("-") {
                "-"
            } else {
                return Ok(left);
            };
            let right = self.product()?;
            left = Pattern::compound(op, vec![left, right]);
        }
    }

    fn product(&mut self) -> Result<Pattern> {
        let mut left = self.unary()?;
        while self.eat("*") {
            let right = self.unary()?;
            left = Pattern::compound("*", vec![left, right]);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Pattern> {
        if self.eat("-") {
            if let Tok::Int(i) = self.peek().tok {
                self.next();
                return Ok(Pattern::Int(-i));
            }
            let inner = self.unary()?;
            return Ok(Pattern::compound("-", vec![inner]));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Pattern> {
        let t = self.next();
        match t.tok.clone() {
            Tok::Int(i) => Ok(Pattern::Int(i)),
            Tok::Var(v) if v == "_" => {
                self.fresh += 1;
                Ok(Pattern::var(&format!("_G{}", self.fresh)))
            }
            Tok::Var(v) => Ok(Pattern::var(&v)),
            Tok::Name(name) => {
                if self.eat("(") {
                    let args = self.args(")")?;
                    Ok(Pattern::compound(&name, args))
                } else {
                    Ok(Pattern::symbol(&name))
                }
            }
            Tok::Punct("(") => {
                let inner = self.expr()?;
                self.expect(Tok::Punct(")"), "`)`")?;
                Ok(inner)
            }
            Tok::Punct("[") => {
                if self.eat("]") {
                    return Ok(Pattern::List(vec![]));
                }
                let items = self.args("]")?;
                Ok(Pattern::List(items))
            }
            other => Err(self.error_at(&t, format!("unexpected {}", describe(&other)))),
        }
    }

    fn args(&mut self, close: &'static str) -> Result<Vec<Pattern>> {
        let mut args = vec![self.expr()?];
        while self.eat(",") {
            args.push(self.expr()?);
        }
        let t = self.next();
        if t.tok == Tok::Punct("|") {
            return Err(self.error_at(&t, "list tails are not supported"));
        }
        if t.tok != Tok::Punct(close) {
            return Err(self.error_at(&t, format!("expected `{close}`, found {}", describe(&t.tok))));
        }
        Ok(args)
    }
}

fn is_arith(functor: &str, arity: usize) -> bool {
    matches!((functor, arity), ("+" | "-" | "*", 2) | ("-", 1))
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Name(n) => format!("`{n}`"),
        Tok::Var(v) => format!("variable {v}"),
        Tok::Int(i) => format!("integer {i}"),
        Tok::Punct(p) => format!("`{p}`"),
        Tok::End => "`.`".into(),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses and validates a program.
pub fn parse_program(text: &str) -> Result<Program> {
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        fresh: 0,
    };
    parser.program()
}

/// Parses one ground atom, with or without the final period.
pub fn parse_atom(text: &str) -> Result<Atom> {
    let text = text.trim();
    let text = text.strip_suffix('.').unwrap_or(text);
    let program = parse_program(&format!("{text}."))?;
    let not_an_atom = || Error::Parse {
        line: 0,
        col: 0,
        message: format!("`{text}` is not a ground atom"),
    };
    match program.clauses.as_slice() {
        [clause] if clause.is_fact() => {
            let args = clause.head.args.iter().map(Pattern::to_term).collect::<Option<Vec<_>>>();
            Ok(Atom {
                pred: clause.head.pred.clone(),
                args: args.ok_or_else(not_an_atom)?,
            })
        }
        _ => Err(not_an_atom()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::JoinRelation;

    #[test]
    fn single_atoms() {
        let a = parse_atom("p(a, [1,2], f(-3))").unwrap();
        assert_eq!(a.to_string(), "p(a,[1,2],f(-3))");
        assert_eq!(parse_atom("go.").unwrap().to_string(), "go");
        assert!(parse_atom("p(a) :- q(a)").is_err());
        assert!(parse_atom("p(a). q(b)").is_err());
    }

    #[test]
    fn empty_program() {
        let p = parse_program("").unwrap();
        assert!(p.clauses.is_empty() && p.directives.is_empty());
        assert_eq!(parse_program("% only a comment\n").unwrap(), Program::default());
    }

    #[test]
    fn mode_directives() {
        let p = parse_program(
            ":- table p(index,index,min).\n\
             e(1,2). e(2,3). e(1,3).\n\
             p(X,Y,1) :- e(X,Y).\n\
             p(X,Y,D) :- p(X,Z,D1), p(Z,Y,D2), D is D1 + D2.\n",
        )
        .unwrap();
        assert_eq!(p.directives["p"].modes, vec![Mode::Index, Mode::Index, Mode::Min]);
        assert_eq!(p.clauses.len(), 5);
    }

    #[test]
    fn aliases_and_xsb_form() {
        let p = parse_program(
            ":- table p(lattice(_,_,min/3)).\n:- table q(+,_,nt,max), e/2.\nmin(X,Y,Z) :- Z is min(X,Y).\n",
        )
        .unwrap();
        assert_eq!(
            p.directives["p"].modes,
            vec![Mode::Index, Mode::Index, Mode::Lattice(Arc::from("min"))]
        );
        assert_eq!(p.directives["q"].modes, vec![Mode::Index, Mode::Index, Mode::Index, Mode::Max]);
        assert_eq!(p.directives["e"].modes, vec![Mode::Index; 2]);
        assert_eq!(p.join_relations["min"], JoinRelation::Min);
        assert!(p.clauses.is_empty());
        assert_eq!(p.relation_clauses.len(), 1);
    }

    #[test]
    fn rejected_modes() {
        for mode in ["first", "last", "sum"] {
            let err = parse_program(&format!(":- table p({mode}). p(1).")).unwrap_err();
            assert!(matches!(err, Error::UnsupportedMode { .. }), "{mode}: {err:?}");
        }
        let err = parse_program(":- table p(middle). p(1).").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_program("p(a).\nq(b) :- p(a)\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err = parse_program("p(a) :- .").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, col: 9, .. }), "{err:?}");
    }

    #[test]
    fn range_restriction_and_arity_errors() {
        assert!(matches!(
            parse_program("p(X) :- q(Y).").unwrap_err(),
            Error::RangeRestriction { .. }
        ));
        assert!(matches!(parse_program("p(X).").unwrap_err(), Error::RangeRestriction { .. }));
        assert!(matches!(
            parse_program("p(1). p(1,2).").unwrap_err(),
            Error::Arity { .. }
        ));
        assert!(matches!(
            parse_program(":- table p(index,min). p(1).").unwrap_err(),
            Error::Arity { .. }
        ));
    }

    #[test]
    fn join_relation_from_facts_with_idempotence_schema() {
        let p = parse_program(
            "lub(a,b,c). lub(a,c,c). lub(b,c,c). lub(X,X,X).\n:- table p(lattice(lub/3)).\np(a). p(b).\n",
        )
        .unwrap();
        assert!(matches!(p.join_relations["lub"], JoinRelation::Table(_)));
        assert_eq!(p.clauses.len(), 2);
        assert_eq!(p.relation_clauses.len(), 4);
    }

    #[test]
    fn join_relations_cannot_be_rules_or_calls() {
        assert!(parse_program(":- table p(lattice(j/3)). j(X,Y,Z) :- q(X,Y,Z). p(a).").is_err());
        assert!(parse_program(":- table p(lattice(j/3)). p(a).").is_err());
        assert!(parse_program(":- table p(lattice(j/3)). j(a,b,b). p(a). q(X) :- j(X,X,X).").is_err());
    }

    #[test]
    fn print_then_parse_is_identity() {
        let src = ":- table p(lattice(_,_,min/3)).\n:- table e/3.\n\
                   p(X,Y,1) :- e(X,Y,nt).\n\
                   p(X,Y,D) :- p(X,Z,D1), p(Z,Y,D2), D is D1 + D2.\n\
                   e(a,b,nt). e(b,c,nt). e(a,c,nt).\n\
                   min(X,Y,Z) :- Z is min(X,Y).\n\
                   q(X) :- e(X,_,_), X = 'Odd name', Y is -(3 - 4) * 2, Y >= -2.\n";
        let p = parse_program(src).unwrap();
        let printed = p.to_string();
        assert_eq!(parse_program(&printed).unwrap(), p, "{printed}");
    }
}
