use std::collections::HashSet;
use std::fmt;

use super::ast::{Ast, BinOp, ElseBranch, Expr, Function, LineStmt, Stmt, StmtKind, UnOp};
use super::lexer::{tokenize, Keyword, Token};
use super::source::{LineKind, SourceProgram};

/// Name of the single built-in function.
pub const BUILTIN_LEN: &str = "len";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

impl ParseError {
    fn new(line: usize, reason: impl fmt::Display) -> Self {
        ParseError {
            line,
            reason: reason.to_string(),
        }
    }
}

/// Parses the text of one statement line.
pub fn parse_line(text: &str) -> Result<LineStmt, String> {
    let tokens = tokenize(text)?;
    let mut p = ExprParser { tokens, pos: 0 };
    let stmt = p.statement()?;
    if p.pos != p.tokens.len() {
        return Err(format!("unexpected trailing token {:?}", p.tokens[p.pos]));
    }
    Ok(stmt)
}

/// Parses a whole program. Fails on the first line that is not blank,
/// a comment or one well-formed statement, or whose block structure does
/// not balance.
pub fn parse(program: &SourceProgram) -> Result<Ast, ParseError> {
    let mut cursor = Cursor {
        program,
        next: 1,
        peeked: None,
    };
    let mut functions: Vec<Function> = Vec::new();
    let mut names = HashSet::new();
    while let Some((line, stmt)) = cursor.next_stmt()? {
        let (name, params) = match stmt {
            LineStmt::FnHeader { name, params } => (name, params),
            _ => return Err(ParseError::new(line, "statement outside of a function")),
        };
        if name == BUILTIN_LEN {
            return Err(ParseError::new(line, "`len` is a reserved function name"));
        }
        if !names.insert(name.clone()) {
            return Err(ParseError::new(line, format!("duplicate function `{name}`")));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = params.iter().find(|p| !seen.insert(p.as_str())) {
            return Err(ParseError::new(line, format!("duplicate parameter `{dup}`")));
        }
        let (body, term, end_line) = parse_block(&mut cursor)?;
        if term != Terminator::End {
            return Err(ParseError::new(end_line, "`else` without `if`"));
        }
        functions.push(Function {
            name,
            params,
            line,
            end_line,
            body,
        });
    }
    Ok(Ast { functions })
}

struct Cursor<'a> {
    program: &'a SourceProgram,
    next: usize,
    peeked: Option<(usize, LineStmt)>,
}

impl Cursor<'_> {
    fn next_stmt(&mut self) -> Result<Option<(usize, LineStmt)>, ParseError> {
        if let Some(p) = self.peeked.take() {
            return Ok(Some(p));
        }
        while let Some(text) = self.program.line(self.next) {
            let line = self.next;
            self.next += 1;
            if LineKind::of(text) != LineKind::Code {
                continue;
            }
            let stmt = parse_line(text).map_err(|r| ParseError::new(line, r))?;
            return Ok(Some((line, stmt)));
        }
        Ok(None)
    }

    fn eof_line(&self) -> usize {
        self.program.len().max(1)
    }
}

#[derive(Debug, PartialEq, Eq)]
enum Terminator {
    End,
    Else,
}

fn parse_block(cursor: &mut Cursor<'_>) -> Result<(Vec<Stmt>, Terminator, usize), ParseError> {
    let mut body = Vec::new();
    loop {
        let Some((line, stmt)) = cursor.next_stmt()? else {
            return Err(ParseError::new(
                cursor.eof_line(),
                "unbalanced block: missing `end`",
            ));
        };
        let kind = match stmt {
            LineStmt::End => return Ok((body, Terminator::End, line)),
            LineStmt::Else => return Ok((body, Terminator::Else, line)),
            LineStmt::FnHeader { .. } => {
                return Err(ParseError::new(line, "nested function definition"))
            }
            LineStmt::Let { name, value } => StmtKind::Let { name, value },
            LineStmt::Assign { name, value } => StmtKind::Assign { name, value },
            LineStmt::IndexAssign { name, index, value } => {
                StmtKind::IndexAssign { name, index, value }
            }
            LineStmt::Return(e) => StmtKind::Return(e),
            LineStmt::Print(e) => StmtKind::Print(e),
            LineStmt::While(cond) => {
                let (inner, term, end_line) = parse_block(cursor)?;
                if term != Terminator::End {
                    return Err(ParseError::new(end_line, "`else` without `if`"));
                }
                StmtKind::While {
                    cond,
                    body: inner,
                    end_line,
                }
            }
            LineStmt::If(cond) => {
                let (then_body, term, term_line) = parse_block(cursor)?;
                let (else_branch, end_line) = match term {
                    Terminator::End => (None, term_line),
                    Terminator::Else => {
                        let (else_body, term2, end_line) = parse_block(cursor)?;
                        if term2 != Terminator::End {
                            return Err(ParseError::new(end_line, "`else` without `if`"));
                        }
                        (
                            Some(ElseBranch {
                                line: term_line,
                                body: else_body,
                            }),
                            end_line,
                        )
                    }
                };
                StmtKind::If {
                    cond,
                    then_body,
                    else_branch,
                    end_line,
                }
            }
        };
        body.push(Stmt { line, kind });
    }
}

struct ExprParser {
    tokens: Vec<Token>,
    pos: usize,
}

impl ExprParser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&Token> {
        self.tokens.get(self.pos + offset)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: &Token, what: &str) -> Result<(), String> {
        match self.bump() {
            Some(ref t) if t == want => Ok(()),
            Some(t) => Err(format!("expected {what}, found {t:?}")),
            None => Err(format!("expected {what}, found end of line")),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, String> {
        match self.bump() {
            Some(Token::Ident(s)) => Ok(s),
            Some(t) => Err(format!("expected {what}, found {t:?}")),
            None => Err(format!("expected {what}, found end of line")),
        }
    }

    fn statement(&mut self) -> Result<LineStmt, String> {
        match self.peek().cloned() {
            Some(Token::Keyword(kw)) => {
                self.pos += 1;
                match kw {
                    Keyword::Fn => {
                        let name = self.ident("function name")?;
                        self.expect(&Token::LParen, "`(`")?;
                        let mut params = Vec::new();
                        if self.peek() != Some(&Token::RParen) {
                            loop {
                                params.push(self.ident("parameter name")?);
                                if self.peek() == Some(&Token::Comma) {
                                    self.pos += 1;
                                } else {
                                    break;
                                }
                            }
                        }
                        self.expect(&Token::RParen, "`)`")?;
                        Ok(LineStmt::FnHeader { name, params })
                    }
                    Keyword::Let => {
                        let name = self.ident("variable name")?;
                        self.expect(&Token::Assign, "`=`")?;
                        Ok(LineStmt::Let {
                            name,
                            value: self.expr()?,
                        })
                    }
                    Keyword::If => Ok(LineStmt::If(self.expr()?)),
                    Keyword::While => Ok(LineStmt::While(self.expr()?)),
                    Keyword::Return => Ok(LineStmt::Return(self.expr()?)),
                    Keyword::Print => Ok(LineStmt::Print(self.expr()?)),
                    Keyword::Else => Ok(LineStmt::Else),
                    Keyword::End => Ok(LineStmt::End),
                    other => Err(format!("`{other:?}` cannot start a statement")),
                }
            }
            Some(Token::Ident(name)) => match self.peek_at(1) {
                Some(Token::Assign) => {
                    self.pos += 2;
                    Ok(LineStmt::Assign {
                        name,
                        value: self.expr()?,
                    })
                }
                Some(Token::LBracket) => {
                    self.pos += 2;
                    let index = self.expr()?;
                    self.expect(&Token::RBracket, "`]`")?;
                    self.expect(&Token::Assign, "`=`")?;
                    Ok(LineStmt::IndexAssign {
                        name,
                        index,
                        value: self.expr()?,
                    })
                }
                _ => Err("expression is not a statement".to_string()),
            },
            Some(t) => Err(format!("unexpected token {t:?} at start of statement")),
            None => Err("empty statement".to_string()),
        }
    }

    fn expr(&mut self) -> Result<Expr, String> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek()? {
            Token::Keyword(Keyword::Or) => BinOp::Or,
            Token::Keyword(Keyword::And) => BinOp::And,
            Token::Eq => BinOp::Eq,
            Token::Ne => BinOp::Ne,
            Token::Lt => BinOp::Lt,
            Token::Le => BinOp::Le,
            Token::Gt => BinOp::Gt,
            Token::Ge => BinOp::Ge,
            Token::Plus => BinOp::Add,
            Token::Minus => BinOp::Sub,
            Token::Star => BinOp::Mul,
            Token::Slash => BinOp::Div,
            Token::Percent => BinOp::Rem,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, String> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.pos += 1;
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, String> {
        match self.peek() {
            Some(Token::Minus) => {
                self.pos += 1;
                Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)))
            }
            Some(Token::Keyword(Keyword::Not)) => {
                self.pos += 1;
                Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)))
            }
            _ => self.postfix(),
        }
    }

    fn postfix(&mut self) -> Result<Expr, String> {
        let mut e = self.primary()?;
        while self.peek() == Some(&Token::LBracket) {
            self.pos += 1;
            let idx = self.expr()?;
            self.expect(&Token::RBracket, "`]`")?;
            e = Expr::Index(Box::new(e), Box::new(idx));
        }
        Ok(e)
    }

    fn list(&mut self, close: &Token, what: &str) -> Result<Vec<Expr>, String> {
        let mut items = Vec::new();
        if self.peek() != Some(close) {
            loop {
                items.push(self.expr()?);
                if self.peek() == Some(&Token::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(close, what)?;
        Ok(items)
    }

    fn primary(&mut self) -> Result<Expr, String> {
        match self.bump() {
            Some(Token::Int(i)) => Ok(Expr::Int(i)),
            Some(Token::Float(x)) => Ok(Expr::Float(x)),
            Some(Token::Str(s)) => Ok(Expr::Str(s)),
            Some(Token::Keyword(Keyword::True)) => Ok(Expr::Bool(true)),
            Some(Token::Keyword(Keyword::False)) => Ok(Expr::Bool(false)),
            Some(Token::LParen) => {
                let e = self.expr()?;
                self.expect(&Token::RParen, "`)`")?;
                Ok(e)
            }
            Some(Token::LBracket) => Ok(Expr::Array(self.list(&Token::RBracket, "`]`")?)),
            Some(Token::Ident(name)) => {
                if self.peek() == Some(&Token::LParen) {
                    self.pos += 1;
                    Ok(Expr::Call(name, self.list(&Token::RParen, "`)`")?))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Some(t) => Err(format!("unexpected token {t:?} in expression")),
            None => Err("expected expression, found end of line".to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prog(lines: &[&str]) -> SourceProgram {
        SourceProgram::new("t", lines.iter().copied())
    }

    #[test]
    fn minimal_program_has_one_function() {
        let ast = parse(&prog(&["fn main()", "return 1", "end"])).unwrap();
        assert_eq!(ast.functions.len(), 1);
        assert_eq!(ast.functions[0].name, "main");
        assert_eq!(ast.functions[0].end_line, 3);
    }

    #[test]
    fn missing_end_is_reported_at_end_of_file() {
        let err = parse(&prog(&["fn main()", "return 1"])).unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.reason.contains("unbalanced"), "{}", err.reason);
    }

    #[test]
    fn structural_errors() {
        let cases: &[(&[&str], usize)] = &[
            (&["return 1"], 1),
            (&["fn f()", "end", "end"], 3),
            (&["fn f()", "else", "end"], 2),
            (&["fn f()", "fn g()", "end", "end"], 2),
            (&["fn f()", "if true", "else", "else", "end", "end"], 4),
            (&["fn f()", "end", "fn f()", "end"], 3),
            (&["fn f(a, a)", "end"], 1),
            (&["fn len(a)", "end"], 1),
            (&["fn f()", "g(1)", "end"], 2),
            (&["fn f()", "let = 3", "end"], 2),
            (&["fn f()", "return 1 +", "end"], 2),
        ];
        for (lines, line) in cases {
            let err = parse(&prog(lines)).unwrap_err();
            assert_eq!(err.line, *line, "{lines:?}: {err}");
        }
    }

    #[test]
    fn first_offending_line_wins() {
        // line 2 is malformed; line 4 has a stray `end`
        let err = parse(&prog(&["fn f()", "let x = (", "end", "end"])).unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn expression_precedence() {
        let stmt = parse_line("return a + b * c < d and not e or f").unwrap();
        assert_eq!(
            stmt.to_string(),
            "return a + b * c < d and not e or f"
        );
        let LineStmt::Return(e) = stmt else { panic!() };
        let Expr::Binary(BinOp::Or, lhs, _) = e else { panic!("{e:?}") };
        assert!(matches!(*lhs, Expr::Binary(BinOp::And, ..)));
    }

    #[test]
    fn statement_forms() {
        assert!(matches!(parse_line("x = 1"), Ok(LineStmt::Assign { .. })));
        assert!(matches!(
            parse_line("xs[i + 1] = xs[i]"),
            Ok(LineStmt::IndexAssign { .. })
        ));
        assert!(matches!(parse_line("print [1, 2.5, \"s\", true]"), Ok(LineStmt::Print(_))));
        assert!(matches!(parse_line("let n = len(xs)"), Ok(LineStmt::Let { .. })));
        assert!(parse_line("else x").is_err());
        assert!(parse_line("x").is_err());
    }

    #[test]
    fn printed_statements_reparse_identically() {
        for text in [
            "if a < b",
            "let y = -x * (a - (b - c))",
            "return xs[i - 1] % 3",
            "print not (a == b) or c",
            "m[0] = f(a, [1, 2], \"q\\\"\")",
            "let z = -1.5e-7 + 2.0",
        ] {
            let stmt = parse_line(text).unwrap();
            let again = parse_line(&stmt.to_string()).unwrap();
            assert_eq!(stmt, again, "{text}");
        }
    }
}
