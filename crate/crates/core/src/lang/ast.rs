use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl BinOp {
    pub const RELATIONAL: [BinOp; 6] = [
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::Eq,
        BinOp::Ne,
    ];
    pub const ARITHMETIC: [BinOp; 5] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Rem];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "or",
            BinOp::And => "and",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
        }
    }

    /// Binding strength; higher binds tighter. All binary operators are
    /// left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 5,
        }
    }

    pub fn is_relational(self) -> bool {
        Self::RELATIONAL.contains(&self)
    }

    pub fn is_arithmetic(self) -> bool {
        Self::ARITHMETIC.contains(&self)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }
}

const UNARY_PRECEDENCE: u8 = 6;
const POSTFIX_PRECEDENCE: u8 = 7;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    Array(Vec<Expr>),
    Var(String),
    Index(Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Unary(..) => UNARY_PRECEDENCE,
            Expr::Int(i) if *i < 0 => UNARY_PRECEDENCE,
            Expr::Float(x) if x.is_sign_negative() => UNARY_PRECEDENCE,
            _ => POSTFIX_PRECEDENCE + 1,
        }
    }

    /// Child expressions, left to right.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Array(items) | Expr::Call(_, items) => items.iter().collect(),
            Expr::Index(a, b) | Expr::Binary(_, a, b) => vec![a, b],
            Expr::Unary(_, e) => vec![e],
            _ => Vec::new(),
        }
    }

    fn children_mut(&mut self) -> Vec<&mut Expr> {
        match self {
            Expr::Array(items) | Expr::Call(_, items) => items.iter_mut().collect(),
            Expr::Index(a, b) | Expr::Binary(_, a, b) => vec![a, b],
            Expr::Unary(_, e) => vec![e],
            _ => Vec::new(),
        }
    }

    /// Every node in source order of its defining token: a binary or index
    /// node comes after its left operand, a prefix node before its operands.
    /// Each entry is the child-index path from `self`.
    pub fn sites(&self) -> Vec<(Vec<usize>, &Expr)> {
        fn walk<'a>(e: &'a Expr, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, &'a Expr)>) {
            let infix = matches!(e, Expr::Binary(..) | Expr::Index(..));
            let children = e.children();
            if !infix {
                out.push((path.clone(), e));
            }
            for (i, c) in children.into_iter().enumerate() {
                path.push(i);
                walk(c, path, out);
                path.pop();
                if infix && i == 0 {
                    out.push((path.clone(), e));
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn at(&self, path: &[usize]) -> Option<&Expr> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => self.children().get(i).and_then(|c| c.at(rest)),
        }
    }

    /// A copy with the node at `path` replaced by `replacement`.
    pub fn replaced(&self, path: &[usize], replacement: Expr) -> Expr {
        let mut out = self.clone();
        let mut node = &mut out;
        for &i in path {
            node = node
                .children_mut()
                .into_iter()
                .nth(i)
                .expect("path within expression");
        }
        *node = replacement;
        out
    }

    /// Variables read by this expression, in source order.
    pub fn variables(&self) -> Vec<&str> {
        self.sites()
            .into_iter()
            .filter_map(|(_, e)| match e {
                Expr::Var(v) => Some(v.as_str()),
                _ => None,
            })
            .collect()
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

fn fmt_float(x: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let s = format!("{x:?}");
    // `{:?}` yields forms like `1.0`, `1e300` and `1.5e-7`, all of which the
    // lexer accepts.
    write!(f, "{s}")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(i) => write!(f, "{i}"),
            Expr::Float(x) => fmt_float(*x, f),
            Expr::Str(s) => {
                write!(f, "\"")?;
                for c in s.chars() {
                    match c {
                        '"' => write!(f, "\\\"")?,
                        '\\' => write!(f, "\\\\")?,
                        '\n' => write!(f, "\\n")?,
                        '\t' => write!(f, "\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                write!(f, "\"")
            }
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Array(items) => {
                write!(f, "[")?;
                write_list(f, items)?;
                write!(f, "]")
            }
            Expr::Call(name, args) => {
                write!(f, "{name}(")?;
                write_list(f, args)?;
                write!(f, ")")
            }
            Expr::Index(base, idx) => {
                base.fmt_child(f, POSTFIX_PRECEDENCE + 1)?;
                write!(f, "[{idx}]")
            }
            Expr::Unary(op, e) => {
                match op {
                    UnOp::Neg => write!(f, "-")?,
                    UnOp::Not => write!(f, "not ")?,
                }
                e.fmt_child(f, UNARY_PRECEDENCE)
            }
            Expr::Binary(op, lhs, rhs) => {
                let p = op.precedence();
                lhs.fmt_child(f, p)?;
                write!(f, " {} ", op.symbol())?;
                rhs.fmt_child(f, p + 1)
            }
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, items: &[Expr]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

/// One parsed source line, before block structure is assembled.
#[derive(Debug, Clone, PartialEq)]
pub enum LineStmt {
    FnHeader { name: String, params: Vec<String> },
    Let { name: String, value: Expr },
    Assign { name: String, value: Expr },
    IndexAssign { name: String, index: Expr, value: Expr },
    If(Expr),
    Else,
    While(Expr),
    Return(Expr),
    Print(Expr),
    End,
}

impl LineStmt {
    /// Statements that open, continue or close a block.
    pub fn is_structural(&self) -> bool {
        matches!(
            self,
            LineStmt::FnHeader { .. } | LineStmt::Else | LineStmt::End
        )
    }

    /// The expressions on this line, in source order.
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            LineStmt::Let { value, .. } | LineStmt::Assign { value, .. } => vec![value],
            LineStmt::IndexAssign { index, value, .. } => vec![index, value],
            LineStmt::If(e) | LineStmt::While(e) | LineStmt::Return(e) | LineStmt::Print(e) => {
                vec![e]
            }
            _ => Vec::new(),
        }
    }

    /// A copy with the `slot`-th expression (see [`LineStmt::exprs`]) replaced.
    pub fn with_expr(&self, slot: usize, expr: Expr) -> LineStmt {
        let mut out = self.clone();
        match (&mut out, slot) {
            (LineStmt::Let { value, .. }, 0) | (LineStmt::Assign { value, .. }, 0) => *value = expr,
            (LineStmt::IndexAssign { index, .. }, 0) => *index = expr,
            (LineStmt::IndexAssign { value, .. }, 1) => *value = expr,
            (LineStmt::If(e), 0)
            | (LineStmt::While(e), 0)
            | (LineStmt::Return(e), 0)
            | (LineStmt::Print(e), 0) => *e = expr,
            _ => panic!("no expression slot {slot} in {self}"),
        }
        out
    }
}

impl fmt::Display for LineStmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LineStmt::FnHeader { name, params } => write!(f, "fn {name}({})", params.join(", ")),
            LineStmt::Let { name, value } => write!(f, "let {name} = {value}"),
            LineStmt::Assign { name, value } => write!(f, "{name} = {value}"),
            LineStmt::IndexAssign { name, index, value } => {
                write!(f, "{name}[{index}] = {value}")
            }
            LineStmt::If(e) => write!(f, "if {e}"),
            LineStmt::Else => write!(f, "else"),
            LineStmt::While(e) => write!(f, "while {e}"),
            LineStmt::Return(e) => write!(f, "return {e}"),
            LineStmt::Print(e) => write!(f, "print {e}"),
            LineStmt::End => write!(f, "end"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub line: usize,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Let {
        name: String,
        value: Expr,
    },
    Assign {
        name: String,
        value: Expr,
    },
    IndexAssign {
        name: String,
        index: Expr,
        value: Expr,
    },
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_branch: Option<ElseBranch>,
        end_line: usize,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
        end_line: usize,
    },
    Return(Expr),
    Print(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElseBranch {
    pub line: usize,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub name: String,
    pub params: Vec<String>,
    pub line: usize,
    pub end_line: usize,
    pub body: Vec<Stmt>,
}

impl Function {
    pub fn contains_line(&self, line: usize) -> bool {
        (self.line..=self.end_line).contains(&line)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ast {
    pub functions: Vec<Function>,
}

impl Ast {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_at_line(&self, line: usize) -> Option<&Function> {
        self.functions.iter().find(|f| f.contains_line(line))
    }

    /// Lines carrying any statement, including `fn`, `else` and `end`.
    pub fn statement_lines(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for f in &self.functions {
            out.insert(f.line);
            out.insert(f.end_line);
            collect_lines(&f.body, &mut out, true);
        }
        out
    }

    /// Lines whose statement can execute and so can appear in coverage.
    pub fn executable_lines(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for f in &self.functions {
            collect_lines(&f.body, &mut out, false);
        }
        out
    }
}

fn collect_lines(body: &[Stmt], out: &mut BTreeSet<usize>, structural: bool) {
    for s in body {
        out.insert(s.line);
        match &s.kind {
            StmtKind::If {
                then_body,
                else_branch,
                end_line,
                ..
            } => {
                collect_lines(then_body, out, structural);
                if let Some(e) = else_branch {
                    if structural {
                        out.insert(e.line);
                    }
                    collect_lines(&e.body, out, structural);
                }
                if structural {
                    out.insert(*end_line);
                }
            }
            StmtKind::While { body, end_line, .. } => {
                collect_lines(body, out, structural);
                if structural {
                    out.insert(*end_line);
                }
            }
            _ => {}
        }
    }
}
