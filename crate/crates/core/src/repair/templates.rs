//! The fix-template catalog.
//!
//! Templates are tried in catalog order T1..T9; inside a template, sites
//! are visited in source order of their operator and replacements in the
//! order listed for each template. NPC depends on this order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lang::{parse, parse_line, Ast, BinOp, Expr, LineKind, LineStmt, SourceProgram, UnOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TemplateId {
    /// T1: replace a relational operator with each other one.
    RelationalOperator,
    /// T2: replace an arithmetic operator with each other one.
    ArithmeticOperator,
    /// T3: swap `and`/`or`; negate an `if`/`while` condition.
    BooleanOperator,
    /// T4: integer constant `c` becomes `c+1`, `c-1`, `0`, `-c`.
    ConstantMutation,
    /// T5: index `i` becomes `i + 1`, `i - 1`.
    IndexOffByOne,
    /// T6: delete a non-structural statement.
    StatementDeletion,
    /// T7: return another in-scope variable.
    ReturnSubstitution,
    /// T8: wrap the statement in a divisor or bounds guard.
    GuardInsertion,
    /// T9: replace one variable use with another in-scope variable.
    VariableSubstitution,
}

impl TemplateId {
    pub const CATALOG: [TemplateId; 9] = [
        TemplateId::RelationalOperator,
        TemplateId::ArithmeticOperator,
        TemplateId::BooleanOperator,
        TemplateId::ConstantMutation,
        TemplateId::IndexOffByOne,
        TemplateId::StatementDeletion,
        TemplateId::ReturnSubstitution,
        TemplateId::GuardInsertion,
        TemplateId::VariableSubstitution,
    ];

    pub fn code(self) -> &'static str {
        match self {
            TemplateId::RelationalOperator => "T1",
            TemplateId::ArithmeticOperator => "T2",
            TemplateId::BooleanOperator => "T3",
            TemplateId::ConstantMutation => "T4",
            TemplateId::IndexOffByOne => "T5",
            TemplateId::StatementDeletion => "T6",
            TemplateId::ReturnSubstitution => "T7",
            TemplateId::GuardInsertion => "T8",
            TemplateId::VariableSubstitution => "T9",
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// A single-location edit. Line texts include indentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Edit {
    ReplaceLine(String),
    DeleteLine,
    /// Insert `guard` before the target line and a matching `end` after it.
    InsertGuard { guard: String, end: String },
}

impl Edit {
    /// Applies the edit at 1-based `line`.
    pub fn apply(&self, program: &SourceProgram, line: usize) -> SourceProgram {
        let mut out = program.clone();
        let lines = out.lines_mut();
        let i = line - 1;
        match self {
            Edit::ReplaceLine(text) => lines[i] = text.clone(),
            Edit::DeleteLine => {
                lines.remove(i);
            }
            Edit::InsertGuard { guard, end } => {
                lines.insert(i + 1, end.clone());
                lines.insert(i, guard.clone());
            }
        }
        out
    }

    /// The new text the edit introduces at its location.
    pub fn new_text(&self) -> &str {
        match self {
            Edit::ReplaceLine(t) => t,
            Edit::DeleteLine => "",
            Edit::InsertGuard { guard, .. } => guard,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instantiation {
    pub template: TemplateId,
    pub edit: Edit,
}

/// All template instantiations at `line`, in catalog order.
pub fn applicable_templates(program: &SourceProgram, line: usize) -> Vec<Instantiation> {
    match parse(program) {
        Ok(ast) => instantiate(&ast, program, line),
        Err(_) => Vec::new(),
    }
}

pub(crate) fn instantiate(ast: &Ast, program: &SourceProgram, line: usize) -> Vec<Instantiation> {
    let Some(text) = program.line(line) else {
        return Vec::new();
    };
    if LineKind::of(text) != LineKind::Code {
        return Vec::new();
    }
    let Ok(stmt) = parse_line(text) else {
        return Vec::new();
    };
    if stmt.is_structural() {
        return Vec::new();
    }
    let indent: String = text.chars().take_while(|c| c.is_whitespace()).collect();
    let scope = scope_at(ast, program, line);
    let site = StmtSites::new(&stmt);
    let mut out = Vec::new();
    let mut push = |template: TemplateId, edit: Edit| out.push(Instantiation { template, edit });
    let replace = |s: LineStmt| Edit::ReplaceLine(format!("{indent}{s}"));

    // T1, T2
    for (ops, template) in [
        (&BinOp::RELATIONAL[..], TemplateId::RelationalOperator),
        (&BinOp::ARITHMETIC[..], TemplateId::ArithmeticOperator),
    ] {
        for (slot, path, node) in &site.sites {
            if let Expr::Binary(op, l, r) = node {
                if !ops.contains(op) {
                    continue;
                }
                for alt in ops.iter().filter(|a| *a != op) {
                    let new = Expr::Binary(*alt, l.clone(), r.clone());
                    push(template, replace(site.rewrite(*slot, path, new)));
                }
            }
        }
    }

    // T3
    for (slot, path, node) in &site.sites {
        if let Expr::Binary(op, l, r) = node {
            let alt = match op {
                BinOp::And => BinOp::Or,
                BinOp::Or => BinOp::And,
                _ => continue,
            };
            let new = Expr::Binary(alt, l.clone(), r.clone());
            push(TemplateId::BooleanOperator, replace(site.rewrite(*slot, path, new)));
        }
    }
    if let LineStmt::If(cond) | LineStmt::While(cond) = &stmt {
        let negated = match cond {
            Expr::Unary(UnOp::Not, inner) => (**inner).clone(),
            c => Expr::Unary(UnOp::Not, Box::new(c.clone())),
        };
        push(TemplateId::BooleanOperator, replace(stmt.with_expr(0, negated)));
    }

    // T4
    for (slot, path, node) in &site.sites {
        if let Expr::Int(c) = node {
            let mut seen = vec![*c];
            for alt in [c.wrapping_add(1), c.wrapping_sub(1), 0, c.wrapping_neg()] {
                if seen.contains(&alt) {
                    continue;
                }
                seen.push(alt);
                push(
                    TemplateId::ConstantMutation,
                    replace(site.rewrite(*slot, path, Expr::Int(alt))),
                );
            }
        }
    }

    // T5
    let shifted = |e: &Expr| {
        [BinOp::Add, BinOp::Sub].map(|op| Expr::binary(op, e.clone(), Expr::Int(1)))
    };
    if let LineStmt::IndexAssign { index, .. } = &stmt {
        for new in shifted(index) {
            push(TemplateId::IndexOffByOne, replace(stmt.with_expr(0, new)));
        }
    }
    for (slot, path, node) in &site.sites {
        if let Expr::Index(base, idx) = node {
            for new_idx in shifted(idx) {
                let new = Expr::Index(base.clone(), Box::new(new_idx));
                push(TemplateId::IndexOffByOne, replace(site.rewrite(*slot, path, new)));
            }
        }
    }

    // T6
    if matches!(
        stmt,
        LineStmt::Let { .. } | LineStmt::Assign { .. } | LineStmt::IndexAssign { .. } | LineStmt::Print(_)
    ) {
        push(TemplateId::StatementDeletion, Edit::DeleteLine);
    }

    // T7
    if let LineStmt::Return(e) = &stmt {
        for v in &scope {
            if *e != Expr::Var(v.clone()) {
                push(
                    TemplateId::ReturnSubstitution,
                    replace(LineStmt::Return(Expr::Var(v.clone()))),
                );
            }
        }
    }

    // T8
    if !matches!(stmt, LineStmt::If(_) | LineStmt::While(_)) {
        let mut guards: Vec<Expr> = Vec::new();
        if let LineStmt::IndexAssign { name, index, .. } = &stmt {
            guards.push(bounds_guard(&Expr::Var(name.clone()), index));
        }
        for (_, _, node) in &site.sites {
            match node {
                Expr::Binary(BinOp::Div | BinOp::Rem, _, d) => {
                    guards.push(Expr::binary(BinOp::Ne, (**d).clone(), Expr::Int(0)))
                }
                Expr::Index(base, idx) => guards.push(bounds_guard(base, idx)),
                _ => {}
            }
        }
        let mut seen: Vec<&Expr> = Vec::new();
        for g in &guards {
            if seen.contains(&g) {
                continue;
            }
            seen.push(g);
            push(
                TemplateId::GuardInsertion,
                Edit::InsertGuard {
                    guard: format!("{indent}{}", LineStmt::If(g.clone())),
                    end: format!("{indent}end"),
                },
            );
        }
    }

    // T9
    for (slot, path, node) in &site.sites {
        if let Expr::Var(name) = node {
            for v in scope.iter().filter(|v| *v != name) {
                push(
                    TemplateId::VariableSubstitution,
                    replace(site.rewrite(*slot, path, Expr::Var(v.clone()))),
                );
            }
        }
    }

    out
}

fn bounds_guard(base: &Expr, idx: &Expr) -> Expr {
    Expr::binary(
        BinOp::And,
        Expr::binary(BinOp::Ge, idx.clone(), Expr::Int(0)),
        Expr::binary(
            BinOp::Lt,
            idx.clone(),
            Expr::Call(crate::lang::BUILTIN_LEN.to_string(), vec![base.clone()]),
        ),
    )
}

/// Variables visible at `line`: the enclosing function's parameters, then
/// names bound by `let` or assignment on earlier lines of that function, in
/// order of first appearance.
pub fn scope_at(ast: &Ast, program: &SourceProgram, line: usize) -> Vec<String> {
    let Some(f) = ast.function_at_line(line) else {
        return Vec::new();
    };
    let mut scope = f.params.clone();
    for l in f.line + 1..line {
        let Some(text) = program.line(l) else { continue };
        if LineKind::of(text) != LineKind::Code {
            continue;
        }
        if let Ok(LineStmt::Let { name, .. } | LineStmt::Assign { name, .. }) = parse_line(text) {
            if !scope.contains(&name) {
                scope.push(name);
            }
        }
    }
    scope
}

/// Every expression node of a statement, in source order across its
/// expression slots.
struct StmtSites<'a> {
    stmt: &'a LineStmt,
    sites: Vec<(usize, Vec<usize>, Expr)>,
}

impl<'a> StmtSites<'a> {
    fn new(stmt: &'a LineStmt) -> Self {
        let sites = stmt
            .exprs()
            .into_iter()
            .enumerate()
            .flat_map(|(slot, e)| {
                e.sites()
                    .into_iter()
                    .map(move |(path, node)| (slot, path, node.clone()))
            })
            .collect();
        StmtSites { stmt, sites }
    }

    fn rewrite(&self, slot: usize, path: &[usize], new: Expr) -> LineStmt {
        let expr = self.stmt.exprs()[slot].replaced(path, new);
        self.stmt.with_expr(slot, expr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(program: &SourceProgram, line: usize, template: TemplateId) -> Vec<String> {
        applicable_templates(program, line)
            .into_iter()
            .filter(|i| i.template == template)
            .map(|i| match i.edit {
                Edit::ReplaceLine(t) => t.trim().to_string(),
                Edit::DeleteLine => "<delete>".to_string(),
                Edit::InsertGuard { guard, .. } => guard.trim().to_string(),
            })
            .collect()
    }

    fn program(lines: &[&str]) -> SourceProgram {
        SourceProgram::new("p", lines.iter().copied())
    }

    #[test]
    fn relational_and_negation() {
        let p = program(&["fn f(a, b)", "  if a < b", "    return 1", "  end", "  return 0", "end"]);
        assert_eq!(
            texts(&p, 2, TemplateId::RelationalOperator),
            ["if a <= b", "if a > b", "if a >= b", "if a == b", "if a != b"]
        );
        assert_eq!(texts(&p, 2, TemplateId::BooleanOperator), ["if not (a < b)"]);
        // indentation is preserved
        match &applicable_templates(&p, 2)[0].edit {
            Edit::ReplaceLine(t) => assert_eq!(t, "  if a <= b"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn return_substitution_uses_scope_order() {
        let p = program(&["fn f(x, y)", "let z = x + y", "return x", "end"]);
        assert_eq!(texts(&p, 3, TemplateId::ReturnSubstitution), ["return y", "return z"]);
    }

    #[test]
    fn structural_and_comment_lines_have_no_templates() {
        let p = program(&["fn f(x)", "# note", "if x > 0", "x = 1", "else", "x = 2", "end", "return x", "end"]);
        for line in [1, 2, 5, 7, 9] {
            assert!(applicable_templates(&p, line).is_empty(), "line {line}");
        }
    }

    #[test]
    fn constants_indices_and_guards() {
        let p = program(&["fn f(xs, i, d)", "let v = xs[i] / d + 1", "return v", "end"]);
        assert_eq!(texts(&p, 2, TemplateId::ConstantMutation), ["let v = xs[i] / d + 2", "let v = xs[i] / d + 0", "let v = xs[i] / d + -1"]);
        assert_eq!(texts(&p, 2, TemplateId::IndexOffByOne), ["let v = xs[i + 1] / d + 1", "let v = xs[i - 1] / d + 1"]);
        assert_eq!(
            texts(&p, 2, TemplateId::GuardInsertion),
            ["if i >= 0 and i < len(xs)", "if d != 0"]
        );
        assert_eq!(texts(&p, 2, TemplateId::StatementDeletion), ["<delete>"]);
    }

    #[test]
    fn guard_edit_wraps_the_line() {
        let p = program(&["fn f(a, b)", "  return a / b", "end"]);
        let inst = applicable_templates(&p, 2)
            .into_iter()
            .find(|i| i.template == TemplateId::GuardInsertion)
            .unwrap();
        let patched = inst.edit.apply(&p, 2);
        assert_eq!(
            patched.lines(),
            ["fn f(a, b)", "  if b != 0", "  return a / b", "  end", "end"]
        );
    }

    #[test]
    fn catalog_order_is_fixed() {
        let p = program(&["fn f(a, b)", "let c = a < b and a - 1 > 0", "return c", "end"]);
        let order: Vec<TemplateId> = applicable_templates(&p, 2).iter().map(|i| i.template).collect();
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(order, sorted);
        assert!(order.contains(&TemplateId::VariableSubstitution));
    }
}
