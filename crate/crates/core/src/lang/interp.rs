use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::{Ast, BinOp, Expr, Function, Stmt, StmtKind, UnOp};
use super::parser::BUILTIN_LEN;
use super::value::Value;

pub const DEFAULT_STEP_BUDGET: u64 = 100_000;

/// Nested call frames allowed before execution stops. Exceeding it is
/// reported as [`Status::StepBudgetExceeded`].
pub const MAX_CALL_DEPTH: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ErrorKind {
    DivByZero,
    IndexOutOfBounds,
    UndefinedVariable,
    TypeError,
    ArityMismatch,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuntimeError {
    pub kind: ErrorKind,
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Completed(Value),
    RuntimeError(RuntimeError),
    StepBudgetExceeded,
}

/// The entry call of an execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Call {
    #[serde(rename = "fn")]
    pub function: String,
    pub args: Vec<Value>,
}

impl Call {
    pub fn new(function: impl Into<String>, args: impl IntoIterator<Item = Value>) -> Self {
        Call {
            function: function.into(),
            args: args.into_iter().collect(),
        }
    }
}

/// Observation point: the value of `variable` immediately before each
/// execution of `line`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Watch {
    pub variable: String,
    pub line: usize,
}

/// Values observed at a [`Watch`], in execution order. `None` marks an
/// execution of the line where the variable was not yet bound.
pub type ObservationTrace = Vec<Option<Value>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub status: Status,
    pub output: Vec<Value>,
    pub covered: BTreeSet<usize>,
    pub trace: ObservationTrace,
    pub steps: u64,
}

/// The entry call could not be started at all.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CallError {
    #[error("undefined function `{0}`")]
    UnknownFunction(String),
    #[error("`{function}` takes {expected} arguments, got {got}")]
    Arity {
        function: String,
        expected: usize,
        got: usize,
    },
}

impl CallError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            CallError::UnknownFunction(_) => ErrorKind::UndefinedVariable,
            CallError::Arity { .. } => ErrorKind::ArityMismatch,
        }
    }
}

/// Runs `call` against `ast`. Execution is deterministic: identical inputs
/// give identical results.
pub fn execute(
    ast: &Ast,
    call: &Call,
    budget: u64,
    watch: Option<&Watch>,
) -> Result<ExecutionResult, CallError> {
    let function = ast
        .function(&call.function)
        .ok_or_else(|| CallError::UnknownFunction(call.function.clone()))?;
    if function.params.len() != call.args.len() {
        return Err(CallError::Arity {
            function: function.name.clone(),
            expected: function.params.len(),
            got: call.args.len(),
        });
    }
    let mut machine = Machine {
        ast,
        budget,
        watch,
        steps: 0,
        depth: 0,
        output: Vec::new(),
        covered: BTreeSet::new(),
        trace: Vec::new(),
    };
    let status = match machine.invoke(function, call.args.clone()) {
        Ok(v) => Status::Completed(v),
        Err(Halt::Error(e)) => Status::RuntimeError(e),
        Err(Halt::Budget) => Status::StepBudgetExceeded,
    };
    Ok(ExecutionResult {
        status,
        output: machine.output,
        covered: machine.covered,
        trace: machine.trace,
        steps: machine.steps,
    })
}

enum Halt {
    Error(RuntimeError),
    Budget,
}

enum Flow {
    Next,
    Return(Value),
}

type Frame = HashMap<String, Value>;

struct Machine<'a> {
    ast: &'a Ast,
    budget: u64,
    watch: Option<&'a Watch>,
    steps: u64,
    depth: usize,
    output: Vec<Value>,
    covered: BTreeSet<usize>,
    trace: ObservationTrace,
}

fn fail(kind: ErrorKind, line: usize, message: impl Into<String>) -> Halt {
    Halt::Error(RuntimeError {
        kind,
        line,
        message: message.into(),
    })
}

impl<'a> Machine<'a> {
    fn invoke(&mut self, function: &'a Function, args: Vec<Value>) -> Result<Value, Halt> {
        if self.depth >= MAX_CALL_DEPTH {
            return Err(Halt::Budget);
        }
        self.depth += 1;
        let mut frame: Frame = function.params.iter().cloned().zip(args).collect();
        let result = self.block(&function.body, &mut frame);
        self.depth -= 1;
        // Falling off the end of a function returns Int 0.
        Ok(match result? {
            Flow::Return(v) => v,
            Flow::Next => Value::Int(0),
        })
    }

    /// Accounts one execution of `line`: budget, coverage and observation.
    fn enter(&mut self, line: usize, frame: &Frame) -> Result<(), Halt> {
        if self.steps >= self.budget {
            return Err(Halt::Budget);
        }
        self.steps += 1;
        self.covered.insert(line);
        if let Some(w) = self.watch {
            if w.line == line {
                self.trace.push(frame.get(&w.variable).cloned());
            }
        }
        Ok(())
    }

    fn block(&mut self, body: &'a [Stmt], frame: &mut Frame) -> Result<Flow, Halt> {
        for stmt in body {
            if let Flow::Return(v) = self.stmt(stmt, frame)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Next)
    }

    fn stmt(&mut self, stmt: &'a Stmt, frame: &mut Frame) -> Result<Flow, Halt> {
        let line = stmt.line;
        match &stmt.kind {
            StmtKind::While { cond, body, .. } => loop {
                self.enter(line, frame)?;
                if !self.condition(cond, frame, line)? {
                    return Ok(Flow::Next);
                }
                if let Flow::Return(v) = self.block(body, frame)? {
                    return Ok(Flow::Return(v));
                }
            },
            kind => {
                self.enter(line, frame)?;
                match kind {
                    StmtKind::Let { name, value } => {
                        let v = self.eval(value, frame, line)?;
                        frame.insert(name.clone(), v);
                    }
                    StmtKind::Assign { name, value } => {
                        let v = self.eval(value, frame, line)?;
                        match frame.get_mut(name) {
                            Some(slot) => *slot = v,
                            None => {
                                return Err(fail(
                                    ErrorKind::UndefinedVariable,
                                    line,
                                    format!("assignment to undefined variable `{name}`"),
                                ))
                            }
                        }
                    }
                    StmtKind::IndexAssign { name, index, value } => {
                        let idx = self.eval(index, frame, line)?;
                        let v = self.eval(value, frame, line)?;
                        let target = frame.get_mut(name).ok_or_else(|| {
                            fail(
                                ErrorKind::UndefinedVariable,
                                line,
                                format!("undefined variable `{name}`"),
                            )
                        })?;
                        let Value::Array(items) = target else {
                            return Err(fail(
                                ErrorKind::TypeError,
                                line,
                                format!("cannot index-assign into {}", target.type_name()),
                            ));
                        };
                        let i = array_index(&idx, items.len(), line)?;
                        items[i] = v;
                    }
                    StmtKind::If {
                        cond,
                        then_body,
                        else_branch,
                        ..
                    } => {
                        if self.condition(cond, frame, line)? {
                            return self.block(then_body, frame);
                        } else if let Some(e) = else_branch {
                            return self.block(&e.body, frame);
                        }
                    }
                    StmtKind::Return(e) => {
                        let v = self.eval(e, frame, line)?;
                        return Ok(Flow::Return(v));
                    }
                    StmtKind::Print(e) => {
                        let v = self.eval(e, frame, line)?;
                        self.output.push(v);
                    }
                    StmtKind::While { .. } => unreachable!(),
                }
                Ok(Flow::Next)
            }
        }
    }

    fn condition(&mut self, cond: &'a Expr, frame: &mut Frame, line: usize) -> Result<bool, Halt> {
        match self.eval(cond, frame, line)? {
            Value::Bool(b) => Ok(b),
            other => Err(fail(
                ErrorKind::TypeError,
                line,
                format!("condition must be bool, got {}", other.type_name()),
            )),
        }
    }

    fn eval(&mut self, expr: &'a Expr, frame: &mut Frame, line: usize) -> Result<Value, Halt> {
        Ok(match expr {
            Expr::Int(i) => Value::Int(*i),
            Expr::Float(x) => Value::Float(*x),
            Expr::Str(s) => Value::Str(s.clone()),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Array(items) => Value::Array(
                items
                    .iter()
                    .map(|e| self.eval(e, frame, line))
                    .collect::<Result<_, _>>()?,
            ),
            Expr::Var(name) => frame.get(name).cloned().ok_or_else(|| {
                fail(
                    ErrorKind::UndefinedVariable,
                    line,
                    format!("undefined variable `{name}`"),
                )
            })?,
            Expr::Index(base, idx) => {
                let base = self.eval(base, frame, line)?;
                let idx = self.eval(idx, frame, line)?;
                match base {
                    Value::Array(items) => {
                        let i = array_index(&idx, items.len(), line)?;
                        items[i].clone()
                    }
                    other => {
                        return Err(fail(
                            ErrorKind::TypeError,
                            line,
                            format!("cannot index {}", other.type_name()),
                        ))
                    }
                }
            }
            Expr::Call(name, args) => {
                let args = args
                    .iter()
                    .map(|e| self.eval(e, frame, line))
                    .collect::<Result<Vec<_>, _>>()?;
                if name == BUILTIN_LEN {
                    return builtin_len(args, line);
                }
                let function = self.ast.function(name).ok_or_else(|| {
                    fail(
                        ErrorKind::UndefinedVariable,
                        line,
                        format!("undefined function `{name}`"),
                    )
                })?;
                if function.params.len() != args.len() {
                    return Err(fail(
                        ErrorKind::ArityMismatch,
                        line,
                        format!(
                            "`{name}` takes {} arguments, got {}",
                            function.params.len(),
                            args.len()
                        ),
                    ));
                }
                self.invoke(function, args)?
            }
            Expr::Unary(op, e) => {
                let v = self.eval(e, frame, line)?;
                unary(*op, v, line)?
            }
            Expr::Binary(BinOp::And, lhs, rhs) | Expr::Binary(BinOp::Or, lhs, rhs) => {
                let is_and = matches!(expr, Expr::Binary(BinOp::And, ..));
                let l = self.logical_operand(lhs, frame, line)?;
                if l != is_and {
                    Value::Bool(l)
                } else {
                    Value::Bool(self.logical_operand(rhs, frame, line)?)
                }
            }
            Expr::Binary(op, lhs, rhs) => {
                let l = self.eval(lhs, frame, line)?;
                let r = self.eval(rhs, frame, line)?;
                binary(*op, l, r, line)?
            }
        })
    }

    fn logical_operand(&mut self, e: &'a Expr, frame: &mut Frame, line: usize) -> Result<bool, Halt> {
        match self.eval(e, frame, line)? {
            Value::Bool(b) => Ok(b),
            other => Err(fail(
                ErrorKind::TypeError,
                line,
                format!("logical operand must be bool, got {}", other.type_name()),
            )),
        }
    }
}

fn array_index(idx: &Value, len: usize, line: usize) -> Result<usize, Halt> {
    match idx {
        Value::Int(i) if *i >= 0 && (*i as u64) < len as u64 => Ok(*i as usize),
        Value::Int(i) => Err(fail(
            ErrorKind::IndexOutOfBounds,
            line,
            format!("index {i} out of bounds for length {len}"),
        )),
        other => Err(fail(
            ErrorKind::TypeError,
            line,
            format!("index must be int, got {}", other.type_name()),
        )),
    }
}

fn builtin_len(args: Vec<Value>, line: usize) -> Result<Value, Halt> {
    match args.as_slice() {
        [Value::Array(items)] => Ok(Value::Int(items.len() as i64)),
        [Value::Str(s)] => Ok(Value::Int(s.chars().count() as i64)),
        [other] => Err(fail(
            ErrorKind::TypeError,
            line,
            format!("len of {}", other.type_name()),
        )),
        _ => Err(fail(
            ErrorKind::ArityMismatch,
            line,
            format!("`len` takes 1 argument, got {}", args.len()),
        )),
    }
}

fn unary(op: UnOp, v: Value, line: usize) -> Result<Value, Halt> {
    match (op, v) {
        (UnOp::Neg, Value::Int(i)) => Ok(Value::Int(i.wrapping_neg())),
        (UnOp::Neg, Value::Float(x)) => Ok(Value::Float(-x)),
        (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
        (op, v) => Err(fail(
            ErrorKind::TypeError,
            line,
            format!("bad operand {} for unary {op:?}", v.type_name()),
        )),
    }
}

fn type_mismatch(op: BinOp, l: &Value, r: &Value, line: usize) -> Halt {
    fail(
        ErrorKind::TypeError,
        line,
        format!(
            "unsupported operands {} {} {}",
            l.type_name(),
            op.symbol(),
            r.type_name()
        ),
    )
}

fn binary(op: BinOp, l: Value, r: Value, line: usize) -> Result<Value, Halt> {
    use BinOp::*;
    use Value::*;
    match op {
        Eq | Ne => {
            let equal = match (&l, &r) {
                (Float(a), Float(b)) => a == b,
                _ => l == r,
            };
            Ok(Bool(equal == (op == Eq)))
        }
        Lt | Le | Gt | Ge => {
            let ord = match (&l, &r) {
                (Int(a), Int(b)) => Some(a.cmp(b)),
                (Float(a), Float(b)) => a.partial_cmp(b),
                (Str(a), Str(b)) => Some(a.cmp(b)),
                _ => return Err(type_mismatch(op, &l, &r, line)),
            };
            let holds = match ord {
                None => false,
                Some(o) => match op {
                    Lt => o.is_lt(),
                    Le => o.is_le(),
                    Gt => o.is_gt(),
                    _ => o.is_ge(),
                },
            };
            Ok(Bool(holds))
        }
        Add | Sub | Mul | Div | Rem => match (l, r) {
            (Int(a), Int(b)) => {
                if matches!(op, Div | Rem) && b == 0 {
                    return Err(fail(ErrorKind::DivByZero, line, "division by zero"));
                }
                Ok(Int(match op {
                    Add => a.wrapping_add(b),
                    Sub => a.wrapping_sub(b),
                    Mul => a.wrapping_mul(b),
                    Div => a.wrapping_div(b),
                    _ => a.wrapping_rem(b),
                }))
            }
            (Float(a), Float(b)) => Ok(Float(match op {
                Add => a + b,
                Sub => a - b,
                Mul => a * b,
                Div => a / b,
                _ => a % b,
            })),
            (Str(a), Str(b)) if op == Add => Ok(Str(a + &b)),
            (Array(mut a), Array(b)) if op == Add => {
                a.extend(b);
                Ok(Array(a))
            }
            (l, r) => Err(type_mismatch(op, &l, &r, line)),
        },
        And | Or => unreachable!("short-circuit operators are evaluated lazily"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, SourceProgram};

    fn run(lines: &[&str], f: &str, args: Vec<Value>) -> ExecutionResult {
        let ast = parse(&SourceProgram::new("t", lines.iter().copied())).unwrap();
        execute(&ast, &Call::new(f, args), DEFAULT_STEP_BUDGET, None).unwrap()
    }

    #[test]
    fn return_sum() {
        let r = run(&["fn main()", "return 1 + 2", "end"], "main", vec![]);
        assert_eq!(r.status, Status::Completed(Value::Int(3)));
        assert_eq!(r.covered, BTreeSet::from([2]));
        assert_eq!(r.steps, 1);
    }

    #[test]
    fn division_by_zero_reports_its_line() {
        let r = run(
            &["fn div(a, b)", "let q = a / b", "return q", "end"],
            "div",
            vec![Value::Int(1), Value::Int(0)],
        );
        match r.status {
            Status::RuntimeError(e) => {
                assert_eq!(e.kind, ErrorKind::DivByZero);
                assert_eq!(e.line, 2);
                assert!(r.covered.contains(&e.line));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn error_kinds() {
        let cases: Vec<(&[&str], ErrorKind)> = vec![
            (&["fn f()", "let a = [1]", "return a[1]", "end"], ErrorKind::IndexOutOfBounds),
            (&["fn f()", "let a = [1]", "return a[-1]", "end"], ErrorKind::IndexOutOfBounds),
            (&["fn f()", "return y", "end"], ErrorKind::UndefinedVariable),
            (&["fn f()", "y = 2", "return 0", "end"], ErrorKind::UndefinedVariable),
            (&["fn f()", "return g()", "end"], ErrorKind::UndefinedVariable),
            (&["fn f()", "return 1 + 1.0", "end"], ErrorKind::TypeError),
            (&["fn f()", "if 1", "end", "return 0", "end"], ErrorKind::TypeError),
            (&["fn f()", "return g(1)", "end", "fn g()", "return 1", "end"], ErrorKind::ArityMismatch),
            (&["fn f()", "return 7 % 0", "end"], ErrorKind::DivByZero),
        ];
        for (lines, kind) in cases {
            match run(lines, "f", vec![]).status {
                Status::RuntimeError(e) => assert_eq!(e.kind, kind, "{lines:?}"),
                other => panic!("{lines:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn entry_call_errors() {
        let ast = parse(&SourceProgram::new("t", ["fn f(a)", "return a", "end"])).unwrap();
        assert_eq!(
            execute(&ast, &Call::new("g", vec![]), 10, None).unwrap_err().kind(),
            ErrorKind::UndefinedVariable
        );
        assert_eq!(
            execute(&ast, &Call::new("f", vec![]), 10, None).unwrap_err().kind(),
            ErrorKind::ArityMismatch
        );
    }

    #[test]
    fn integer_overflow_wraps_and_floats_follow_ieee() {
        let r = run(&["fn f(a)", "return a + 1", "end"], "f", vec![Value::Int(i64::MAX)]);
        assert_eq!(r.status, Status::Completed(Value::Int(i64::MIN)));
        let r = run(&["fn f()", "return 1.0 / 0.0", "end"], "f", vec![]);
        assert_eq!(r.status, Status::Completed(Value::Float(f64::INFINITY)));
        let r = run(&["fn f()", "return 0.0 / 0.0 == 0.0 / 0.0", "end"], "f", vec![]);
        assert_eq!(r.status, Status::Completed(Value::Bool(false)));
    }

    #[test]
    fn budget_exhaustion_is_a_status() {
        let lines = ["fn f()", "while true", "end", "return 0", "end"];
        let r = run(&lines, "f", vec![]);
        assert_eq!(r.status, Status::StepBudgetExceeded);
        assert_eq!(r.steps, DEFAULT_STEP_BUDGET);
    }

    #[test]
    fn deep_recursion_stops_without_overflowing() {
        let lines = ["fn f(n)", "return f(n + 1)", "end"];
        let r = run(&lines, "f", vec![Value::Int(0)]);
        assert_eq!(r.status, Status::StepBudgetExceeded);
    }

    #[test]
    fn print_collects_values_and_arrays_are_values() {
        let lines = [
            "fn f()",
            "let a = [1, 2]",
            "let b = a",
            "b[0] = 9",
            "print a",
            "print b + [3]",
            "print len(\"abc\")",
            "end",
        ];
        let r = run(&lines, "f", vec![]);
        assert_eq!(r.status, Status::Completed(Value::Int(0)));
        assert_eq!(
            r.output,
            vec![
                Value::Array(vec![Value::Int(1), Value::Int(2)]),
                Value::Array(vec![Value::Int(9), Value::Int(2), Value::Int(3)]),
                Value::Int(3),
            ]
        );
    }

    #[test]
    fn short_circuit_skips_right_operand() {
        let r = run(&["fn f()", "return false and 1 / 0 == 1", "end"], "f", vec![]);
        assert_eq!(r.status, Status::Completed(Value::Bool(false)));
    }
}
