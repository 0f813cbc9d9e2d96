use std::fmt;

/// Boolean guard of a decision branch.
#[derive(Debug, Clone, PartialEq)]
pub enum ConditionExpr {
    Compare {
        lhs: Operand,
        op: CmpOp,
        rhs: Operand,
    },
    And(Box<ConditionExpr>, Box<ConditionExpr>),
    Or(Box<ConditionExpr>, Box<ConditionExpr>),
    Not(Box<ConditionExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            Self::Lt => "<",
            Self::Le => "<=",
            Self::Eq => "==",
            Self::Ne => "!=",
            Self::Ge => ">=",
            Self::Gt => ">",
        }
    }

    /// Extended-real comparison; `f64::INFINITY` stands for "never".
    pub fn apply(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Self::Lt => lhs < rhs,
            Self::Le => lhs <= rhs,
            Self::Eq => lhs == rhs,
            Self::Ne => lhs != rhs,
            Self::Ge => lhs >= rhs,
            Self::Gt => lhs > rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Literal(f64),
    Atom(Atom),
}

/// Counter and timing queries over an instance's execution history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    Executions { op: String, exit: Option<String> },
    RunsSince { op: String, exit: String },
    SecondsSince { op: String, exit: Option<String> },
    RunCount,
}

impl Atom {
    /// Operation and optional exit the atom refers to.
    pub fn reference(&self) -> Option<(&str, Option<&str>)> {
        match self {
            Self::Executions { op, exit } | Self::SecondsSince { op, exit } => {
                Some((op, exit.as_deref()))
            }
            Self::RunsSince { op, exit } => Some((op, Some(exit))),
            Self::RunCount => None,
        }
    }
}

impl ConditionExpr {
    /// All atoms in evaluation order.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Self::Compare { lhs, rhs, .. } => {
                for operand in [lhs, rhs] {
                    if let Operand::Atom(a) = operand {
                        out.push(a);
                    }
                }
            }
            Self::And(a, b) | Self::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Self::Not(a) => a.collect_atoms(out),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Self::Or(..) => 1,
            Self::And(..) => 2,
            Self::Not(_) => 3,
            Self::Compare { .. } => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let prec = self.precedence();
        if prec < min {
            f.write_str("(")?;
        }
        match self {
            Self::Compare { lhs, op, rhs } => write!(f, "{lhs} {} {rhs}", op.symbol())?,
            Self::Or(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str(" or ")?;
                b.fmt_prec(f, 2)?;
            }
            Self::And(a, b) => {
                a.fmt_prec(f, 2)?;
                f.write_str(" and ")?;
                b.fmt_prec(f, 3)?;
            }
            Self::Not(a) => {
                f.write_str("not ")?;
                a.fmt_prec(f, 3)?;
            }
        }
        if prec < min {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for ConditionExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Literal(v) => write!(f, "{v}"),
            Self::Atom(a) => write!(f, "{a}"),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Executions { op, exit: None } => write!(f, "executions({op})"),
            Self::Executions { op, exit: Some(e) } => write!(f, "executions({op} -> {e})"),
            Self::RunsSince { op, exit } => write!(f, "runsSince({op} -> {exit})"),
            Self::SecondsSince { op, exit: None } => write!(f, "secondsSince({op})"),
            Self::SecondsSince { op, exit: Some(e) } => write!(f, "secondsSince({op} -> {e})"),
            Self::RunCount => f.write_str("runCount()"),
        }
    }
}
