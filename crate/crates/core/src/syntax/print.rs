//! Printing in the concrete grammar. Output always parses back to the same
//! tree.

use std::fmt::{self, Display, Formatter, Write};

use super::{Action, Branch, Configuration, DepHistory, KeyRef, Polarity, Process, System};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Level {
    Proc,
    Sum,
    Unary,
}

impl Display for Action {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Action::Internal => f.write_str("tau"),
            Action::Visible { channel, polarity: Polarity::Positive } => write!(f, "{channel}"),
            Action::Visible { channel, polarity: Polarity::Negative } => write!(f, "'{channel}"),
        }
    }
}

impl Display for KeyRef {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            KeyRef::Key(k) => write!(f, "{k}"),
            KeyRef::Var(g) => f.write_str(g.as_str()),
        }
    }
}

fn write_branch(f: &mut impl Write, b: &Branch) -> fmt::Result {
    write!(f, "{}", b.action)?;
    if let Some(g) = &b.binder {
        write!(f, "({})", g.as_str())?;
    }
    let is_omega = matches!(&b.action, Action::Visible { channel, polarity: Polarity::Positive } if channel.is_omega());
    if is_omega && b.continuation.is_nil() && b.binder.is_none() {
        return Ok(());
    }
    f.write_char('.')?;
    write_process(f, &b.continuation, Level::Unary)
}

fn write_process(f: &mut impl Write, p: &Process, level: Level) -> fmt::Result {
    match p {
        Process::Sum(bs) if bs.is_empty() => f.write_char('0'),
        Process::Sum(bs) if bs.len() == 1 => write_branch(f, &bs[0]),
        Process::Sum(bs) => {
            let paren = level == Level::Unary;
            if paren {
                f.write_char('(')?;
            }
            for (i, b) in bs.iter().enumerate() {
                if i > 0 {
                    f.write_str(" + ")?;
                }
                write_branch(f, b)?;
            }
            if paren {
                f.write_char(')')?;
            }
            Ok(())
        }
        Process::Par(a, b) => {
            let paren = level != Level::Proc;
            if paren {
                f.write_char('(')?;
            }
            write_process(f, a, Level::Proc)?;
            f.write_str(" | ")?;
            write_process(f, b, Level::Sum)?;
            if paren {
                f.write_char(')')?;
            }
            Ok(())
        }
        Process::Restrict(a, body) => {
            write!(f, "new {a}. ")?;
            write_process(f, body, Level::Unary)
        }
        Process::Rec { var, binder, body } => {
            write!(f, "rec {}", var.as_str())?;
            if let Some(g) = binder {
                write!(f, "({})", g.as_str())?;
            }
            f.write_str(". ")?;
            write_process(f, body, Level::Unary)
        }
        Process::Var(x) => f.write_str(x.as_str()),
        Process::Roll(r) => write!(f, "roll<{r}>"),
    }
}

impl Display for Process {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_process(f, self, Level::Proc)
    }
}

fn write_system(f: &mut impl Write, m: &System, nested: bool) -> fmt::Result {
    match m {
        System::Nil => f.write_char('0'),
        System::Par(a, b) => {
            if nested {
                f.write_char('(')?;
            }
            write_system(f, a, false)?;
            f.write_str(" | ")?;
            write_system(f, b, true)?;
            if nested {
                f.write_char(')')?;
            }
            Ok(())
        }
        System::Restrict(a, body) => {
            write!(f, "new {a}. ")?;
            write_system(f, body, true)
        }
        System::Named(k, p) => {
            write!(f, "{k}: ")?;
            write_process(f, p, Level::Sum)
        }
        System::Memory { origin, process, key } => {
            write!(f, "mem[{origin}: ")?;
            write_process(f, process, Level::Proc)?;
            write!(f, "; {key}]")
        }
    }
}

impl Display for System {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_system(f, self, false)
    }
}

impl Display for DepHistory {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("eps");
        }
        for (i, k) in self.keys().iter().enumerate() {
            if i > 0 {
                f.write_char(' ')?;
            }
            write!(f, "{k}")?;
        }
        Ok(())
    }
}

impl Display for Configuration {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{} |- {}", self.history, self.system)
    }
}
