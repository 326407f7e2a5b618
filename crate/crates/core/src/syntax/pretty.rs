//! Normative single-line formatter; its output re-parses to an
//! α-equivalent term.

use super::{Comp, Val};
use crate::scalar::Weight;

pub fn pretty(c: &Comp) -> String {
    let mut out = String::new();
    write_comp(c, &mut out);
    out
}

pub(crate) fn pretty_val(v: &Val) -> String {
    let mut out = String::new();
    write_val(v, &mut out);
    out
}

fn write_val(v: &Val, out: &mut String) {
    match v {
        Val::True => out.push_str("true"),
        Val::False => out.push_str("false"),
        Val::Var(x) => out.push_str(x.as_str()),
        Val::Pair(a, b) => {
            out.push('(');
            write_val(a, out);
            out.push_str(", ");
            write_val(b, out);
            out.push(')');
        }
    }
}

fn write_comp(c: &Comp, out: &mut String) {
    match c {
        Comp::Return(v) => {
            out.push_str("return ");
            write_val(v, out);
        }
        Comp::Let(x, u, t) => {
            out.push_str("let val ");
            out.push_str(x.as_str());
            out.push_str(" <- ");
            write_comp(u, out);
            out.push_str(" in ");
            write_comp(t, out);
        }
        Comp::If(v, u, t) => {
            out.push_str("if ");
            write_val(v, out);
            out.push_str(" then ");
            write_comp(u, out);
            out.push_str(" else ");
            write_comp(t, out);
        }
        Comp::Match(v, x, y, t) => {
            out.push_str("match ");
            write_val(v, out);
            out.push_str(&format!(" as ({x}, {y}) in "));
            write_comp(t, out);
        }
        Comp::Flip(p) => {
            if p.is_integer() {
                out.push_str(&format!("flip({})", p.numer()));
            } else {
                out.push_str(&format!("flip({})", p.render()));
            }
        }
        Comp::Fresh => out.push_str("fresh()"),
        Comp::Eq(v, w) => {
            write_val(v, out);
            out.push_str(" == ");
            write_val(w, out);
        }
        Comp::MemFn(x, u) => {
            out.push_str(&format!("memfn {x}. "));
            write_comp(u, out);
        }
        Comp::App(v, w) => {
            write_val(v, out);
            out.push_str(" @ ");
            write_val(w, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio;

    #[test]
    fn examples() {
        assert_eq!(pretty(&Comp::ret(Val::True)), "return true");
        assert_eq!(pretty(&Comp::Flip(ratio(1, 3))), "flip(1/3)");
        assert_eq!(
            pretty(&Comp::memfn("y", Comp::Flip(ratio(1, 2)))),
            "memfn y. flip(1/2)"
        );
        assert_eq!(pretty(&Comp::Flip(ratio(1, 1))), "flip(1)");
        assert_eq!(
            pretty(&Comp::let_in("x", Comp::Fresh, Comp::app("f", "x"))),
            "let val x <- fresh() in f @ x"
        );
    }
}
