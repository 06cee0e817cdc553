//! Parser for the canonical text form of causal functions.
//!
//! ```text
//! function  := "and(" assertion ("," assertion)+ ")" | assertion
//! assertion := FEATURE "(rp)<-" ( "not(" ref ")" | ref )
//! ref       := FEATURE "(" ("a"|"r") ")" [("+"|"-") INT]
//!            | (">"|"<") FEATURE "(" ("a"|"r") ")"
//!            | VALUE
//! ```

use super::function::{CausalAssertion, CausalFunction, Reference, Role};
use super::space::FeatureSpace;
use crate::error::{Error, Result};

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(char::is_whitespace) {
            self.pos += self.rest().chars().next().map_or(0, char::len_utf8);
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            self.err(format!("expected `{token}`"))
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(self.rest().len());
        if len == 0 {
            return self.err("expected identifier");
        }
        let id = &self.rest()[..len];
        self.pos += len;
        Ok(id)
    }

    fn integer(&mut self) -> Result<i32> {
        let start = self.pos;
        let digits = self
            .rest()
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(self.rest().len());
        if digits == 0 {
            return self.err("expected integer");
        }
        self.pos += digits;
        self.src[start..self.pos].parse().or_else(|_| {
            self.err("integer out of range")
        })
    }
}

pub(crate) fn parse_function(text: &str, space: &FeatureSpace) -> Result<CausalFunction> {
    let mut cur = Cursor { src: text, pos: 0 };
    let assertions = if cur.rest().trim_start().starts_with("and(") && !is_feature_call(&cur, space) {
        cur.expect("and(")?;
        let mut list = vec![assertion(&mut cur, space)?];
        while cur.eat(",") {
            list.push(assertion(&mut cur, space)?);
        }
        cur.expect(")")?;
        if list.len() < 2 {
            return cur.err("`and` needs at least two assertions");
        }
        list
    } else {
        vec![assertion(&mut cur, space)?]
    };
    cur.skip_ws();
    if !cur.rest().is_empty() {
        return cur.err("trailing input");
    }
    CausalFunction::new(assertions, space)
}

// A feature literally named `and` would start with `and(rp)`.
fn is_feature_call(cur: &Cursor<'_>, space: &FeatureSpace) -> bool {
    space.feature_index("and").is_some() && cur.rest().trim_start().starts_with("and(rp)")
}

fn assertion(cur: &mut Cursor<'_>, space: &FeatureSpace) -> Result<CausalAssertion> {
    let start = cur.pos;
    let name = cur.ident()?;
    let Some(target) = space.feature_index(name) else {
        cur.pos = start;
        return cur.err(format!("unknown feature `{name}`"));
    };
    cur.expect("(rp)")?;
    cur.expect("<-")?;
    let negated = cur.eat("not(");
    let reference = reference(cur, space, target)?;
    if negated {
        cur.expect(")")?;
    }
    Ok(CausalAssertion::new(target, negated, reference))
}

fn role(cur: &mut Cursor<'_>) -> Result<Role> {
    cur.expect("(")?;
    let r = match cur.ident()? {
        "a" => Role::Agent,
        "r" => Role::Recipient,
        other => return cur.err(format!("expected `a` or `r`, got `{other}`")),
    };
    cur.expect(")")?;
    Ok(r)
}

fn same_feature(cur: &mut Cursor<'_>, space: &FeatureSpace, target: usize) -> Result<()> {
    let name = cur.ident()?;
    if name != space.feature(target).name {
        return cur.err(format!(
            "reference to `{name}` inside an assertion on `{}`",
            space.feature(target).name
        ));
    }
    Ok(())
}

fn reference(cur: &mut Cursor<'_>, space: &FeatureSpace, target: usize) -> Result<Reference> {
    if cur.eat(">") {
        same_feature(cur, space, target)?;
        return Ok(Reference::GreaterThan(role(cur)?));
    }
    if cur.eat("<") {
        same_feature(cur, space, target)?;
        return Ok(Reference::LessThan(role(cur)?));
    }
    let start = cur.pos;
    let word = cur.ident()?;
    cur.skip_ws();
    if cur.rest().starts_with('(') {
        cur.pos = start;
        same_feature(cur, space, target)?;
        let role = role(cur)?;
        cur.skip_ws();
        let delta = if cur.eat("+") {
            Some(cur.integer()?)
        } else if cur.eat("-") {
            Some(-cur.integer()?)
        } else {
            None
        };
        return Ok(match (role, delta) {
            (Role::Agent, None) => Reference::AgentFeature,
            (Role::Recipient, None) => Reference::RecipientFeature,
            (Role::Agent, Some(d)) => Reference::AgentPlus(d),
            (Role::Recipient, Some(d)) => Reference::RecipientPlus(d),
        });
    }
    match space.feature(target).value_index(word) {
        Some(v) => Ok(Reference::Absolute(v)),
        None => {
            cur.pos = start;
            cur.err(format!(
                "`{word}` is not a value of feature `{}`",
                space.feature(target).name
            ))
        }
    }
}
