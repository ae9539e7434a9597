// SPDX-License-Identifier: Apache-2.0

use super::{is_attribute_name, PolicyAst, PolicyError};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open,
    Close,
    And,
    Or,
    Attr(String),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, PolicyError> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        match c {
            b'(' => out.push((i, Token::Open)),
            b')' => out.push((i, Token::Close)),
            _ => {
                let start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && !matches!(bytes[i], b'(' | b')') {
                    i += 1;
                }
                let word = &text[start..i];
                let token = if word.eq_ignore_ascii_case("and") {
                    Token::And
                } else if word.eq_ignore_ascii_case("or") {
                    Token::Or
                } else {
                    let upper = word.to_ascii_uppercase();
                    if !is_attribute_name(&upper) {
                        return Err(PolicyError::Syntax {
                            position: start,
                            message: format!("bad attribute `{word}`"),
                        });
                    }
                    Token::Attr(upper)
                };
                out.push((start, token));
                continue;
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn error(&self, message: impl Into<String>) -> PolicyError {
        PolicyError::Syntax { position: self.offset(), message: message.into() }
    }

    // or_expr := and_expr ("or" and_expr)*
    fn or_expr(&mut self) -> Result<PolicyAst, PolicyError> {
        let mut left = self.and_expr()?;
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            left = PolicyAst::or(left, self.and_expr()?);
        }
        Ok(left)
    }

    // and_expr := atom ("and" atom)*
    fn and_expr(&mut self) -> Result<PolicyAst, PolicyError> {
        let mut left = self.atom()?;
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            left = PolicyAst::and(left, self.atom()?);
        }
        Ok(left)
    }

    fn atom(&mut self) -> Result<PolicyAst, PolicyError> {
        match self.peek().cloned() {
            Some(Token::Attr(a)) => {
                self.pos += 1;
                Ok(PolicyAst::Attr(a))
            }
            Some(Token::Open) => {
                self.pos += 1;
                let inner = self.or_expr()?;
                if self.peek() != Some(&Token::Close) {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(Token::Close) => Err(self.error("unexpected `)`")),
            Some(_) => Err(self.error("expected an attribute or `(`")),
            None => Err(self.error("unexpected end of policy")),
        }
    }
}

/// Parses a policy; `and` binds tighter than `or`, both left-associative.
pub fn parse_policy(text: &str) -> Result<PolicyAst, PolicyError> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(PolicyError::Syntax { position: 0, message: "empty policy".into() });
    }
    let mut parser = Parser { tokens, pos: 0, end: text.len() };
    let ast = parser.or_expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.error("trailing input"));
    }
    Ok(ast)
}
