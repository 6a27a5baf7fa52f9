//! Text parser for the STL grammar documented in `docs/stl-grammar.md`.
//!
//! Concrete syntax, loosest binding first:
//!   `phi | phi`, `phi & phi`, `phi U[a,b] phi`, then unary `!`, `F[a,b]`,
//!   `F` (unbounded), `G[a,b]`, and atoms: `true`, parenthesized formulas,
//!   `dist(x,y; cx,cy) <= r`, and linear predicates like `2*x - y >= 0.5`.

use std::fmt;

use thiserror::Error;

use super::ast::{Formula, IntervalError, Predicate, Relation, TimeInterval, VAR_NAMES};

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("at byte {pos}: {source}")]
    Interval {
        pos: usize,
        #[source]
        source: IntervalError,
    },
    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdentifier { pos: usize, name: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semicolon,
    Amp,
    Pipe,
    Bang,
    Star,
    Plus,
    Minus,
    Rel(Relation),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(n) => write!(f, "number {n}"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Semicolon => write!(f, "`;`"),
            Tok::Amp => write!(f, "`&`"),
            Tok::Pipe => write!(f, "`|`"),
            Tok::Bang => write!(f, "`!`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Rel(r) => write!(f, "`{}`", r.symbol()),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            '[' => {
                toks.push((Tok::LBracket, i));
                i += 1;
            }
            ']' => {
                toks.push((Tok::RBracket, i));
                i += 1;
            }
            ',' => {
                toks.push((Tok::Comma, i));
                i += 1;
            }
            ';' => {
                toks.push((Tok::Semicolon, i));
                i += 1;
            }
            '&' => {
                toks.push((Tok::Amp, i));
                i += 1;
            }
            '|' => {
                toks.push((Tok::Pipe, i));
                i += 1;
            }
            '!' => {
                toks.push((Tok::Bang, i));
                i += 1;
            }
            '*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            '+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            '-' => {
                toks.push((Tok::Minus, i));
                i += 1;
            }
            '>' | '<' => {
                let strict_pos = i;
                let rel = if bytes.get(i + 1) == Some(&b'=') {
                    i += 2;
                    if c == '>' {
                        Relation::Ge
                    } else {
                        Relation::Le
                    }
                } else {
                    i += 1;
                    if c == '>' {
                        Relation::Gt
                    } else {
                        Relation::Lt
                    }
                };
                toks.push((Tok::Rel(rel), strict_pos));
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_digit() || d == '.' {
                        i += 1;
                    } else if (d == 'e' || d == 'E')
                        && i + 1 < bytes.len()
                        && ((bytes[i + 1] as char).is_ascii_digit()
                            || bytes[i + 1] == b'-'
                            || bytes[i + 1] == b'+')
                    {
                        i += 2;
                    } else {
                        break;
                    }
                }
                let lit = &text[start..i];
                let value = lit.parse::<f64>().map_err(|_| ParseError::Syntax {
                    pos: start,
                    msg: format!("invalid number literal `{lit}`"),
                })?;
                toks.push((Tok::Number(value), start));
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                return Err(ParseError::Syntax {
                    pos: i,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t);
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        match self.toks.get(self.pos) {
            Some((t, _)) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            Some((t, p)) => Err(ParseError::Syntax {
                pos: *p,
                msg: format!("expected {want}, found {t}"),
            }),
            None => Err(ParseError::Syntax {
                pos: self.end,
                msg: format!("expected {want}, found end of input"),
            }),
        }
    }

    fn parse_or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_and()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.bump();
            let rhs = self.parse_and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_until()?;
        while self.peek() == Some(&Tok::Amp) {
            self.bump();
            let rhs = self.parse_until()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_until(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.parse_unary()?;
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == "U") {
            self.bump();
            let interval = self.parse_interval(false)?;
            let rhs = self.parse_unary()?;
            return Ok(Formula::until(interval, lhs, rhs));
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.bump();
                Ok(Formula::not(self.parse_unary()?))
            }
            Some(Tok::Ident(s)) if s == "F" => {
                self.bump();
                if self.peek() == Some(&Tok::LBracket) {
                    let interval = self.parse_interval(true)?;
                    Ok(Formula::eventually(interval, self.parse_unary()?))
                } else {
                    Ok(Formula::eventually_unbounded(self.parse_unary()?))
                }
            }
            Some(Tok::Ident(s)) if s == "G" => {
                self.bump();
                let interval = self.parse_interval(true)?;
                Ok(Formula::globally(interval, self.parse_unary()?))
            }
            _ => self.parse_atom(),
        }
    }

    fn parse_interval(&mut self, require_finite: bool) -> Result<TimeInterval, ParseError> {
        let open_pos = self.here();
        self.expect(Tok::LBracket)?;
        let a = self.parse_signed_number()?;
        self.expect(Tok::Comma)?;
        let b = self.parse_signed_number()?;
        self.expect(Tok::RBracket)?;
        if require_finite && !b.is_finite() {
            return Err(ParseError::Syntax {
                pos: open_pos,
                msg: "bounded operator requires a finite upper bound".into(),
            });
        }
        TimeInterval::new(a, b).map_err(|source| ParseError::Interval { pos: open_pos, source })
    }

    fn parse_signed_number(&mut self) -> Result<f64, ParseError> {
        let negate = if self.peek() == Some(&Tok::Minus) {
            self.bump();
            true
        } else {
            false
        };
        match self.bump() {
            Some(Tok::Number(n)) => Ok(if negate { -n } else { *n }),
            Some(t) => {
                let t = t.clone();
                Err(ParseError::Syntax {
                    pos: self.toks[self.pos - 1].1,
                    msg: format!("expected number, found {t}"),
                })
            }
            None => Err(ParseError::Syntax {
                pos: self.end,
                msg: "expected number, found end of input".into(),
            }),
        }
    }

    fn parse_atom(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::LParen) => {
                self.bump();
                let inner = self.parse_or()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some(Tok::Ident(s)) if s == "true" => {
                self.bump();
                Ok(Formula::True)
            }
            Some(Tok::Ident(s)) if s == "dist" => self.parse_disk(),
            Some(Tok::Ident(_)) | Some(Tok::Number(_)) | Some(Tok::Minus) => self.parse_linear(),
            Some(t) => {
                let (t, p) = (t.clone(), self.here());
                Err(ParseError::Syntax {
                    pos: p,
                    msg: format!("expected a formula, found {t}"),
                })
            }
            None => Err(ParseError::Syntax {
                pos: self.end,
                msg: "expected a formula, found end of input".into(),
            }),
        }
    }

    fn parse_disk(&mut self) -> Result<Formula, ParseError> {
        self.bump(); // `dist`
        self.expect(Tok::LParen)?;
        self.expect_var("x")?;
        self.expect(Tok::Comma)?;
        self.expect_var("y")?;
        self.expect(Tok::Semicolon)?;
        let cx = self.parse_signed_number()?;
        self.expect(Tok::Comma)?;
        let cy = self.parse_signed_number()?;
        self.expect(Tok::RParen)?;
        let rel_pos = self.here();
        match self.bump() {
            Some(Tok::Rel(Relation::Le)) => {}
            other => {
                return Err(ParseError::Syntax {
                    pos: rel_pos,
                    msg: match other {
                        Some(t) => format!("disk predicate requires `<=`, found {}", t.clone()),
                        None => "disk predicate requires `<=`, found end of input".into(),
                    },
                })
            }
        }
        let radius_pos = self.here();
        let radius = self.parse_signed_number()?;
        if radius <= 0.0 {
            return Err(ParseError::Syntax {
                pos: radius_pos,
                msg: format!("disk radius must be positive, got {radius}"),
            });
        }
        Ok(Formula::Pred(Predicate::disk(cx, cy, radius)))
    }

    fn expect_var(&mut self, name: &str) -> Result<(), ParseError> {
        match self.bump() {
            Some(Tok::Ident(s)) if s == name => Ok(()),
            _ => Err(ParseError::Syntax {
                pos: self.toks.get(self.pos - 1).map(|(_, p)| *p).unwrap_or(self.end),
                msg: format!("expected variable `{name}`"),
            }),
        }
    }

    /// `c1*x + c2*y ~ mu`, also accepting bare `x`, `-y`, etc.
    fn parse_linear(&mut self) -> Result<Formula, ParseError> {
        let mut coeffs = vec![0.0; VAR_NAMES.len()];
        loop {
            let sign = match self.peek() {
                Some(Tok::Minus) => {
                    self.bump();
                    -1.0
                }
                Some(Tok::Plus) => {
                    self.bump();
                    1.0
                }
                _ => 1.0,
            };
            let magnitude = if let Some(Tok::Number(n)) = self.peek() {
                let n = *n;
                self.bump();
                if self.peek() == Some(&Tok::Star) {
                    self.bump();
                }
                n
            } else {
                1.0
            };
            let var_pos = self.here();
            match self.bump() {
                Some(Tok::Ident(name)) => match VAR_NAMES.iter().position(|v| v == name) {
                    Some(idx) => coeffs[idx] += sign * magnitude,
                    None => {
                        return Err(ParseError::UnknownIdentifier {
                            pos: var_pos,
                            name: name.clone(),
                        })
                    }
                },
                other => {
                    return Err(ParseError::Syntax {
                        pos: var_pos,
                        msg: match other {
                            Some(t) => format!("expected state variable, found {}", t.clone()),
                            None => "expected state variable, found end of input".into(),
                        },
                    })
                }
            }
            match self.peek() {
                Some(Tok::Plus) | Some(Tok::Minus) => continue,
                _ => break,
            }
        }
        let rel_pos = self.here();
        let relation = match self.bump() {
            Some(Tok::Rel(r)) => *r,
            other => {
                return Err(ParseError::Syntax {
                    pos: rel_pos,
                    msg: match other {
                        Some(t) => format!("expected order relation, found {}", t.clone()),
                        None => "expected order relation, found end of input".into(),
                    },
                })
            }
        };
        let threshold = self.parse_signed_number()?;
        if coeffs.iter().all(|c| *c == 0.0) {
            return Err(ParseError::Syntax {
                pos: rel_pos,
                msg: "linear predicate needs at least one nonzero coefficient".into(),
            });
        }
        Ok(Formula::Pred(Predicate::Linear { coeffs, relation, threshold }))
    }
}

/// Parse a formula from its concrete syntax.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let toks = tokenize(text)?;
    let mut parser = Parser { toks: &toks, pos: 0, end: text.len() };
    let formula = parser.parse_or()?;
    if parser.pos != toks.len() {
        return Err(ParseError::Syntax {
            pos: parser.here(),
            msg: format!("trailing input starting with {}", toks[parser.pos].0),
        });
    }
    Ok(formula)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_bounded_eventually_over_disk() {
        let phi = parse_formula("F[0,3](dist(x,y; 0.5,4) <= 0.3)").unwrap();
        let expected = Formula::eventually(
            TimeInterval::new(0.0, 3.0).unwrap(),
            Formula::Pred(Predicate::disk(0.5, 4.0, 0.3)),
        );
        assert_eq!(phi, expected);
    }

    #[test]
    fn parses_true() {
        assert_eq!(parse_formula("true").unwrap(), Formula::True);
    }

    #[test]
    fn rejects_reversed_interval() {
        let err = parse_formula("F[3,1](x >= 0)").unwrap_err();
        assert!(matches!(err, ParseError::Interval { .. }), "got {err:?}");
    }

    #[test]
    fn rejects_unknown_identifier() {
        let err = parse_formula("z >= 0").unwrap_err();
        assert!(matches!(err, ParseError::UnknownIdentifier { ref name, .. } if name == "z"));
    }

    #[test]
    fn parses_linear_combinations() {
        let phi = parse_formula("2*x - y >= 0.5").unwrap();
        assert_eq!(
            phi,
            Formula::Pred(Predicate::Linear {
                coeffs: vec![2.0, -1.0, 0.0],
                relation: Relation::Ge,
                threshold: 0.5,
            })
        );
    }

    #[test]
    fn parses_conjunction_of_goals() {
        let phi = parse_formula("F(dist(x,y; 5,4) <= 0.3) & F(dist(x,y; 10,4) <= 0.3)").unwrap();
        match phi {
            Formula::And(lhs, rhs) => {
                assert!(matches!(*lhs, Formula::EventuallyUnbounded(_)));
                assert!(matches!(*rhs, Formula::EventuallyUnbounded(_)));
            }
            other => panic!("expected conjunction, got {other}"),
        }
    }

    #[test]
    fn until_and_globally_parse() {
        let phi = parse_formula("(x >= 0) U[1,2] (y <= 3)").unwrap();
        assert!(matches!(phi, Formula::Until(..)));
        let psi = parse_formula("G[0,5] x >= 0").unwrap();
        assert!(matches!(psi, Formula::Globally(..)));
    }

    #[test]
    fn reports_syntax_error_position() {
        match parse_formula("F[0,3] )") {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, 7),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }
}
