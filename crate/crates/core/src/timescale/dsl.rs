//! `union(interval(0,1), points(2,3), ray(5))` and friends.

use super::{Segment, TimeScale};
use crate::error::{Error, Result};

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, want: char) -> Result<()> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(c) => Err(Error::parse(self.pos, format!("expected '{want}', found '{c}'"))),
            None => Err(Error::parse(self.pos, format!("expected '{want}', found end of input"))),
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        if len == 0 {
            return Err(Error::parse(start, "expected a segment name"));
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-')))
            .unwrap_or(rest.len());
        let text = &rest[..len];
        let value: f64 = text
            .parse()
            .map_err(|_| Error::parse(start, format!("invalid number '{text}'")))?;
        self.pos += len;
        Ok(value)
    }

    fn numbers(&mut self) -> Result<Vec<f64>> {
        self.expect('(')?;
        let mut out = vec![self.number()?];
        while self.peek() == Some(',') {
            self.expect(',')?;
            out.push(self.number()?);
        }
        self.expect(')')?;
        Ok(out)
    }

    fn segments(&mut self, out: &mut Vec<Segment>) -> Result<()> {
        let at = {
            self.skip_ws();
            self.pos
        };
        let name = self.ident()?;
        let arity = |args: &[f64], n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::parse(at, format!("{name} takes {n} argument(s), got {}", args.len())))
            }
        };
        match name {
            "union" => {
                self.expect('(')?;
                self.segments(out)?;
                while self.peek() == Some(',') {
                    self.expect(',')?;
                    self.segments(out)?;
                }
                self.expect(')')?;
            }
            "interval" => {
                let a = self.numbers()?;
                arity(&a, 2)?;
                out.push(Segment::interval(a[0], a[1]));
            }
            "points" => out.push(Segment::points(self.numbers()?)),
            "ray" => {
                let a = self.numbers()?;
                arity(&a, 1)?;
                out.push(Segment::ray(a[0]));
            }
            "arith" => {
                let a = self.numbers()?;
                arity(&a, 2)?;
                out.push(Segment::arith(a[0], a[1]));
            }
            other => return Err(Error::parse(at, format!("unknown segment '{other}'"))),
        }
        Ok(())
    }
}

pub(super) fn parse(src: &str) -> Result<TimeScale> {
    let mut cur = Cursor { src, pos: 0 };
    let mut segments = Vec::new();
    cur.segments(&mut segments)?;
    if let Some(c) = cur.peek() {
        return Err(Error::parse(cur.pos, format!("unexpected trailing '{c}'")));
    }
    segments.sort_by(|a, b| a.min().total_cmp(&b.min()));
    TimeScale::new(segments)
}
