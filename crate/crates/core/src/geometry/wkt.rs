//! WKT `POLYGON` reader and writer (2D only, no `EMPTY`, no Z/M).

use std::fmt::Write;

use super::{Point2D, Region, Ring};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor { text, pos: 0 }
    }

    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    fn found(&mut self) -> String {
        match self.peek() {
            Some(c) => format!("'{c}'"),
            None => "end of input".to_string(),
        }
    }

    fn error(&mut self, expected: &str) -> Error {
        let found = self.found();
        Error::WktSyntax {
            position: self.pos,
            expected: expected.to_string(),
            found,
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.error(&format!("'{c}'")))
        }
    }

    fn word(&mut self) -> &'a str {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest.find(|c: char| !c.is_ascii_alphabetic()).unwrap_or(rest.len());
        self.pos += len;
        &rest[..len]
    }

    fn number<T: Scalar>(&mut self) -> Result<T> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.text[start..];
        let len = rest
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E')))
            .unwrap_or(rest.len());
        let token = &rest[..len];
        match token.parse::<T>() {
            Ok(v) if !token.is_empty() => {
                self.pos += len;
                Ok(v)
            }
            _ => Err(Error::WktSyntax {
                position: start,
                expected: "number".to_string(),
                found: if token.is_empty() {
                    self.found()
                } else {
                    format!("'{token}'")
                },
            }),
        }
    }
}

/// Parses a WKT `POLYGON`; the first ring is the exterior, the rest are holes.
pub fn parse_wkt<T: Scalar>(text: &str) -> Result<Region<T>> {
    let mut cur = Cursor::new(text);
    let kind = cur.word();
    if kind.is_empty() {
        return Err(cur.error("geometry type"));
    }
    if !kind.eq_ignore_ascii_case("POLYGON") {
        return Err(Error::UnsupportedGeometry(kind.to_string()));
    }
    let modifier = cur.word();
    if !modifier.is_empty() {
        return Err(Error::UnsupportedGeometry(format!("{kind} {modifier}")));
    }

    cur.expect('(')?;
    let mut rings = Vec::new();
    loop {
        rings.push(parse_ring(&mut cur, rings.len())?);
        match cur.peek() {
            Some(',') => cur.pos += 1,
            Some(')') => {
                cur.pos += 1;
                break;
            }
            _ => return Err(cur.error("',' or ')'")),
        }
    }
    if cur.peek().is_some() {
        return Err(cur.error("end of input"));
    }

    let mut rings = rings.into_iter();
    let exterior = rings.next().expect("at least one ring parsed");
    Ok(Region::new(exterior, rings.collect()))
}

fn parse_ring<T: Scalar>(cur: &mut Cursor<'_>, index: usize) -> Result<Ring<T>> {
    cur.expect('(')?;
    let mut points = Vec::new();
    loop {
        let x = cur.number()?;
        let y = cur.number()?;
        points.push(Point2D::new(x, y));
        match cur.peek() {
            Some(',') => cur.pos += 1,
            Some(')') => {
                cur.pos += 1;
                break;
            }
            _ => return Err(cur.error("',' or ')'")),
        }
    }
    Ring::new(points, index)
}

/// Writes `POLYGON((x y,...),(...))` using the shortest round-trip decimal form.
pub fn serialize_wkt<T: Scalar>(region: &Region<T>) -> String {
    let mut out = String::from("POLYGON(");
    for (i, ring) in region.rings().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push('(');
        for (j, p) in ring.points().iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{} {}", p.x, p.y).expect("write to String");
        }
        out.push(')');
    }
    out.push(')');
    out
}
