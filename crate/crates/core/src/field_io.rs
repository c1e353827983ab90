//! Plain-text container for coefficient fields.
//!
//! ```text
//! hardy-field 1
//! dim 3
//! radius 2
//! lambda 0.8
//! source iid 0.2 rademacher 7        # or `constant 1.0`, or `explicit`
//! forward 375
//! <one value per line: site index major, direction minor>
//! lower 75
//! <one value per line: direction major, then sites of the face x_j = -R in index order>
//! ```
//!
//! Values are written with Rust's shortest round-trip float formatting, so a
//! write/read cycle reproduces the field bit for bit.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::lattice::{BoxDomain, CoefficientField, Distribution, FieldSource};

const MAGIC: &str = "hardy-field 1";

pub fn write_field<W: Write>(field: &CoefficientField, mut out: W) -> Result<()> {
    let domain = field.domain();
    let d = domain.dim();
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "dim {d}")?;
    writeln!(out, "radius {}", domain.radius())?;
    writeln!(out, "lambda {:?}", field.lambda())?;
    match field.source() {
        FieldSource::Constant { value } => writeln!(out, "source constant {value:?}")?,
        FieldSource::Iid { delta, dist, seed } => writeln!(out, "source iid {delta:?} {} {seed}", dist.name())?,
        FieldSource::Explicit => writeln!(out, "source explicit")?,
    }
    writeln!(out, "forward {}", field.forward_values().len())?;
    for v in field.forward_values() {
        writeln!(out, "{v:?}")?;
    }
    let face = lower_face_slots(domain);
    writeln!(out, "lower {}", face.len())?;
    for slot in face {
        writeln!(out, "{:?}", field.lower_values()[slot])?;
    }
    Ok(())
}

fn lower_face_slots(domain: &BoxDomain) -> Vec<usize> {
    let d = domain.dim();
    let r = domain.radius() as i64;
    let mut slots = Vec::new();
    for j in 0..d {
        for idx in 0..domain.len() {
            if domain.coord(idx, j) == -r {
                slots.push(idx * d + j);
            }
        }
    }
    slots
}

struct Lines<R> {
    inner: R,
    line: usize,
    buf: String,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<&str> {
        loop {
            self.buf.clear();
            if self.inner.read_line(&mut self.buf)? == 0 {
                return Err(self.error("unexpected end of file"));
            }
            self.line += 1;
            let t = self.buf.split('#').next().unwrap_or("").trim();
            if !t.is_empty() {
                let start = self.buf.find(t).unwrap_or(0);
                return Ok(&self.buf[start..start + t.len()]);
            }
        }
    }

    fn error(&self, reason: impl Into<String>) -> Error {
        Error::Parse { line: self.line, reason: reason.into() }
    }

    fn keyed(&mut self, key: &str) -> Result<Vec<String>> {
        let line = self.next()?.to_string();
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(self.error(format!("expected `{key}`")));
        }
        Ok(parts.map(str::to_string).collect())
    }

    fn parse<T: std::str::FromStr>(&self, s: &str, what: &str) -> Result<T> {
        s.parse().map_err(|_| self.error(format!("cannot parse {what} from `{s}`")))
    }

    fn single<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.keyed(key)?;
        if v.len() != 1 {
            return Err(self.error(format!("`{key}` takes one value")));
        }
        self.parse(&v[0], key)
    }

    fn values(&mut self, key: &str, expected: usize) -> Result<Vec<f64>> {
        let count: usize = self.single(key)?;
        if count != expected {
            return Err(self.error(format!("`{key}` count {count} does not match the box ({expected})")));
        }
        (0..count)
            .map(|_| {
                let t = self.next()?.to_string();
                self.parse(&t, "value")
            })
            .collect()
    }
}

pub fn read_field<R: BufRead>(input: R) -> Result<CoefficientField> {
    let mut lines = Lines { inner: input, line: 0, buf: String::new() };
    if lines.next()? != MAGIC {
        return Err(lines.error(format!("missing `{MAGIC}` header")));
    }
    let dim: usize = lines.single("dim")?;
    let radius: usize = lines.single("radius")?;
    let lambda: f64 = lines.single("lambda")?;
    let src = lines.keyed("source")?;
    let source = match src.first().map(String::as_str) {
        Some("constant") if src.len() == 2 => FieldSource::Constant { value: lines.parse(&src[1], "constant value")? },
        Some("iid") if src.len() == 4 => FieldSource::Iid {
            delta: lines.parse(&src[1], "delta")?,
            dist: src[2].parse::<Distribution>().map_err(|e| lines.error(e.to_string()))?,
            seed: lines.parse(&src[3], "seed")?,
        },
        Some("explicit") if src.len() == 1 => FieldSource::Explicit,
        _ => return Err(lines.error("unknown field source")),
    };
    let domain = BoxDomain::new(dim, radius)?;
    let forward = lines.values("forward", domain.len() * dim)?;
    let slots = lower_face_slots(&domain);
    let face = lines.values("lower", slots.len())?;
    let mut lower = vec![0.0; domain.len() * dim];
    for (slot, v) in slots.into_iter().zip(face) {
        lower[slot] = v;
    }
    CoefficientField::from_parts(domain, lambda, source, forward, lower)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let f = CoefficientField::iid(BoxDomain::new(3, 2).unwrap(), 0.3, Distribution::Uniform, 17).unwrap();
        let mut buf = Vec::new();
        write_field(&f, &mut buf).unwrap();
        let g = read_field(buf.as_slice()).unwrap();
        assert_eq!(f, g);

        let c = CoefficientField::constant(BoxDomain::new(4, 1).unwrap(), 0.7, None).unwrap();
        let mut buf = Vec::new();
        write_field(&c, &mut buf).unwrap();
        assert_eq!(read_field(buf.as_slice()).unwrap(), c);
    }

    #[test]
    fn malformed_input_reports_line() {
        let text = "hardy-field 1\ndim 3\nradius 1\nlambda 0.5\nsource bogus\n";
        match read_field(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
        let short = "hardy-field 1\ndim 3\nradius 1\nlambda 1\nsource explicit\nforward 81\n1.0\n";
        assert!(matches!(read_field(short.as_bytes()), Err(Error::Parse { .. })));
        assert!(read_field("nope\n".as_bytes()).is_err());
    }
}
