//! Plain-text spline files, one entity per file.
//!
//! ```text
//! curve
//! degree 2
//! knots 0 0 0 0.5 1 1 1
//! x y w            # one line per control point
//! ```
//!
//! ```text
//! surface
//! degrees 2 2
//! knots_u ...
//! knots_v ...
//! net nu nv
//! x y w            # nu*nv lines, u index fastest
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use crate::geom::Vec2;
use crate::nurbs::{KnotVector, NurbsCurve, NurbsError, NurbsSurface};

#[derive(Clone, Debug, PartialEq)]
pub enum SplineEntity {
    Curve(NurbsCurve<f64>),
    Surface(NurbsSurface<f64>),
}

#[derive(Debug, thiserror::Error)]
pub enum SplineFileError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid spline: {0}")]
    Spline(#[from] NurbsError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#')),
        );
        Self { inner: it.peekable(), last: 0 }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str), SplineFileError> {
        match self.inner.next() {
            Some((n, l)) => {
                self.last = n;
                Ok((n, l))
            }
            None => Err(SplineFileError::Parse {
                line: self.last + 1,
                msg: format!("unexpected end of file, expected {what}"),
            }),
        }
    }

    fn keyword(&mut self, key: &str) -> Result<(usize, Vec<&'a str>), SplineFileError> {
        let (n, l) = self.next(key)?;
        let mut toks = l.split_whitespace();
        match toks.next() {
            Some(k) if k == key => Ok((n, toks.collect())),
            other => Err(SplineFileError::Parse {
                line: n,
                msg: format!("expected `{key}`, found `{}`", other.unwrap_or("")),
            }),
        }
    }
}

fn num<T: std::str::FromStr>(line: usize, tok: &str) -> Result<T, SplineFileError> {
    tok.parse().map_err(|_| SplineFileError::Parse { line, msg: format!("invalid number `{tok}`") })
}

fn nums<T: std::str::FromStr>(line: usize, toks: &[&str]) -> Result<Vec<T>, SplineFileError> {
    toks.iter().map(|t| num(line, t)).collect()
}

fn read_points(
    lines: &mut Lines<'_>,
    count: usize,
) -> Result<(Vec<Vec2<f64>>, Vec<f64>), SplineFileError> {
    let mut pts = Vec::with_capacity(count);
    let mut w = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, l) = lines.next("control point `x y w`")?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(SplineFileError::Parse {
                line: n,
                msg: format!("expected `x y w`, found {} fields", toks.len()),
            });
        }
        let v: Vec<f64> = nums(n, &toks)?;
        pts.push(Vec2::new(v[0], v[1]));
        w.push(v[2]);
    }
    Ok((pts, w))
}

fn single<T: std::str::FromStr>(line: usize, toks: &[&str], what: &str) -> Result<T, SplineFileError> {
    match toks {
        [t] => num(line, t),
        _ => Err(SplineFileError::Parse { line, msg: format!("expected one value for {what}") }),
    }
}

pub fn parse_spline(text: &str) -> Result<SplineEntity, SplineFileError> {
    let mut lines = Lines::new(text);
    let (n, head) = lines.next("`curve` or `surface`")?;
    let entity = match head.split_whitespace().next() {
        Some("curve") => {
            let (ln, t) = lines.keyword("degree")?;
            let p: usize = single(ln, &t, "degree")?;
            let (ln, t) = lines.keyword("knots")?;
            let knots = KnotVector::new(nums(ln, &t)?, p)?;
            let (pts, w) = read_points(&mut lines, knots.num_basis())?;
            SplineEntity::Curve(NurbsCurve::new(knots, pts, w)?)
        }
        Some("surface") => {
            let (ln, t) = lines.keyword("degrees")?;
            let d: Vec<usize> = nums(ln, &t)?;
            if d.len() != 2 {
                return Err(SplineFileError::Parse { line: ln, msg: "expected `degrees pu pv`".into() });
            }
            let (ln, t) = lines.keyword("knots_u")?;
            let ku = KnotVector::new(nums(ln, &t)?, d[0])?;
            let (ln, t) = lines.keyword("knots_v")?;
            let kv = KnotVector::new(nums(ln, &t)?, d[1])?;
            let (ln, t) = lines.keyword("net")?;
            let net: Vec<usize> = nums(ln, &t)?;
            if net.len() != 2 || net[0] != ku.num_basis() || net[1] != kv.num_basis() {
                return Err(SplineFileError::Parse {
                    line: ln,
                    msg: format!(
                        "net size must be `{} {}` for the given knot vectors",
                        ku.num_basis(),
                        kv.num_basis()
                    ),
                });
            }
            let (pts, w) = read_points(&mut lines, net[0] * net[1])?;
            SplineEntity::Surface(NurbsSurface::new(ku, kv, pts, w)?)
        }
        other => {
            return Err(SplineFileError::Parse {
                line: n,
                msg: format!("expected `curve` or `surface`, found `{}`", other.unwrap_or("")),
            })
        }
    };
    if let Some((n, l)) = lines.inner.next() {
        return Err(SplineFileError::Parse { line: n, msg: format!("trailing content `{l}`") });
    }
    Ok(entity)
}

pub fn read_spline(path: impl AsRef<Path>) -> Result<SplineEntity, SplineFileError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| SplineFileError::Io { path: path.display().to_string(), source })?;
    parse_spline(&text)
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

pub fn format_curve(c: &NurbsCurve<f64>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "curve");
    let _ = writeln!(s, "degree {}", c.degree());
    let _ = writeln!(s, "knots {}", join(c.knots().values()));
    for (p, w) in c.control_points().iter().zip(c.weights()) {
        let _ = writeln!(s, "{:?} {:?} {:?}", p.x, p.y, w);
    }
    s
}

pub fn format_surface(sf: &NurbsSurface<f64>) -> String {
    let mut s = String::new();
    let (pu, pv) = sf.degrees();
    let (nu, nv) = sf.net_size();
    let _ = writeln!(s, "surface");
    let _ = writeln!(s, "degrees {pu} {pv}");
    let _ = writeln!(s, "knots_u {}", join(sf.knots_u().values()));
    let _ = writeln!(s, "knots_v {}", join(sf.knots_v().values()));
    let _ = writeln!(s, "net {nu} {nv}");
    for (p, w) in sf.control_points().iter().zip(sf.weights()) {
        let _ = writeln!(s, "{:?} {:?} {:?}", p.x, p.y, w);
    }
    s
}

pub fn format_spline(e: &SplineEntity) -> String {
    match e {
        SplineEntity::Curve(c) => format_curve(c),
        SplineEntity::Surface(s) => format_surface(s),
    }
}
