//! Line-oriented constraint files.
//!
//! ```text
//! # comment
//! a b | c          split pair [a,b|c]
//! a | b | c        three-way split
//! a b c            unlabeled triplet (k names for a k-tuple)
//! tree: ((a,b),(c,d));   k-tuple labeled by a Newick shape
//! ```
//!
//! Points are interned in order of first appearance. A file is either fully
//! labeled or fully unlabeled.

use crate::constraint::{Constraint, ConstraintSet, OrientedSet};
use crate::error::{Error, Result};
use crate::newick;
use crate::points::PointSet;

#[derive(Clone, Debug, PartialEq)]
pub enum ParsedSet {
    Oriented(OrientedSet),
    Unlabeled(ConstraintSet),
}

impl ParsedSet {
    pub fn points(&self) -> &PointSet {
        match self {
            ParsedSet::Oriented(s) => s.points(),
            ParsedSet::Unlabeled(s) => s.points(),
        }
    }
}

enum Line {
    Labeled(Constraint),
    Unlabeled(Vec<usize>),
}

pub fn parse_constraints(text: &str) -> Result<ParsedSet> {
    let mut points = PointSet::new();
    let mut labeled = Vec::new();
    let mut unlabeled = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        match parse_line(body, &mut points).map_err(|e| locate(e, lineno))? {
            Line::Labeled(c) => {
                if !unlabeled.is_empty() {
                    return Err(Error::parse(lineno, Error::MixedLabeling.to_string()));
                }
                labeled.push(c);
            }
            Line::Unlabeled(t) => {
                if !labeled.is_empty() {
                    return Err(Error::parse(lineno, Error::MixedLabeling.to_string()));
                }
                if let Some(first) = unlabeled.first() {
                    let first: &Vec<usize> = first;
                    if first.len() != t.len() {
                        let e = Error::MixedArity {
                            expected: first.len(),
                            found: t.len(),
                        };
                        return Err(Error::parse(lineno, e.to_string()));
                    }
                }
                unlabeled.push(t);
            }
        }
    }
    if !labeled.is_empty() {
        Ok(ParsedSet::Oriented(OrientedSet::new(points, labeled)?))
    } else if !unlabeled.is_empty() {
        Ok(ParsedSet::Unlabeled(ConstraintSet::new(points, unlabeled)?))
    } else {
        Err(Error::Empty)
    }
}

/// Parses a file that must be fully labeled.
pub fn parse_oriented(text: &str) -> Result<OrientedSet> {
    match parse_constraints(text)? {
        ParsedSet::Oriented(s) => Ok(s),
        ParsedSet::Unlabeled(_) => Err(Error::Unsupported(
            "unlabeled tuples where labels are required".into(),
        )),
    }
}

fn locate(e: Error, line: usize) -> Error {
    match e {
        Error::Parse { .. } => e,
        other => Error::parse(line, other.to_string()),
    }
}

fn names(part: &str) -> Vec<&str> {
    part.split_whitespace().collect()
}

fn distinct(ids: &[usize], points: &PointSet) -> Result<()> {
    for (i, a) in ids.iter().enumerate() {
        if ids[i + 1..].contains(a) {
            return Err(Error::DuplicatePoint(points.name(*a).to_string()));
        }
    }
    Ok(())
}

fn parse_line(body: &str, points: &mut PointSet) -> Result<Line> {
    if let Some(rest) = body.strip_prefix("tree:") {
        let shape = newick::parse(rest.trim(), points)?;
        return Ok(Line::Labeled(Constraint::ktuple(shape)?));
    }
    let parts: Vec<&str> = body.split('|').collect();
    match parts.len() {
        1 => {
            let ns = names(parts[0]);
            if ns.len() < 3 {
                return Err(Error::Invalid(format!(
                    "a tuple needs at least 3 points, got {}",
                    ns.len()
                )));
            }
            let ids = ns
                .iter()
                .map(|n| points.intern(n))
                .collect::<Result<Vec<_>>>()?;
            distinct(&ids, points)?;
            Ok(Line::Unlabeled(ids))
        }
        2 => {
            let (left, right) = (names(parts[0]), names(parts[1]));
            if left.len() != 2 || right.len() != 1 {
                return Err(Error::Invalid("expected `<p> <p> | <p>`".into()));
            }
            let ids = [
                points.intern(left[0])?,
                points.intern(left[1])?,
                points.intern(right[0])?,
            ];
            distinct(&ids, points)?;
            Ok(Line::Labeled(Constraint::split_pair(
                ids[0], ids[1], ids[2],
            )?))
        }
        3 => {
            let groups: Vec<Vec<&str>> = parts.iter().map(|p| names(p)).collect();
            if groups.iter().any(|g| g.len() != 1) {
                return Err(Error::Invalid("expected `<p> | <p> | <p>`".into()));
            }
            let ids = [
                points.intern(groups[0][0])?,
                points.intern(groups[1][0])?,
                points.intern(groups[2][0])?,
            ];
            distinct(&ids, points)?;
            Ok(Line::Labeled(Constraint::three_way(
                ids[0], ids[1], ids[2],
            )?))
        }
        _ => Err(Error::Invalid("too many '|' separators".into())),
    }
}

pub fn serialize_oriented(set: &OrientedSet) -> String {
    let mut out = String::new();
    for c in set.constraints() {
        out.push_str(&c.render(set.points()));
        out.push('\n');
    }
    out
}

pub fn serialize_unlabeled(set: &ConstraintSet) -> String {
    let mut out = String::new();
    for t in set.tuples() {
        let mut ns: Vec<&str> = t.iter().map(|&p| set.points().name(p)).collect();
        ns.sort();
        out.push_str(&ns.join(" "));
        out.push('\n');
    }
    out
}

pub fn serialize_constraints(set: &ParsedSet) -> String {
    match set {
        ParsedSet::Oriented(s) => serialize_oriented(s),
        ParsedSet::Unlabeled(s) => serialize_unlabeled(s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oriented(text: &str) -> OrientedSet {
        match parse_constraints(text).unwrap() {
            ParsedSet::Oriented(s) => s,
            other => panic!("expected labeled set, got {other:?}"),
        }
    }

    #[test]
    fn split_pair_line() {
        let s = oriented("a b | c");
        assert_eq!(s.points().labels(), ["a", "b", "c"]);
        assert_eq!(s.constraints(), [Constraint::split_pair(0, 1, 2).unwrap()]);
    }

    #[test]
    fn three_way_line() {
        let s = oriented("a | b | c");
        assert_eq!(s.constraints(), [Constraint::three_way(0, 1, 2).unwrap()]);
    }

    #[test]
    fn unlabeled_line() {
        match parse_constraints("a b c\n").unwrap() {
            ParsedSet::Unlabeled(s) => {
                assert_eq!(s.tuples(), [vec![0, 1, 2]]);
                assert_eq!(s.k(), 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ktuple_line_and_comments() {
        let s = oriented("# header\n\ntree: (((a,b),c),d);   # trailing\n");
        assert_eq!(s.len(), 1);
        assert_eq!(s.constraints()[0].arity(), 4);
    }

    #[test]
    fn canonical_serialization() {
        assert_eq!(serialize_oriented(&oriented("b a | c")), "a b | c\n");
        assert_eq!(serialize_oriented(&oriented("c | a | b")), "a | b | c\n");
        assert_eq!(
            serialize_oriented(&oriented("tree: (d,(c,(b,a)));")),
            "tree: (((a,b),c),d);\n"
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_constraints("a b | c\na b c d | e\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        let err = parse_constraints("a b | c\nd e f\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        let err = parse_constraints("a b c\na b c d\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        let err = parse_constraints("a a | c\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err:?}");
        let err = parse_constraints("x y\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err:?}");
        assert_eq!(parse_constraints("# nothing\n").unwrap_err(), Error::Empty);
    }

    #[test]
    fn round_trip_reorders_points() {
        let s = ParsedSet::Oriented(oriented("q p | r\nr | p | q\n"));
        let text = serialize_constraints(&s);
        let again = parse_constraints(&text).unwrap();
        assert_eq!(again, s);
        assert_eq!(serialize_constraints(&again), text);
    }
}
