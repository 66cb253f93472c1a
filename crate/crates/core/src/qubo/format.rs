//! Plain-text QUBO format.
//!
//! ```text
//! # comment
//! p <n>
//! o <offset>          (optional)
//! <i> <j> <coeff>     (0-based, i <= j)
//! ```

use std::collections::HashSet;
use std::fmt::Write;

use super::QuboMatrix;
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_number(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("invalid number `{tok}`")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite number `{tok}`")));
    }
    Ok(v)
}

fn parse_index(tok: &str, line: usize) -> Result<usize> {
    tok.parse().map_err(|_| parse_err(line, format!("invalid index `{tok}`")))
}

pub fn parse_qubo_file(text: &str) -> Result<QuboMatrix> {
    let mut q: Option<QuboMatrix> = None;
    let mut seen = HashSet::new();
    let mut offset_seen = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let Some(q) = q.as_mut() else {
            if toks.len() != 2 || toks[0] != "p" {
                return Err(parse_err(line_no, "expected header `p <n>`"));
            }
            q = Some(QuboMatrix::new(parse_index(toks[1], line_no)?));
            continue;
        };
        match toks.as_slice() {
            ["p", ..] => return Err(parse_err(line_no, "duplicate header")),
            ["o", v] => {
                if offset_seen {
                    return Err(parse_err(line_no, "duplicate offset line"));
                }
                offset_seen = true;
                let v = parse_number(v, line_no)?;
                q.set_offset(v).map_err(|e| parse_err(line_no, e.to_string()))?;
            }
            [i, j, v] => {
                let i = parse_index(i, line_no)?;
                let j = parse_index(j, line_no)?;
                let v = parse_number(v, line_no)?;
                if i > j {
                    return Err(parse_err(line_no, format!("entry ({i}, {j}) has i > j")));
                }
                if j >= q.n() {
                    return Err(parse_err(
                        line_no,
                        format!("entry ({i}, {j}) out of range for n = {}", q.n()),
                    ));
                }
                if !seen.insert((i, j)) {
                    return Err(parse_err(line_no, format!("duplicate entry ({i}, {j})")));
                }
                q.set(i, j, v).map_err(|e| parse_err(line_no, e.to_string()))?;
            }
            _ => return Err(parse_err(line_no, format!("malformed line `{line}`"))),
        }
    }
    q.ok_or_else(|| parse_err(text.lines().count().max(1), "missing header `p <n>`"))
}

/// `Display` for `f64` prints the shortest digit string that round-trips.
pub fn serialize_qubo_file(q: &QuboMatrix) -> String {
    let mut out = String::with_capacity(16 * (q.num_entries() + 2));
    writeln!(out, "p {}", q.n()).unwrap();
    if q.offset() != 0.0 {
        writeln!(out, "o {}", q.offset()).unwrap();
    }
    for (i, j, v) in q.entries() {
        writeln!(out, "{i} {j} {v}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::random_clique_qubo;

    #[test]
    fn parses_grammar_instance() {
        let q = parse_qubo_file("p 2\n0 0 -1\n0 1 2.5\n").unwrap();
        assert_eq!(q.n(), 2);
        assert_eq!(q.num_entries(), 2);
        assert_eq!(q.get(0, 1), 2.5);
    }

    #[test]
    fn comments_offset_and_scientific() {
        let q = parse_qubo_file("# hi\np 3\n# mid\no -2.5e1\n1 2 1e-3\n").unwrap();
        assert_eq!(q.offset(), -25.0);
        assert_eq!(q.get(1, 2), 1e-3);
    }

    #[test]
    fn rejects_bad_input_with_line_numbers() {
        let cases = [
            ("0 1 2.5\n", 1),
            ("p 2\n1 0 1\n", 2),
            ("p 2\n0 2 1\n", 2),
            ("p 2\n0 1 inf\n", 2),
            ("p 2\n0 1 NaN\n", 2),
            ("p 2\n# c\n0 1\n", 3),
            ("p 2\n0 1 1\n0 1 2\n", 3),
            ("p 2\no 1\no 2\n", 3),
            ("p x\n", 1),
            ("", 1),
        ];
        for (text, line) in cases {
            match parse_qubo_file(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn serializer_layout() {
        let mut q = QuboMatrix::new(3);
        q.set(1, 2, 0.1).unwrap();
        q.set(0, 0, -1.0).unwrap();
        q.set_offset(2.0).unwrap();
        assert_eq!(serialize_qubo_file(&q), "p 3\no 2\n0 0 -1\n1 2 0.1\n");
    }

    #[test]
    fn random_instance_round_trips() {
        let q = random_clique_qubo(16, 99).unwrap();
        assert_eq!(parse_qubo_file(&serialize_qubo_file(&q)).unwrap(), q);
    }
}
