use std::fmt::Write as _;

use super::{IsingInstance, Literal, SatInstance};
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// DIMACS CNF text.
pub fn write_dimacs(inst: &SatInstance) -> String {
    let mut out = format!("p cnf {} {}\n", inst.n(), inst.clauses().len());
    for c in inst.clauses() {
        let _ = writeln!(out, "{} {} {} 0", c[0].to_dimacs(), c[1].to_dimacs(), c[2].to_dimacs());
    }
    out
}

/// Parse DIMACS CNF. Every clause must have exactly three distinct variables.
pub fn read_dimacs(text: &str) -> Result<SatInstance> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<i64> = Vec::new();
    let mut current_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if line.starts_with('p') {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[1] != "cnf" {
                return Err(parse_err(lineno, "expected `p cnf <vars> <clauses>`"));
            }
            let n = parts[2].parse().map_err(|_| parse_err(lineno, "bad variable count"))?;
            let m = parts[3].parse().map_err(|_| parse_err(lineno, "bad clause count"))?;
            header = Some((n, m));
            continue;
        }
        let (n, _) = header.ok_or_else(|| parse_err(lineno, "clause before header"))?;
        for tok in line.split_whitespace() {
            let lit: i64 = tok
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad literal `{tok}`")))?;
            if current.is_empty() {
                current_line = lineno;
            }
            if lit == 0 {
                if current.len() != 3 {
                    return Err(parse_err(
                        current_line,
                        format!("clause has {} literals, need 3", current.len()),
                    ));
                }
                let mut c = [Literal::new(0, true); 3];
                for (slot, &l) in c.iter_mut().zip(&current) {
                    let var = l.unsigned_abs() as usize;
                    if var > n {
                        return Err(parse_err(current_line, format!("variable {var} exceeds {n}")));
                    }
                    *slot = Literal::new(var - 1, l > 0);
                }
                clauses.push(c);
                current.clear();
            } else {
                current.push(lit);
            }
        }
    }
    let (n, m) = header.ok_or_else(|| parse_err(0, "missing header"))?;
    if !current.is_empty() {
        return Err(parse_err(current_line, "unterminated clause"));
    }
    if clauses.len() != m {
        return Err(parse_err(0, format!("header says {m} clauses, found {}", clauses.len())));
    }
    SatInstance::new(n, clauses).map_err(|e| parse_err(0, e.to_string()))
}

/// Upper-triangle `i j J_ij` lines, 1-indexed. Zero couplings are skipped.
pub fn write_ising_triplets(inst: &IsingInstance) -> String {
    let mut out = String::new();
    for a in 0..inst.n() {
        for b in a + 1..inst.n() {
            let v = inst.coupling(a, b);
            if v != 0.0 {
                let _ = writeln!(out, "{} {} {}", a + 1, b + 1, v);
            }
        }
    }
    out
}

/// Parse triplets into an `n`-spin instance, mirroring each entry.
pub fn read_ising_triplets(text: &str, n: usize) -> Result<IsingInstance> {
    let mut j = vec![0.0; n * n];
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(parse_err(lineno, "expected `i j J_ij`"));
        }
        let a: usize = parts[0].parse().map_err(|_| parse_err(lineno, "bad index"))?;
        let b: usize = parts[1].parse().map_err(|_| parse_err(lineno, "bad index"))?;
        let v: f64 = parts[2].parse().map_err(|_| parse_err(lineno, "bad coupling"))?;
        if a == 0 || b == 0 || a > n || b > n || a == b {
            return Err(parse_err(lineno, format!("index pair ({a}, {b}) out of range for n = {n}")));
        }
        j[(a - 1) * n + (b - 1)] = v;
        j[(b - 1) * n + (a - 1)] = v;
    }
    IsingInstance::from_dense(n, j).map_err(|e| parse_err(0, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cosolvers::{generate_random_3sat, generate_sk};
    use crate::numeric::RngStream;

    #[test]
    fn dimacs_roundtrip() {
        let inst = generate_random_3sat(30, 4.0, &mut RngStream::new(6)).unwrap();
        let text = write_dimacs(&inst);
        assert!(text.starts_with("p cnf 30 120\n"));
        assert_eq!(read_dimacs(&text).unwrap(), inst);
    }

    #[test]
    fn dimacs_comments_and_wrapping() {
        let text = "c hello\np cnf 4 2\n1 -2\n3 0 -4 2 1 0\n";
        let inst = read_dimacs(text).unwrap();
        assert_eq!(inst.clauses().len(), 2);
        assert_eq!(inst.clauses()[0][1], Literal::new(1, false));
    }

    #[test]
    fn dimacs_errors() {
        assert!(read_dimacs("1 2 3 0\n").is_err());
        assert!(read_dimacs("p cnf 3 1\n1 2 0\n").is_err());
        assert!(read_dimacs("p cnf 3 1\n1 2 9 0\n").is_err());
        assert!(read_dimacs("p cnf 3 2\n1 2 3 0\n").is_err());
        assert!(read_dimacs("p cnf 3 1\n1 1 3 0\n").is_err());
    }

    #[test]
    fn triplet_roundtrip() {
        let inst = generate_sk(9, &mut RngStream::new(2)).unwrap();
        let text = write_ising_triplets(&inst);
        assert_eq!(text.lines().count(), 36);
        assert_eq!(read_ising_triplets(&text, 9).unwrap(), inst);
        assert!(read_ising_triplets("1 1 0.5\n", 3).is_err());
        assert!(read_ising_triplets("1 4 0.5\n", 3).is_err());
    }
}
