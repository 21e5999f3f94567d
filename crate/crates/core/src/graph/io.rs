//! Edge-list text, partition-map text and the `CSR1` binary cache.

use std::io::{BufRead, Read, Write};

use super::partition::PartitionMap;
use super::{Graph, VertexId};
use crate::error::{Error, Result};

const CSR_MAGIC: &[u8; 4] = b"CSR1";

fn parse_id(tok: &str, line: usize, declared: Option<usize>) -> Result<VertexId> {
    let id: i64 = tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("not an integer: {tok:?}"),
    })?;
    let limit = declared.unwrap_or(VertexId::MAX as usize);
    if id < 0 || id as u64 >= limit as u64 {
        return Err(Error::Range {
            id,
            n: declared.unwrap_or(VertexId::MAX as usize),
        });
    }
    Ok(id as VertexId)
}

/// Reads `u v` lines. `#` lines and blank lines are skipped. With
/// `declared_n`, ids must be below it and the graph has exactly that many
/// vertices. Otherwise `n = max id + 1`, raised to the count in a
/// `# vertices N` header if present so isolated tail vertices survive.
pub fn load_edge_list<R: BufRead>(reader: R, declared_n: Option<usize>) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut max_id: Option<VertexId> = None;
    let mut header_n = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if let Some(n) = trimmed.strip_prefix("# vertices ") {
            header_n = n.trim().parse().unwrap_or(0);
            continue;
        }
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut toks = trimmed.split_whitespace();
        let (Some(a), Some(b), None) = (toks.next(), toks.next(), toks.next()) else {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected two ids, got {trimmed:?}"),
            });
        };
        let u = parse_id(a, lineno, declared_n)?;
        let v = parse_id(b, lineno, declared_n)?;
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v));
    }
    let n = declared_n.unwrap_or_else(|| max_id.map_or(0, |m| m as usize + 1).max(header_n));
    Graph::from_undirected_edges(n, &edges)
}

/// Writes each undirected edge once, preceded by a vertex-count comment.
pub fn write_edge_list<W: Write>(g: &Graph, mut w: W) -> Result<()> {
    writeln!(w, "# vertices {}", g.n_vertices())?;
    for (u, v) in g.undirected_edges() {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

pub fn write_csr_binary<W: Write>(g: &Graph, mut w: W) -> Result<()> {
    w.write_all(CSR_MAGIC)?;
    w.write_all(&(g.n_vertices() as u64).to_le_bytes())?;
    w.write_all(&(g.n_arcs() as u64).to_le_bytes())?;
    for &o in g.offsets() {
        w.write_all(&(o as u64).to_le_bytes())?;
    }
    for &t in g.targets() {
        w.write_all(&(t as u64).to_le_bytes())?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated CSR cache: {e}")))?;
    Ok(u64::from_le_bytes(buf))
}

pub fn read_csr_binary<R: Read>(mut r: R) -> Result<Graph> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("missing CSR1 magic".into()))?;
    if &magic != CSR_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let n = read_u64(&mut r)? as usize;
    let m = read_u64(&mut r)? as usize;
    let offsets = (0..=n)
        .map(|_| read_u64(&mut r).map(|x| x as usize))
        .collect::<Result<Vec<_>>>()?;
    let targets = (0..m)
        .map(|_| read_u64(&mut r).map(|x| x as VertexId))
        .collect::<Result<Vec<_>>>()?;
    Graph::from_csr(offsets, targets)
}

/// Reads `vertex_id server_id` lines. Every vertex in `0..n` must appear
/// exactly once.
pub fn load_partition_map<R: BufRead>(reader: R, n: usize) -> Result<PartitionMap> {
    let mut home: Vec<Option<u32>> = vec![None; n];
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected `vertex server`, got {trimmed:?}"),
            });
        }
        let v = parse_id(toks[0], lineno, Some(n))? as usize;
        let s: u32 = toks[1].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad server id {:?}", toks[1]),
        })?;
        if home[v].replace(s).is_some() {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("vertex {v} assigned twice"),
            });
        }
    }
    let home = home
        .into_iter()
        .enumerate()
        .map(|(v, h)| h.ok_or_else(|| Error::Format(format!("vertex {v} has no home"))))
        .collect::<Result<Vec<_>>>()?;
    let n_servers = home.iter().copied().max().map_or(1, |m| m as usize + 1);
    PartitionMap::new(home, n_servers)
}

pub fn write_partition_map<W: Write>(p: &PartitionMap, mut w: W) -> Result<()> {
    for (v, s) in p.homes().iter().enumerate() {
        writeln!(w, "{v} {s}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(s: &str) -> Result<Graph> {
        load_edge_list(s.as_bytes(), None)
    }

    #[test]
    fn path_graph() {
        let g = load("0 1\n1 2").unwrap();
        assert_eq!(g.n_vertices(), 3);
        assert_eq!(g.degree(1), 2);
    }

    #[test]
    fn duplicates_collapse() {
        let g = load("0 1\n0 1\n1 0").unwrap();
        assert_eq!(g.n_edges(), 1);
        assert_eq!(g.degree(0), 1);
    }

    #[test]
    fn comment_and_isolated_vertex() {
        let g = load("# c\n2 0").unwrap();
        assert_eq!(g.n_vertices(), 3);
        assert_eq!(g.neighbors(0), &[2]);
        assert_eq!(g.degree(1), 0);
    }

    #[test]
    fn malformed_line_reports_number() {
        match load("0 1\n\n1 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(load("0 1 2"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn range_errors() {
        assert!(matches!(load("0 -1"), Err(Error::Range { id: -1, .. })));
        assert!(matches!(
            load_edge_list("0 5".as_bytes(), Some(5)),
            Err(Error::Range { id: 5, n: 5 })
        ));
    }

    #[test]
    fn binary_cache_rejects_bad_magic() {
        assert!(matches!(
            read_csr_binary(&b"CSR2\0\0\0\0"[..]),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn partition_file() {
        let p = load_partition_map("0 1\n1 0\n2 1\n".as_bytes(), 3).unwrap();
        assert_eq!(p.homes(), &[1, 0, 1]);
        assert_eq!(p.n_servers(), 2);
        assert!(load_partition_map("0 1\n".as_bytes(), 2).is_err());
        assert!(load_partition_map("0 1\n0 0\n".as_bytes(), 1).is_err());
    }
}
