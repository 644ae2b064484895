//! Plain-text edge lists: a header `N M self_loops` followed by `M` lines
//! `u v`, 0-based and sorted.

use std::io::{BufRead, Write};

use super::{Graph, GraphError};

pub fn write_edge_list<W: Write>(g: &Graph, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "{} {} {}",
        g.node_count(),
        g.arc_count(),
        u8::from(g.has_self_loops())
    )?;
    for (u, v) in g.arcs() {
        writeln!(w, "{u} {v}")?;
    }
    w.flush()
}

pub fn read_edge_list<R: BufRead>(r: R) -> Result<Graph, GraphError> {
    let mut lines = r
        .lines()
        .map(|l| l.map_err(|e| GraphError::Parse(e.to_string())))
        .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let header = lines
        .next()
        .ok_or_else(|| GraphError::Parse("missing header".into()))??;
    let fields = parse_fields(&header, 3)?;
    let (n, m, loops) = (fields[0], fields[1], fields[2]);
    if loops > 1 {
        return Err(GraphError::Parse(format!("self_loops flag must be 0 or 1, got {loops}")));
    }
    let mut arcs = Vec::with_capacity(m);
    for line in lines {
        let f = parse_fields(&line?, 2)?;
        arcs.push((f[0], f[1]));
    }
    if arcs.len() != m {
        return Err(GraphError::Parse(format!(
            "header declares {m} arcs, found {}",
            arcs.len()
        )));
    }
    let g = Graph::build_from_arcs(n, arcs)?;
    if g.has_self_loops() != (loops == 1) {
        return Err(GraphError::Parse(
            "self_loops flag disagrees with the arc list".into(),
        ));
    }
    Ok(g)
}

fn parse_fields(line: &str, count: usize) -> Result<Vec<usize>, GraphError> {
    let fields: Vec<usize> = line
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| GraphError::Parse(format!("not a non-negative integer: {t:?}")))
        })
        .collect::<Result<_, _>>()?;
    if fields.len() != count {
        return Err(GraphError::Parse(format!(
            "expected {count} fields in line {line:?}"
        )));
    }
    Ok(fields)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_complete, gen_er};
    use proptest::prelude::*;

    #[test]
    fn format_is_exact() {
        let g = gen_complete(2, true).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "2 4 1\n0 0\n0 1\n1 0\n1 1\n");
    }

    #[test]
    fn malformed_inputs() {
        assert!(read_edge_list("".as_bytes()).is_err());
        assert!(read_edge_list("3 1 0\n0 1\n0 2\n".as_bytes()).is_err());
        assert!(read_edge_list("3 1 0\n0 0\n".as_bytes()).is_err());
        assert!(read_edge_list("3 1 2\n0 1\n".as_bytes()).is_err());
        assert!(read_edge_list("3 1 0\n0 x\n".as_bytes()).is_err());
        assert!(matches!(
            read_edge_list("3 1 0\n0 7\n".as_bytes()),
            Err(GraphError::OutOfRange { .. })
        ));
    }

    proptest! {
        #[test]
        fn round_trip_is_byte_exact(n in 2usize..40, p in 0.2f64..1.0, seed in 0u64..1000) {
            let Ok(g) = gen_er(n, p, seed) else { return Ok(()); };
            let mut first = Vec::new();
            write_edge_list(&g, &mut first).unwrap();
            let back = read_edge_list(first.as_slice()).unwrap();
            prop_assert_eq!(&back, &g);
            let mut second = Vec::new();
            write_edge_list(&back, &mut second).unwrap();
            prop_assert_eq!(first, second);
        }
    }
}
