//! CSV samples of an edge's rationally feasible efficient path.

use thiserror::Error;

use crate::model::{EdgeIdx, Instance};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("edge index {edge} out of range ({n_edges} edges)")]
    UnknownEdge { edge: EdgeIdx, n_edges: usize },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// `n_samples` rows `s,u_i,u_j,m_i,m_j` at uniformly spaced `s` in `[0, 1]`.
pub fn export_frontier(instance: &Instance, edge: EdgeIdx, n_samples: usize) -> Result<String, ExportError> {
    if edge >= instance.edges().len() {
        return Err(ExportError::UnknownEdge {
            edge,
            n_edges: instance.edges().len(),
        });
    }
    if n_samples < 2 {
        return Err(ExportError::TooFewSamples(n_samples));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["s", "u_i", "u_j", "m_i", "m_j"])?;
    for p in instance.frontier(edge).sample_rq(n_samples) {
        w.write_record([p.s, p.u_i, p.u_j, p.exchange.m_i, p.exchange.m_j].map(|v| v.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv of numbers is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn rows(text: &str) -> Vec<Vec<f64>> {
        text.lines()
            .skip(1)
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect()
    }

    #[test]
    fn three_samples_on_sqrt_edge() {
        let text = export_frontier(&fixtures::sqrt_single_edge(), 0, 3).unwrap();
        assert!(text.starts_with("s,u_i,u_j,m_i,m_j\n"));
        let r = rows(&text);
        assert_eq!(r.len(), 3);
        assert_eq!([r[0][0], r[1][0], r[2][0]], [0.0, 0.5, 1.0]);
        assert_eq!(r[0][1], 0.0);
        assert!((r[0][2] - 0.732_051).abs() < 1e-6);
        assert!((r[1][1] - 0.366_025).abs() < 1e-6);
        // On the capacity line: u_j = 2 sqrt(1 - ((u_i + 1) / 2)^2) - 1.
        assert!((r[1][2] - 0.460_813).abs() < 1e-6);
        assert!((r[2][1] - 0.732_051).abs() < 1e-6);
        assert!(r[2][2].abs() < 1e-9);
    }

    #[test]
    fn columns_are_monotone() {
        for (_, inst) in fixtures::frontier_fixtures() {
            let r = rows(&export_frontier(&inst, 0, 50).unwrap());
            assert_eq!(r[0][1], 0.0);
            assert!(r[49][2].abs() < 1e-8);
            for w in r.windows(2) {
                assert!(w[1][1] >= w[0][1] && w[1][2] <= w[0][2]);
            }
        }
    }

    #[test]
    fn errors() {
        let inst = fixtures::sqrt_single_edge();
        assert!(matches!(export_frontier(&inst, 3, 5), Err(ExportError::UnknownEdge { .. })));
        assert!(matches!(export_frontier(&inst, 0, 1), Err(ExportError::TooFewSamples(1))));
    }
}
