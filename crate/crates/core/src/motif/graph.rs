use std::collections::VecDeque;

use super::{CandidateMotif, Occurrence};
use crate::dtw::{pairwise_distances, similarity_from_distance, SimilarityConfig};
use crate::error::Result;

/// Undirected graph over candidates; an edge exists only where similarity
/// strictly exceeds the threshold and carries that similarity as weight.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    n_vertices: usize,
    /// `(i, j, w)` with `i < j`, sorted.
    edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<usize>>,
}

impl SimilarityGraph {
    pub fn from_similarity(similarity: &[Vec<f64>], threshold: f64) -> Self {
        let n = similarity.len();
        let mut edges = Vec::new();
        let mut adjacency = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                let w = similarity[i][j];
                if w > threshold {
                    edges.push((i, j, w));
                    adjacency[i].push(j);
                    adjacency[j].push(i);
                }
            }
        }
        Self {
            n_vertices: n,
            edges,
            adjacency,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Edge weight, 0 when absent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.edges
            .binary_search_by(|e| (e.0, e.1).cmp(&(a, b)))
            .map(|k| self.edges[k].2)
            .unwrap_or(0.0)
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }
}

/// Full similarity matrix with unit diagonal.
pub fn similarity_matrix(seqs: &[Vec<f64>], config: &SimilarityConfig) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    let mut m = pairwise_distances(seqs, config)?;
    for row in &mut m {
        for v in row.iter_mut() {
            *v = similarity_from_distance(*v, config.sigma);
        }
    }
    Ok(m)
}

pub fn build_similarity_graph(
    candidates: &[CandidateMotif],
    tau_g: f64,
    config: &SimilarityConfig,
) -> Result<SimilarityGraph> {
    let seqs: Vec<Vec<f64>> = candidates.iter().map(|c| c.values.clone()).collect();
    Ok(SimilarityGraph::from_similarity(
        &similarity_matrix(&seqs, config)?,
        tau_g,
    ))
}

/// Maximal connected vertex sets, each sorted, ordered by smallest vertex.
pub fn connected_components(graph: &SimilarityGraph) -> Vec<Vec<usize>> {
    let n = graph.n_vertices();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut component = vec![root];
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &u in graph.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    component.push(u);
                    queue.push_back(u);
                }
            }
        }
        component.sort_unstable();
        out.push(component);
    }
    out
}

/// One prototype per component: the member with the highest mean
/// similarity to all members (itself included), lowest index on ties.
///
/// The prototype keeps its own values and scale but takes over the summed
/// cluster support and the merged occurrence list of the whole component.
/// Returns the prototypes along with the candidate index each came from.
pub fn select_prototypes(
    components: &[Vec<usize>],
    candidates: &[CandidateMotif],
    similarity: &[Vec<f64>],
) -> Vec<(usize, CandidateMotif)> {
    components
        .iter()
        .map(|members| {
            let mut best = members[0];
            let mut best_score = f64::NEG_INFINITY;
            for &i in members {
                let score = members.iter().map(|&j| similarity[i][j]).sum::<f64>() / members.len() as f64;
                if score > best_score {
                    best_score = score;
                    best = i;
                }
            }
            let mut occurrences: Vec<Occurrence> = members
                .iter()
                .flat_map(|&j| candidates[j].occurrences.iter().copied())
                .collect();
            occurrences.sort_unstable();
            occurrences.dedup();
            let mut proto = candidates[best].clone();
            proto.cluster_support = members.iter().map(|&j| candidates[j].cluster_support).sum();
            proto.occurrences = occurrences;
            (best, proto)
        })
        .collect()
}
