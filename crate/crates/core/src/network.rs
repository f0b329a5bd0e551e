//! Hypergraph description of source topologies.
//!
//! A network is a set of sources over parties `0..n`; each source lists the
//! parties it distributes systems to. Party indices inside a source are kept
//! sorted, and every party must be reached by at least one source.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    n_parties: usize,
    sources: Vec<Vec<usize>>,
}

impl Network {
    pub fn new(n_parties: usize, sources: Vec<Vec<usize>>) -> Result<Self> {
        if n_parties == 0 {
            return Err(Error::Invalid("network needs at least one party".into()));
        }
        if sources.is_empty() {
            return Err(Error::Invalid("network needs at least one source".into()));
        }
        let mut canon = Vec::with_capacity(sources.len());
        let mut covered = vec![false; n_parties];
        for (e, raw) in sources.into_iter().enumerate() {
            if raw.is_empty() {
                return Err(Error::Invalid(format!("source {e} is empty")));
            }
            let mut s = raw;
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Invalid(format!("source {e} repeats a party")));
            }
            if *s.last().unwrap() >= n_parties {
                return Err(Error::Invalid(format!(
                    "source {e} names party {} but the network has {} parties",
                    s.last().unwrap(),
                    n_parties
                )));
            }
            for &p in &s {
                covered[p] = true;
            }
            canon.push(s);
        }
        if let Some(p) = covered.iter().position(|&c| !c) {
            return Err(Error::Invalid(format!("party {p} is not covered by any source")));
        }
        Ok(Network {
            n_parties,
            sources: canon,
        })
    }

    /// Three parties, three bipartite sources, each source skipping one party.
    pub fn triangle() -> Self {
        Network::new(3, vec![vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap()
    }

    /// Ring of `n` parties with bipartite sources between neighbours.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Invalid("cycle needs at least three parties".into()));
        }
        let sources = (0..n).map(|i| vec![i, (i + 1) % n]).collect();
        Network::new(n, sources)
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn sources(&self) -> &[Vec<usize>] {
        &self.sources
    }

    pub fn source(&self, e: usize) -> &[usize] {
        &self.sources[e]
    }

    /// Number of sources reaching party `i`.
    pub fn degree(&self, i: usize) -> usize {
        self.sources.iter().filter(|s| s.contains(&i)).count()
    }

    /// Indices of the sources reaching both `i` and `j` (all sources through
    /// `i` when `i == j`). Empty result is legitimate: such a pair shares no
    /// source.
    pub fn sources_covering(&self, i: usize, j: usize) -> Result<Vec<usize>> {
        if i >= self.n_parties || j >= self.n_parties {
            return Err(Error::Invalid(format!(
                "party pair ({i},{j}) out of range for {} parties",
                self.n_parties
            )));
        }
        Ok(self
            .sources
            .iter()
            .enumerate()
            .filter(|(_, s)| s.contains(&i) && s.contains(&j))
            .map(|(e, _)| e)
            .collect())
    }

    pub fn max_source_size(&self) -> usize {
        self.sources.iter().map(|s| s.len()).max().unwrap_or(0)
    }

    /// Row indices of the covariance block supported by source `e`, given the
    /// per-party observable counts.
    pub fn block_projector_indices(&self, m_sizes: &[usize], e: usize) -> Result<Vec<usize>> {
        if m_sizes.len() != self.n_parties {
            return Err(Error::Shape(format!(
                "{} observable counts for {} parties",
                m_sizes.len(),
                self.n_parties
            )));
        }
        if e >= self.sources.len() {
            return Err(Error::Invalid(format!("no source {e}")));
        }
        let mut offsets = vec![0usize; self.n_parties + 1];
        for i in 0..self.n_parties {
            offsets[i + 1] = offsets[i] + m_sizes[i];
        }
        let mut rows = Vec::new();
        for &p in &self.sources[e] {
            rows.extend(offsets[p]..offsets[p + 1]);
        }
        Ok(rows)
    }
}

/// A collection of alternative topologies a mixed preparation may draw from.
/// Either listed explicitly or summarized by the worst-case counts that the
/// mixture criterion needs.
#[derive(Clone, Debug)]
pub enum NetworkFamily {
    Members(Vec<Network>),
    Summary {
        n_parties: usize,
        max_tripartite: usize,
    },
}

impl NetworkFamily {
    pub fn n_parties(&self) -> Result<usize> {
        match self {
            NetworkFamily::Members(members) => {
                let first = members
                    .first()
                    .ok_or_else(|| Error::Invalid("empty network family".into()))?
                    .n_parties();
                if members.iter().any(|g| g.n_parties() != first) {
                    return Err(Error::Invalid(
                        "family members disagree on the number of parties".into(),
                    ));
                }
                Ok(first)
            }
            NetworkFamily::Summary { n_parties, .. } => Ok(*n_parties),
        }
    }

    /// Largest number of tripartite sources any member uses. Errors if a
    /// member has a source with more than three parties, since the mixture
    /// criterion only covers bi- and tripartite sources.
    pub fn tripartite_budget(&self) -> Result<usize> {
        match self {
            NetworkFamily::Members(members) => {
                if members.is_empty() {
                    return Err(Error::Invalid("empty network family".into()));
                }
                let mut worst = 0;
                for g in members {
                    if g.max_source_size() > 3 {
                        return Err(Error::Invalid(
                            "family contains a source with more than three parties".into(),
                        ));
                    }
                    let c3 = g.sources().iter().filter(|s| s.len() == 3).count();
                    worst = worst.max(c3);
                }
                Ok(worst)
            }
            NetworkFamily::Summary { max_tripartite, .. } => Ok(*max_tripartite),
        }
    }
}
