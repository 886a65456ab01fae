//! Lifted algorithm states.
//!
//! An algorithm's Markov state is the iterate `x` plus whatever extra
//! information makes the recursion Markov: the previous iterate for
//! momentum-style pairs, or a table of proxy points for stored past gradient
//! evaluations. The shape is fixed per algorithm and never changes along a
//! trajectory.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-index proxy points over a fixed index set.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxyTable {
    /// Sorted component indices this table covers.
    pub indices: Vec<usize>,
    /// One point per covered index, same order.
    pub points: Vec<DVector<f64>>,
}

impl ProxyTable {
    pub fn new(indices: Vec<usize>, points: Vec<DVector<f64>>) -> Result<Self> {
        if indices.len() != points.len() {
            return Err(Error::Shape(format!(
                "proxy table: {} indices vs {} points",
                indices.len(),
                points.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Shape("proxy table indices must be strictly increasing".into()));
        }
        Ok(ProxyTable { indices, points })
    }

    /// All indices covered with the same point.
    pub fn constant(indices: Vec<usize>, point: &DVector<f64>) -> Result<Self> {
        let points = vec![point.clone(); indices.len()];
        ProxyTable::new(indices, points)
    }

    /// Position of component `n` in the table, if covered.
    pub fn position(&self, n: usize) -> Option<usize> {
        self.indices.binary_search(&n).ok()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Shape signature of a lifted state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateShape {
    pub dim: usize,
    pub has_prev: bool,
    /// Index set of the proxy table, when one is carried.
    pub proxy_indices: Option<Vec<usize>>,
}

impl StateShape {
    /// Canonical lifting of a bare point into this shape: `prev = x` and
    /// every proxy initialized to `x`.
    pub fn lift(&self, x: DVector<f64>) -> Result<LiftedState> {
        if x.len() != self.dim {
            return Err(Error::Shape(format!(
                "cannot lift a {}-vector into a dim-{} state",
                x.len(),
                self.dim
            )));
        }
        let prev = self.has_prev.then(|| x.clone());
        let proxies = match &self.proxy_indices {
            None => None,
            Some(indices) => Some(ProxyTable::constant(indices.clone(), &x)?),
        };
        Ok(LiftedState { x, prev, proxies })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LiftedStateRepr", into = "LiftedStateRepr")]
pub struct LiftedState {
    /// Current iterate.
    pub x: DVector<f64>,
    /// Previous iterate, for pair liftings.
    pub prev: Option<DVector<f64>>,
    /// Proxy table, for stored-gradient liftings.
    pub proxies: Option<ProxyTable>,
}

impl LiftedState {
    pub fn point(x: DVector<f64>) -> Self {
        LiftedState { x, prev: None, proxies: None }
    }

    pub fn pair(x: DVector<f64>, prev: DVector<f64>) -> Self {
        LiftedState { x, prev: Some(prev), proxies: None }
    }

    pub fn with_proxies(x: DVector<f64>, proxies: ProxyTable) -> Self {
        LiftedState { x, prev: None, proxies: Some(proxies) }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn shape(&self) -> StateShape {
        StateShape {
            dim: self.x.len(),
            has_prev: self.prev.is_some(),
            proxy_indices: self.proxies.as_ref().map(|t| t.indices.clone()),
        }
    }

    pub fn same_shape(&self, other: &LiftedState) -> bool {
        self.shape() == other.shape()
    }

    pub fn check_shape(&self, expected: &StateShape) -> Result<()> {
        if self.shape() != *expected {
            return Err(Error::Shape(format!(
                "state shape {:?} does not match expected {:?}",
                self.shape(),
                expected
            )));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        let finite = |v: &DVector<f64>| v.iter().all(|x| x.is_finite());
        finite(&self.x)
            && self.prev.as_ref().map_or(true, finite)
            && self
                .proxies
                .as_ref()
                .map_or(true, |t| t.points.iter().all(finite))
    }

    /// Componentwise bitwise equality (the case split `V = 0 iff s = s'` is
    /// applied on exact equality, before any objective evaluation).
    pub fn identical(&self, other: &LiftedState) -> bool {
        if !self.same_shape(other) {
            return false;
        }
        let eq = |a: &DVector<f64>, b: &DVector<f64>| a.iter().zip(b.iter()).all(|(x, y)| x == y);
        if !eq(&self.x, &other.x) {
            return false;
        }
        if let (Some(p), Some(q)) = (&self.prev, &other.prev) {
            if !eq(p, q) {
                return false;
            }
        }
        if let (Some(p), Some(q)) = (&self.proxies, &other.proxies) {
            if !p.points.iter().zip(q.points.iter()).all(|(a, b)| eq(a, b)) {
                return false;
            }
        }
        true
    }

    /// Concatenation of all components into one flat vector
    /// (x, then prev, then proxy points in index order).
    pub fn concat(&self) -> DVector<f64> {
        let mut out = Vec::with_capacity(self.flat_len());
        out.extend_from_slice(self.x.as_slice());
        if let Some(p) = &self.prev {
            out.extend_from_slice(p.as_slice());
        }
        if let Some(t) = &self.proxies {
            for pt in &t.points {
                out.extend_from_slice(pt.as_slice());
            }
        }
        DVector::from_vec(out)
    }

    pub fn flat_len(&self) -> usize {
        self.x.len()
            + self.prev.as_ref().map_or(0, |p| p.len())
            + self
                .proxies
                .as_ref()
                .map_or(0, |t| t.points.iter().map(|p| p.len()).sum())
    }

    /// Euclidean norm of the concatenated state.
    pub fn norm(&self) -> f64 {
        self.concat().norm()
    }
}

#[derive(Serialize, Deserialize)]
struct ProxyRepr {
    indices: Vec<usize>,
    points: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct LiftedStateRepr {
    x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prev: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    proxies: Option<ProxyRepr>,
}

impl From<LiftedState> for LiftedStateRepr {
    fn from(s: LiftedState) -> Self {
        LiftedStateRepr {
            x: s.x.as_slice().to_vec(),
            prev: s.prev.map(|p| p.as_slice().to_vec()),
            proxies: s.proxies.map(|t| ProxyRepr {
                indices: t.indices,
                points: t.points.into_iter().map(|p| p.as_slice().to_vec()).collect(),
            }),
        }
    }
}

impl TryFrom<LiftedStateRepr> for LiftedState {
    type Error = Error;

    fn try_from(r: LiftedStateRepr) -> Result<Self> {
        let proxies = match r.proxies {
            None => None,
            Some(p) => Some(ProxyTable::new(
                p.indices,
                p.points.into_iter().map(DVector::from_vec).collect(),
            )?),
        };
        Ok(LiftedState {
            x: DVector::from_vec(r.x),
            prev: r.prev.map(DVector::from_vec),
            proxies,
        })
    }
}
