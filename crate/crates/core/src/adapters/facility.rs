//! Online facility location on the box-constrained engine: `y_i` opens
//! facility `i` (cost `o_i`), `x_ij` assigns client `j` to it (cost `d(r_j, f_i)`),
//! and each client brings the row `Σ_i x_ij >= 1`.

use super::{check_weights, AdapterError};
use crate::box_engine::{BoxSuggestion, BoxSuggestionSet};
use crate::model::{Assignment, SparseConstraint};
use crate::tolerance::Tolerances;

/// Slack on the metric checks.
pub const METRIC_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct FacilityInstance {
    distances: Vec<Vec<f64>>,
    facilities: Vec<usize>,
    opening: Vec<f64>,
    clients: Vec<usize>,
}

/// Checks non-negativity, symmetry and the triangle inequality.
pub fn validate_metric(d: &[Vec<f64>]) -> Result<(), AdapterError> {
    let n = d.len();
    let fail = |detail: String| Err(AdapterError::NotMetric { detail });
    for (u, row) in d.iter().enumerate() {
        if row.len() != n {
            return fail(format!("row {u} has {} entries, expected {n}", row.len()));
        }
        for (v, &duv) in row.iter().enumerate() {
            if !duv.is_finite() || duv < -METRIC_TOLERANCE {
                return fail(format!("d({u},{v}) = {duv}"));
            }
            if (duv - d[v][u]).abs() > METRIC_TOLERANCE {
                return fail(format!("d({u},{v}) = {duv} but d({v},{u}) = {}", d[v][u]));
            }
        }
        if row[u].abs() > METRIC_TOLERANCE {
            return fail(format!("d({u},{u}) = {}", row[u]));
        }
    }
    for u in 0..n {
        for v in 0..n {
            for w in 0..n {
                if d[u][w] > d[u][v] + d[v][w] + METRIC_TOLERANCE {
                    return fail(format!(
                        "d({u},{w}) = {} > d({u},{v}) + d({v},{w}) = {}",
                        d[u][w],
                        d[u][v] + d[v][w]
                    ));
                }
            }
        }
    }
    Ok(())
}

impl FacilityInstance {
    /// `distances` is over all points; facilities and clients are point indices.
    pub fn new(
        distances: Vec<Vec<f64>>,
        facilities: Vec<usize>,
        opening: Vec<f64>,
        clients: Vec<usize>,
    ) -> Result<Self, AdapterError> {
        validate_metric(&distances)?;
        check_weights("facility", &opening, false)?;
        let points = distances.len();
        if facilities.len() != opening.len() {
            return Err(AdapterError::FractionalLength {
                expected: facilities.len(),
                found: opening.len(),
            });
        }
        if let Some(&point) = facilities.iter().chain(&clients).find(|&&p| p >= points) {
            return Err(AdapterError::UnknownPoint { point, points });
        }
        Ok(Self {
            distances,
            facilities,
            opening,
            clients,
        })
    }

    /// Euclidean instance over planar points.
    pub fn euclidean(
        points: &[(f64, f64)],
        facilities: Vec<usize>,
        opening: Vec<f64>,
        clients: Vec<usize>,
    ) -> Result<Self, AdapterError> {
        let distances = points
            .iter()
            .map(|a| points.iter().map(|b| (a.0 - b.0).hypot(a.1 - b.1)).collect())
            .collect();
        Self::new(distances, facilities, opening, clients)
    }

    pub fn facility_count(&self) -> usize {
        self.facilities.len()
    }

    pub fn opening(&self) -> &[f64] {
        &self.opening
    }

    pub fn clients(&self) -> &[usize] {
        &self.clients
    }

    pub fn facilities(&self) -> &[usize] {
        &self.facilities
    }

    pub fn distances(&self) -> &[Vec<f64>] {
        &self.distances
    }

    /// Distance from client `j` (stream position) to facility `i`.
    pub fn distance(&self, j: usize, i: usize) -> f64 {
        self.distances[self.clients[j]][self.facilities[i]].max(0.0)
    }
}

/// Engine inputs for one client.
#[derive(Debug, Clone, PartialEq)]
pub struct FacilityStep {
    pub constraint: SparseConstraint,
    pub d: Vec<(usize, f64)>,
    pub suggestions: BoxSuggestionSet,
}

/// Row `Σ_i x_ij >= 1` and distances for client `j`, with tightened suggestions.
pub fn facility_step(
    instance: &FacilityInstance,
    j: usize,
    raw: &[BoxSuggestion],
    tol: &Tolerances,
) -> Result<FacilityStep, AdapterError> {
    let n = instance.facility_count();
    let constraint = SparseConstraint::new(j, (0..n).map(|i| (i, 1.0)).collect(), n)?;
    let d = (0..n).map(|i| (i, instance.distance(j, i))).collect();
    let suggestions = BoxSuggestionSet::tightened(&constraint, raw, tol)?;
    Ok(FacilityStep {
        constraint,
        d,
        suggestions,
    })
}

/// Suggestion that opens facility `i` fully and assigns the client to it.
pub fn open_and_assign(i: usize) -> BoxSuggestion {
    let a = Assignment::new(vec![(i, 1.0)]).expect("unit entry");
    BoxSuggestion { y: a.clone(), x: a }
}
