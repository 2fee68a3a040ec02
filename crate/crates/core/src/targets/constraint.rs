use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::vector::{dist, dot, norm};

type Membership = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Everywhere,
    /// Closed annulus `inner ≤ ‖x‖ ≤ outer`.
    Annulus {
        inner: f64,
        outer: f64,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// Nonzero `x` within `max_angle` of the unit `axis`.
    Cone {
        axis: Vec<f64>,
        max_angle: f64,
    },
    Custom(Membership),
}

/// A set given by a pure membership oracle.
#[derive(Clone)]
pub struct ConstraintSet {
    description: String,
    kind: Kind,
}

impl fmt::Debug for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConstraintSet").field("description", &self.description).finish()
    }
}

impl ConstraintSet {
    pub fn everywhere() -> Self {
        Self { description: "R^d".into(), kind: Kind::Everywhere }
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(invalid("ball radius must be positive"));
        }
        Ok(Self { description: format!("ball(r={radius})"), kind: Kind::Ball { center, radius } })
    }

    pub fn cone(axis: &[f64], max_angle: f64) -> Result<Self> {
        let n = norm(axis);
        if !(n > 0.0) {
            return Err(invalid("cone axis must be nonzero"));
        }
        let axis = axis.iter().map(|a| a / n).collect();
        Ok(Self { description: format!("cone(angle={max_angle})"), kind: Kind::Cone { axis, max_angle } })
    }

    pub fn custom(description: impl Into<String>, f: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        Self { description: description.into(), kind: Kind::Custom(Arc::new(f)) }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.kind {
            Kind::Everywhere => true,
            Kind::Annulus { inner, outer } => {
                let n = norm(x);
                *inner <= n && n <= *outer
            }
            Kind::Ball { center, radius } => dist(x, center) <= *radius,
            Kind::Cone { axis, max_angle } => {
                let n = norm(x);
                n > 0.0 && (dot(x, axis) / n).clamp(-1.0, 1.0).acos() <= *max_angle
            }
            Kind::Custom(f) => f(x),
        }
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn annulus_radii(&self) -> Option<(f64, f64)> {
        match self.kind {
            Kind::Annulus { inner, outer } => Some((inner, outer)),
            _ => None,
        }
    }

    pub fn is_everywhere(&self) -> bool {
        matches!(self.kind, Kind::Everywhere)
    }
}

/// Closed centered annulus `inner ≤ ‖x‖₂ ≤ outer`.
pub fn annulus(inner: f64, outer: f64) -> Result<ConstraintSet> {
    if !(inner > 0.0 && inner < outer && outer.is_finite()) {
        return Err(invalid(format!("annulus needs 0 < inner < outer, got ({inner}, {outer})")));
    }
    Ok(ConstraintSet { description: format!("annulus({inner}, {outer})"), kind: Kind::Annulus { inner, outer } })
}
