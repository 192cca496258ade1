//! Directions on the unit sphere and ordered point sets.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ANGLE_SLOP: f64 = 1e-12;

/// How the first angle of a [`Direction`] is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Convention {
    /// Polar angle (colatitude) from the +z axis, in `[0, π]`.
    #[serde(rename = "from_z")]
    FromZAxis,
    /// Elevation above the xy plane, in `[-π/2, π/2]`.
    #[serde(rename = "above_xy")]
    AboveXyPlane,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    pub theta: f64,
    /// Azimuth, normalized into `[0, 2π)`.
    pub phi: f64,
    pub convention: Convention,
}

fn wrap_azimuth(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    // rem_euclid can return exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

impl Direction {
    pub fn new(theta: f64, phi: f64, convention: Convention) -> Self {
        Self {
            theta,
            phi: wrap_azimuth(phi),
            convention,
        }
    }

    pub fn from_z(theta: f64, phi: f64) -> Self {
        Self::new(theta, phi, Convention::FromZAxis)
    }

    pub fn above_xy(elevation: f64, phi: f64) -> Self {
        Self::new(elevation, phi, Convention::AboveXyPlane)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta.is_finite() || !self.phi.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite direction ({}, {})",
                self.theta, self.phi
            )));
        }
        let (lo, hi) = match self.convention {
            Convention::FromZAxis => (0.0, PI),
            Convention::AboveXyPlane => (-FRAC_PI_2, FRAC_PI_2),
        };
        if self.theta < lo - ANGLE_SLOP || self.theta > hi + ANGLE_SLOP {
            return Err(Error::InvalidInput(format!(
                "theta {} outside [{lo}, {hi}] for {:?}",
                self.theta, self.convention
            )));
        }
        Ok(())
    }

    /// Polar angle measured from +z.
    pub fn polar(&self) -> f64 {
        match self.convention {
            Convention::FromZAxis => self.theta,
            Convention::AboveXyPlane => FRAC_PI_2 - self.theta,
        }
    }

    /// Elevation above the xy plane.
    pub fn elevation(&self) -> f64 {
        match self.convention {
            Convention::FromZAxis => FRAC_PI_2 - self.theta,
            Convention::AboveXyPlane => self.theta,
        }
    }

    pub fn to_convention(self, convention: Convention) -> Self {
        let theta = match convention {
            Convention::FromZAxis => self.polar(),
            Convention::AboveXyPlane => self.elevation(),
        };
        Self {
            theta,
            phi: self.phi,
            convention,
        }
    }

    pub fn to_cartesian(&self) -> Vector3<f64> {
        let t = self.polar();
        Vector3::new(t.sin() * self.phi.cos(), t.sin() * self.phi.sin(), t.cos())
    }

    /// Direction of a nonzero vector. The azimuth of a pole is reported as 0.
    pub fn from_cartesian(v: &Vector3<f64>, convention: Convention) -> Result<Self> {
        let r = v.norm();
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidInput("zero or non-finite vector".into()));
        }
        let z = (v.z / r).clamp(-1.0, 1.0);
        let polar = z.acos();
        let phi = if v.x == 0.0 && v.y == 0.0 { 0.0 } else { v.y.atan2(v.x) };
        Ok(Self::from_z(polar, phi).to_convention(convention))
    }
}

/// An ordered set of sampling directions sharing one angle convention.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    directions: Vec<Direction>,
    convention: Convention,
    labels: Option<Vec<usize>>,
}

impl PointSet {
    pub fn new(directions: Vec<Direction>, convention: Convention) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::InvalidInput("point set must be non-empty".into()));
        }
        for d in &directions {
            if d.convention != convention {
                return Err(Error::InvalidInput(
                    "all directions of a point set must share one convention".into(),
                ));
            }
            d.validate()?;
        }
        Ok(Self {
            directions,
            convention,
            labels: None,
        })
    }

    pub fn from_angles(angles: &[(f64, f64)], convention: Convention) -> Result<Self> {
        let dirs = angles.iter().map(|&(t, p)| Direction::new(t, p, convention)).collect();
        Self::new(dirs, convention)
    }

    pub fn from_cartesian(points: &[Vector3<f64>], convention: Convention) -> Result<Self> {
        let dirs = points
            .iter()
            .map(|v| Direction::from_cartesian(v, convention))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dirs, convention)
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.directions.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} points",
                labels.len(),
                self.directions.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn to_convention(&self, convention: Convention) -> Self {
        Self {
            directions: self.directions.iter().map(|d| d.to_convention(convention)).collect(),
            convention,
            labels: self.labels.clone(),
        }
    }

    pub fn cartesian(&self) -> Vec<Vector3<f64>> {
        self.directions.iter().map(Direction::to_cartesian).collect()
    }

    /// Subset in the given order; labels follow their points.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("empty selection".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::InvalidInput(format!(
                "index {bad} out of range for {} points",
                self.len()
            )));
        }
        Ok(Self {
            directions: indices.iter().map(|&i| self.directions[i]).collect(),
            convention: self.convention,
            labels: self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect()),
        })
    }

    /// Rigid rotation of every point (geometric, via Cartesian coordinates).
    pub fn rotated(&self, rotation: &Matrix3<f64>) -> Result<Self> {
        let pts: Vec<_> = self.cartesian().iter().map(|v| rotation * v).collect();
        let mut out = Self::from_cartesian(&pts, self.convention)?;
        out.labels = self.labels.clone();
        Ok(out)
    }

    /// Concatenation of two sets with the same convention. Labels are kept only
    /// when both sides carry them.
    pub fn concat(&self, other: &PointSet) -> Result<Self> {
        let other = other.to_convention(self.convention);
        let mut directions = self.directions.clone();
        directions.extend_from_slice(&other.directions);
        let labels = match (&self.labels, &other.labels) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            _ => None,
        };
        Ok(Self {
            directions,
            convention: self.convention,
            labels,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn convention_round_trip_is_exact() {
        let d = Direction::above_xy(0.3, 1.0);
        let z = d.to_convention(Convention::FromZAxis);
        assert_eq!(z.theta, FRAC_PI_2 - 0.3);
        assert_eq!(
            z.to_convention(Convention::AboveXyPlane).theta,
            FRAC_PI_2 - (FRAC_PI_2 - 0.3)
        );
    }

    #[test]
    fn azimuth_is_wrapped() {
        let d = Direction::from_z(1.0, -0.5);
        assert_abs_diff_eq!(d.phi, TAU - 0.5, epsilon = 1e-15);
        assert!(Direction::from_z(1.0, TAU).phi < 1e-15);
    }

    #[test]
    fn out_of_range_theta_is_rejected() {
        assert!(PointSet::from_angles(&[(2.0, 0.0)], Convention::AboveXyPlane).is_err());
        assert!(PointSet::from_angles(&[(-0.1, 0.0)], Convention::FromZAxis).is_err());
        assert!(PointSet::from_angles(&[], Convention::FromZAxis).is_err());
    }

    #[test]
    fn cartesian_round_trip() {
        let d = Direction::from_z(0.7, 2.1);
        let back = Direction::from_cartesian(&d.to_cartesian(), Convention::FromZAxis).unwrap();
        assert_abs_diff_eq!(back.theta, 0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(back.phi, 2.1, epsilon = 1e-14);
    }

    #[test]
    fn mixed_conventions_are_rejected() {
        let dirs = vec![Direction::from_z(0.1, 0.0), Direction::above_xy(0.1, 0.0)];
        assert!(PointSet::new(dirs, Convention::FromZAxis).is_err());
    }

    #[test]
    fn select_keeps_labels() {
        let ps = PointSet::from_angles(&[(0.1, 0.0), (0.2, 0.0), (0.3, 0.0)], Convention::FromZAxis)
            .unwrap()
            .with_labels(vec![7, 8, 9])
            .unwrap();
        let sub = ps.select(&[2, 0]).unwrap();
        assert_eq!(sub.labels().unwrap(), &[9, 7]);
        assert!(ps.select(&[3]).is_err());
    }
}
