//! The measure-preserving dynamical systems: state spaces, metrics,
//! iteration rules and ball measures.
//!
//! Five families, all preserving Haar–Lebesgue measure on the circle, torus
//! or unit interval: circle/torus rotations, expanding maps `x ↦ kx`,
//! hyperbolic 2×2 toral automorphisms, and interval exchanges. Orbits are
//! iterated exactly on the fixed-point lattice of [`crate::lattice`]; `f64`
//! appears at the API boundary only.

use crate::diophantine::AlphaValue;
use crate::error::{Error, Result};
use crate::iet::IetSpec;
use crate::lattice::{self, LatticeMap, MODULUS};
use serde::{Deserialize, Serialize};

/// A point of the state space: `d` coordinates in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Point> {
        if coords.is_empty() {
            return Err(Error::contract("a point needs at least one coordinate"));
        }
        for &c in &coords {
            if !(0.0..1.0).contains(&c) {
                return Err(Error::contract(format!("coordinate {c} outside [0,1)")));
            }
        }
        Ok(Point { coords })
    }

    pub fn scalar(x: f64) -> Result<Point> {
        Point::new(vec![x])
    }

    pub fn pair(x: f64, y: f64) -> Result<Point> {
        Point::new(vec![x, y])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub(crate) fn to_lattice(&self) -> Vec<u64> {
        self.coords.iter().map(|&c| lattice::lift(c)).collect()
    }

    pub(crate) fn from_lattice(cells: &[u64]) -> Point {
        Point {
            coords: cells.iter().map(|&c| lattice::unlift(c)).collect(),
        }
    }

    /// Compact display for CSV fields: coordinates joined by `;`.
    pub fn display_compact(&self) -> String {
        self.coords
            .iter()
            .map(|c| format!("{c}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Which map family a [`SystemSpec`] is.
#[derive(Clone, Debug, PartialEq)]
pub enum SystemKind {
    CircleRotation { alpha: AlphaValue },
    TorusRotation { alpha: Vec<AlphaValue> },
    ExpandingMap { k: u64 },
    ToralAutomorphism { matrix: [[i64; 2]; 2] },
    IntervalExchange(IetSpec),
}

/// A measure-preserving system: the map, its state space dimension and its
/// metric. Immutable after construction; every operation is a pure function.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    kind: SystemKind,
    map: LatticeMap,
    dim: usize,
}

impl SystemSpec {
    pub fn circle_rotation(alpha: AlphaValue) -> Result<SystemSpec> {
        let step = alpha.lattice_step()?;
        if step == 0 {
            return Err(Error::contract("rotation number below lattice resolution"));
        }
        Ok(SystemSpec {
            kind: SystemKind::CircleRotation { alpha },
            map: LatticeMap::Translate(vec![step]),
            dim: 1,
        })
    }

    pub fn torus_rotation(alpha: Vec<AlphaValue>) -> Result<SystemSpec> {
        if alpha.is_empty() {
            return Err(Error::contract("torus rotation needs >= 1 coordinate"));
        }
        let steps = alpha
            .iter()
            .map(|a| a.lattice_step())
            .collect::<Result<Vec<_>>>()?;
        if steps.contains(&0) {
            return Err(Error::contract(
                "rotation coordinate below lattice resolution",
            ));
        }
        let dim = steps.len();
        Ok(SystemSpec {
            kind: SystemKind::TorusRotation { alpha },
            map: LatticeMap::Translate(steps),
            dim,
        })
    }

    pub fn expanding(k: u64) -> Result<SystemSpec> {
        if k < 2 {
            return Err(Error::contract("expanding map requires k >= 2"));
        }
        if k >= MODULUS {
            return Err(Error::contract("expanding map factor too large"));
        }
        Ok(SystemSpec {
            kind: SystemKind::ExpandingMap { k },
            map: LatticeMap::MulMod(k),
            dim: 1,
        })
    }

    /// Hyperbolic integer matrix: `|det| = 1` and no eigenvalue on the unit
    /// circle (`det = 1 ⇒ |trace| > 2`; `det = −1 ⇒ trace ≠ 0`).
    pub fn toral_automorphism(matrix: [[i64; 2]; 2]) -> Result<SystemSpec> {
        let det = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0];
        if det.abs() != 1 {
            return Err(Error::contract(format!(
                "automorphism matrix must have determinant ±1, got {det}"
            )));
        }
        let trace = matrix[0][0] + matrix[1][1];
        let hyperbolic = if det == 1 {
            trace.abs() > 2
        } else {
            trace != 0
        };
        if !hyperbolic {
            return Err(Error::contract(
                "automorphism matrix has an eigenvalue on the unit circle",
            ));
        }
        Ok(SystemSpec {
            kind: SystemKind::ToralAutomorphism { matrix },
            map: LatticeMap::Affine2(matrix),
            dim: 2,
        })
    }

    pub fn interval_exchange(spec: IetSpec) -> SystemSpec {
        let map = spec.lattice_map();
        SystemSpec {
            kind: SystemKind::IntervalExchange(spec),
            map,
            dim: 1,
        }
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Interval exchanges live on `[0,1)` with `|a−b|`; everything else is on
    /// the torus with the sup metric over coordinates.
    pub fn uses_interval_metric(&self) -> bool {
        matches!(self.kind, SystemKind::IntervalExchange(_))
    }

    fn check_dim(&self, p: &Point) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.dim(),
            });
        }
        Ok(())
    }

    /// One application of the map, `T(x)`, coordinates reduced into `[0,1)`.
    pub fn step(&self, x: &Point) -> Result<Point> {
        self.check_dim(x)?;
        let mut cells = x.to_lattice();
        self.map.step(&mut cells);
        Ok(Point::from_lattice(&cells))
    }

    /// Stream the orbit `T x0, T² x0, …` through `visitor(step_index, point)`
    /// without materialising it; the visitor returns `false` to stop early.
    ///
    /// Returns the last point reached and the number of steps taken. The
    /// whole orbit is carried on the lattice, so horizons of 10^8 neither
    /// allocate nor accumulate rounding error.
    pub fn orbit_fold<F>(&self, x0: &Point, n_max: u64, mut visitor: F) -> Result<(Point, u64)>
    where
        F: FnMut(u64, &Point) -> bool,
    {
        self.check_dim(x0)?;
        let mut cells = x0.to_lattice();
        let mut scratch = x0.clone();
        let mut steps = 0u64;
        for n in 1..=n_max {
            self.map.step(&mut cells);
            steps = n;
            for (dst, &src) in scratch.coords.iter_mut().zip(&cells) {
                *dst = lattice::unlift(src);
            }
            if !visitor(n, &scratch) {
                return Ok((scratch, steps));
            }
        }
        if steps == 0 {
            Ok((x0.clone(), 0))
        } else {
            Ok((scratch, steps))
        }
    }

    /// Metric distance between two points of this system's space.
    pub fn dist(&self, a: &Point, b: &Point) -> Result<f64> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        if self.uses_interval_metric() {
            Ok((a.coords[0] - b.coords[0]).abs())
        } else {
            Ok(a.coords
                .iter()
                .zip(&b.coords)
                .map(|(x, y)| {
                    let d = (x - y).abs();
                    d.min(1.0 - d)
                })
                .fold(0.0, f64::max))
        }
    }

    /// Haar–Lebesgue measure of the closed ball `B(y, r) = {x : d(x,y) ≤ r}`:
    /// the product over coordinates of `min(2r, 1)`. Independent of `y` by
    /// translation invariance.
    pub fn ball_measure(&self, y: &Point, r: f64) -> Result<f64> {
        self.check_dim(y)?;
        if r <= 0.0 {
            return Err(Error::contract("ball radius must be positive"));
        }
        Ok((r.min(0.5) * 2.0).powi(self.dim as i32))
    }

    /// The inverse system, for the invertible families; `None` for expanding
    /// maps.
    pub fn inverse(&self) -> Option<SystemSpec> {
        match &self.kind {
            SystemKind::CircleRotation { .. } | SystemKind::TorusRotation { .. } => {
                let LatticeMap::Translate(steps) = &self.map else {
                    unreachable!()
                };
                let inv_steps: Vec<u64> = steps.iter().map(|&s| MODULUS - s).collect();
                Some(SystemSpec {
                    kind: self.kind.clone(),
                    map: LatticeMap::Translate(inv_steps),
                    dim: self.dim,
                })
            }
            SystemKind::ExpandingMap { .. } => None,
            SystemKind::ToralAutomorphism { matrix } => {
                let det = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0];
                let inv = [
                    [det * matrix[1][1], -det * matrix[0][1]],
                    [-det * matrix[1][0], det * matrix[0][0]],
                ];
                Some(SystemSpec {
                    kind: SystemKind::ToralAutomorphism { matrix: inv },
                    map: LatticeMap::Affine2(inv),
                    dim: 2,
                })
            }
            SystemKind::IntervalExchange(spec) => {
                let inv = spec.inverse();
                Some(SystemSpec::interval_exchange(inv))
            }
        }
    }

    /// Short identifier used in CSV/JSON rows.
    pub fn id(&self) -> String {
        match &self.kind {
            SystemKind::CircleRotation { alpha } => format!("rotation({})", alpha.describe()),
            SystemKind::TorusRotation { alpha } => format!(
                "torus-rotation({})",
                alpha
                    .iter()
                    .map(AlphaValue::describe)
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            SystemKind::ExpandingMap { k } => format!("expanding({k})"),
            SystemKind::ToralAutomorphism { matrix } => format!(
                "automorphism({},{},{},{})",
                matrix[0][0], matrix[0][1], matrix[1][0], matrix[1][1]
            ),
            SystemKind::IntervalExchange(spec) => spec.id(),
        }
    }

    pub(crate) fn lattice_map(&self) -> &LatticeMap {
        &self.map
    }

    /// Lattice-level distance matching [`SystemSpec::dist`].
    #[inline(always)]
    pub(crate) fn lattice_dist(&self, a: &[u64], b: &[u64]) -> u64 {
        if self.uses_interval_metric() {
            lattice::interval_dist(a[0], b[0])
        } else {
            a.iter()
                .zip(b)
                .map(|(&x, &y)| lattice::circ_dist(x, y))
                .max()
                .unwrap_or(0)
        }
    }
}
