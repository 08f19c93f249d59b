use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::util::{read_named_arrays, take_array, write_named_arrays, NamedArray};

/// Parameter families of the DAS3H model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// Learner ability.
    Alpha,
    /// Item difficulty.
    Delta,
    /// Skill proficiency.
    Beta,
    /// Weights on log(1 + correct count), per skill and window.
    Theta,
    /// Weights on log(1 + attempt count), per skill and window.
    Phi,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Alpha,
        Family::Delta,
        Family::Beta,
        Family::Theta,
        Family::Phi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Alpha => "alpha",
            Family::Delta => "delta",
            Family::Beta => "beta",
            Family::Theta => "theta",
            Family::Phi => "phi",
        }
    }

    pub fn parse(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == name)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// All DAS3H parameters of one model instance.
///
/// `theta` and `phi` are row-major `skills × windows`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub alpha: Vec<f64>,
    pub delta: Vec<f64>,
    pub beta: Vec<f64>,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub windows: usize,
}

impl ParamSet {
    pub fn zeros(learners: usize, items: usize, skills: usize, windows: usize) -> Self {
        ParamSet {
            alpha: vec![0.0; learners],
            delta: vec![0.0; items],
            beta: vec![0.0; skills],
            theta: vec![0.0; skills * windows],
            phi: vec![0.0; skills * windows],
            windows,
        }
    }

    pub fn n_learners(&self) -> usize {
        self.alpha.len()
    }

    pub fn n_items(&self) -> usize {
        self.delta.len()
    }

    pub fn n_skills(&self) -> usize {
        self.beta.len()
    }

    pub fn family(&self, f: Family) -> &[f64] {
        match f {
            Family::Alpha => &self.alpha,
            Family::Delta => &self.delta,
            Family::Beta => &self.beta,
            Family::Theta => &self.theta,
            Family::Phi => &self.phi,
        }
    }

    pub fn family_mut(&mut self, f: Family) -> &mut Vec<f64> {
        match f {
            Family::Alpha => &mut self.alpha,
            Family::Delta => &mut self.delta,
            Family::Beta => &mut self.beta,
            Family::Theta => &mut self.theta,
            Family::Phi => &mut self.phi,
        }
    }

    fn family_shape(&self, f: Family) -> (usize, usize) {
        match f {
            Family::Alpha => (self.n_learners(), 1),
            Family::Delta => (self.n_items(), 1),
            Family::Beta => (self.n_skills(), 1),
            Family::Theta | Family::Phi => (self.n_skills(), self.windows),
        }
    }

    /// Checks array shapes and finiteness.
    pub fn validate(&self) -> Result<()> {
        let k = self.n_skills();
        if self.theta.len() != k * self.windows || self.phi.len() != k * self.windows {
            return Err(Error::Shape(format!(
                "theta/phi must be {k}x{} (got {} and {} entries)",
                self.windows,
                self.theta.len(),
                self.phi.len()
            )));
        }
        for f in Family::ALL {
            if let Some(x) = self.family(f).iter().find(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("{f} contains {x}")));
            }
        }
        Ok(())
    }

    /// True when every family has the same length as in `other`.
    pub fn same_shape(&self, other: &ParamSet) -> bool {
        self.windows == other.windows
            && Family::ALL
                .iter()
                .all(|&f| self.family(f).len() == other.family(f).len())
    }

    pub fn len(&self) -> usize {
        Family::ALL.iter().map(|&f| self.family(f).len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Concatenation of all families in [`Family::ALL`] order.
    pub fn to_flat(&self) -> Vec<f64> {
        Family::ALL
            .iter()
            .flat_map(|&f| self.family(f).iter().copied())
            .collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::Shape(format!(
                "flat vector has {} entries, parameter set has {}",
                flat.len(),
                self.len()
            )));
        }
        let mut at = 0;
        for f in Family::ALL {
            let dst = self.family_mut(f);
            let n = dst.len();
            dst.copy_from_slice(&flat[at..at + n]);
            at += n;
        }
        Ok(())
    }

    /// Same shape, every entry set to `value_of(family)`.
    pub fn filled_like(&self, value_of: impl Fn(Family) -> f64) -> ParamSet {
        let mut out = self.clone();
        for f in Family::ALL {
            out.family_mut(f).fill(value_of(f));
        }
        out
    }

    /// Named-array CSV checkpoint with 17 significant digits.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let arrays: Vec<NamedArray> = Family::ALL
            .iter()
            .map(|&f| {
                let (rows, cols) = self.family_shape(f);
                NamedArray {
                    name: f.name().to_string(),
                    rows,
                    cols,
                    values: self.family(f).to_vec(),
                }
            })
            .collect();
        write_named_arrays(path, &arrays)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let arrays = read_named_arrays(path)?;
        let get = |f: Family| {
            arrays
                .iter()
                .find(|a| a.name == f.name())
                .ok_or_else(|| Error::parse(path, format!("missing array `{f}`")))
        };
        let theta = get(Family::Theta)?;
        let (skills, windows) = (theta.rows, theta.cols);
        let shape = |f: Family| -> Result<Vec<f64>> {
            let a = get(f)?;
            let cols = if matches!(f, Family::Theta | Family::Phi) { windows } else { 1 };
            let rows = if matches!(f, Family::Beta | Family::Theta | Family::Phi) { skills } else { a.rows };
            take_array(&arrays, f.name(), rows, cols)
        };
        let params = ParamSet {
            alpha: shape(Family::Alpha)?,
            delta: shape(Family::Delta)?,
            beta: shape(Family::Beta)?,
            theta: shape(Family::Theta)?,
            phi: shape(Family::Phi)?,
            windows,
        };
        params.validate()?;
        Ok(params)
    }
}
