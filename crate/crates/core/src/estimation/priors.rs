use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Family;
use crate::util::fmt_f64;

/// Normal density parameters for one family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prior {
    pub mu: f64,
    pub sigma: f64,
}

impl Prior {
    /// `f(x) / f(μ)` for the normal density, in (0, 1].
    pub fn density_ratio(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        (-0.5 * z * z).exp()
    }
}

/// Per-family priors learned during pretraining.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorDistributions {
    priors: [Prior; 5],
}

const HEADER: &str = "family,mu,sigma";

impl PriorDistributions {
    pub fn new(priors: [Prior; 5]) -> Result<Self> {
        for (f, p) in Family::ALL.iter().zip(&priors) {
            if !(p.sigma > 0.0 && p.sigma.is_finite() && p.mu.is_finite()) {
                return Err(Error::invalid(format!(
                    "prior for {f} needs finite mu and sigma > 0, got {p:?}"
                )));
            }
        }
        Ok(PriorDistributions { priors })
    }

    pub fn from_fn(f: impl Fn(Family) -> Prior) -> Result<Self> {
        Self::new(Family::ALL.map(f))
    }

    pub fn get(&self, family: Family) -> Prior {
        self.priors[family as usize]
    }

    /// One `family,mu,sigma` line per family after a header.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = format!("{HEADER}\n");
        for f in Family::ALL {
            let p = self.get(f);
            out.push_str(&format!("{f},{},{}\n", fmt_f64(p.mu), fmt_f64(p.sigma)));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some(HEADER) {
            return Err(Error::parse(path, format!("expected header `{HEADER}`")));
        }
        let mut found: [Option<Prior>; 5] = [None; 5];
        for line in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let [name, mu, sigma] = fields[..] else {
                return Err(Error::parse(path, format!("malformed line {line:?}")));
            };
            let family = Family::parse(name)
                .ok_or_else(|| Error::parse(path, format!("unknown family {name:?}")))?;
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::parse(path, format!("{s:?}: {e}")))
            };
            found[family as usize] = Some(Prior {
                mu: num(mu)?,
                sigma: num(sigma)?,
            });
        }
        let mut priors = [Prior { mu: 0.0, sigma: 1.0 }; 5];
        for f in Family::ALL {
            priors[f as usize] = found[f as usize]
                .ok_or_else(|| Error::parse(path, format!("missing family {f}")))?;
        }
        Self::new(priors).map_err(|e| Error::parse(path, e))
    }
}
