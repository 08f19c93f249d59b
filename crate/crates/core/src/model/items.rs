use std::path::Path;

use crate::error::{Error, Result};

/// Items and the knowledge components (skills) each one exercises.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemBank {
    kc_map: Vec<Vec<usize>>,
    n_skills: usize,
}

impl ItemBank {
    pub fn new(kc_map: Vec<Vec<usize>>, n_skills: usize) -> Result<Self> {
        if kc_map.is_empty() {
            return Err(Error::invalid("item bank needs at least one item"));
        }
        if n_skills == 0 {
            return Err(Error::invalid("item bank needs at least one skill"));
        }
        for (j, skills) in kc_map.iter().enumerate() {
            if skills.is_empty() {
                return Err(Error::invalid(format!("item {j} has no skills")));
            }
            if let Some(&k) = skills.iter().find(|&&k| k >= n_skills) {
                return Err(Error::invalid(format!(
                    "item {j} references skill {k}, but only {n_skills} skills exist"
                )));
            }
            let mut sorted = skills.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != skills.len() {
                return Err(Error::invalid(format!("item {j} lists a skill twice")));
            }
        }
        Ok(ItemBank { kc_map, n_skills })
    }

    /// `n_items` items assigned round-robin to `n_skills` skills, one skill each.
    pub fn round_robin(n_items: usize, n_skills: usize) -> Result<Self> {
        if n_skills == 0 {
            return Err(Error::invalid("item bank needs at least one skill"));
        }
        Self::new((0..n_items).map(|j| vec![j % n_skills]).collect(), n_skills)
    }

    pub fn n_items(&self) -> usize {
        self.kc_map.len()
    }

    pub fn n_skills(&self) -> usize {
        self.n_skills
    }

    /// Skills of `item`. Panics on an out-of-range id.
    pub fn skills(&self, item: usize) -> &[usize] {
        &self.kc_map[item]
    }

    pub fn skills_checked(&self, item: usize) -> Result<&[usize]> {
        self.kc_map.get(item).map(Vec::as_slice).ok_or_else(|| {
            Error::invalid(format!(
                "item {item} out of range ({} items)",
                self.n_items()
            ))
        })
    }

    /// Reads `item_id,skill_ids` with `;`-separated skills. Item ids must
    /// cover `0..J` exactly once; the skill count is one past the largest id.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e))?;
        let headers = reader.headers().map_err(|e| Error::parse(path, e))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["item_id", "skill_ids"] {
            return Err(Error::parse(path, "expected header `item_id,skill_ids`"));
        }
        let mut rows: Vec<(usize, Vec<usize>)> = Vec::new();
        for row in reader.records() {
            let row = row.map_err(|e| Error::parse(path, e))?;
            let item: usize = row[0]
                .trim()
                .parse()
                .map_err(|e| Error::parse(path, format!("item_id {:?}: {e}", &row[0])))?;
            let skills = row[1]
                .split(';')
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|e| Error::parse(path, format!("skill id {s:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push((item, skills));
        }
        rows.sort_by_key(|(j, _)| *j);
        if rows.iter().enumerate().any(|(i, (j, _))| i != *j) {
            return Err(Error::parse(path, "item ids must be exactly 0..J"));
        }
        let n_skills = rows
            .iter()
            .flat_map(|(_, s)| s.iter())
            .max()
            .map_or(0, |k| k + 1);
        Self::new(rows.into_iter().map(|(_, s)| s).collect(), n_skills)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("item_id,skill_ids\n");
        for (j, skills) in self.kc_map.iter().enumerate() {
            let ids: Vec<String> = skills.iter().map(ToString::to_string).collect();
            out.push_str(&format!("{j},{}\n", ids.join(";")));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}
