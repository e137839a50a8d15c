use serde::{Deserialize, Serialize};

/// How `P` particles of dimension `N` are arranged in one flat buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// All components of particle 0, then particle 1, ...
    #[serde(rename = "row")]
    RowMajor,
    /// Dimension 0 of every particle, then dimension 1, ...
    #[default]
    #[serde(rename = "column")]
    ColumnMajor,
}

impl Layout {
    #[inline]
    pub fn index(self, particle: usize, dim: usize, particles: usize, dims: usize) -> usize {
        match self {
            Layout::RowMajor => particle * dims + dim,
            Layout::ColumnMajor => dim * particles + particle,
        }
    }

    /// Numeric tag used in binary snapshots.
    pub fn code(self) -> u32 {
        match self {
            Layout::RowMajor => 0,
            Layout::ColumnMajor => 1,
        }
    }

    pub fn from_code(code: u32) -> Option<Layout> {
        match code {
            0 => Some(Layout::RowMajor),
            1 => Some(Layout::ColumnMajor),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Layout::RowMajor => "row",
            Layout::ColumnMajor => "column",
        }
    }
}

impl std::str::FromStr for Layout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "row" | "row-major" => Ok(Layout::RowMajor),
            "column" | "col" | "column-major" => Ok(Layout::ColumnMajor),
            other => Err(format!("unknown layout '{other}' (expected row or column)")),
        }
    }
}

impl std::fmt::Display for Layout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_cover_the_buffer_once() {
        for layout in [Layout::RowMajor, Layout::ColumnMajor] {
            let (p, n) = (7, 3);
            let mut seen = vec![false; p * n];
            for i in 0..p {
                for d in 0..n {
                    let k = layout.index(i, d, p, n);
                    assert!(!seen[k]);
                    seen[k] = true;
                }
            }
            assert!(seen.iter().all(|s| *s));
        }
    }
}
