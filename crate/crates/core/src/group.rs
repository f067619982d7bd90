//! The cyclic group Z_n and the dihedral group D_n acting on length-n signals.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which symmetry group the observations are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Cyclic,
    Dihedral,
}

impl Group {
    pub const ALL: [Group; 2] = [Group::Cyclic, Group::Dihedral];

    /// Number of elements acting on length-`n` signals.
    pub fn order(self, n: usize) -> usize {
        match self {
            Group::Cyclic => n,
            Group::Dihedral => 2 * n,
        }
    }

    /// All elements in canonical order: rotation ascending, then the
    /// reflected elements with rotation ascending.
    pub fn elements(self, n: usize) -> impl Iterator<Item = GroupElement> {
        let refl = match self {
            Group::Cyclic => &[false][..],
            Group::Dihedral => &[false, true][..],
        };
        refl.iter()
            .flat_map(move |&refl| (0..n).map(move |rot| GroupElement { rot, refl }))
    }

    /// Element with index `i` in the order of [`Group::elements`].
    pub fn element(self, n: usize, i: usize) -> GroupElement {
        debug_assert!(i < self.order(n));
        GroupElement { rot: i % n, refl: i >= n }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Cyclic => "cyclic",
            Group::Dihedral => "dihedral",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cyclic" | "z" | "zn" => Ok(Group::Cyclic),
            "dihedral" | "d" | "dn" => Ok(Group::Dihedral),
            other => Err(Error::Malformed(format!("unknown group '{other}'"))),
        }
    }
}

/// The element `r^rot · s^refl` of D_n (or of Z_n when `refl` is false).
///
/// Acting on a signal, the reflection is applied first and the rotation second.
/// `r` is the left rotation `(r·x)[i] = x[i+1]` and `s` fixes index 0 and
/// reverses the rest.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    pub rot: usize,
    pub refl: bool,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement { rot: 0, refl: false };

    pub fn new(rot: usize, refl: bool, n: usize) -> Result<Self> {
        if rot >= n {
            return Err(Error::BadGroupElement { rot, n });
        }
        Ok(GroupElement { rot, refl })
    }

    pub fn rotation(rot: usize, n: usize) -> Self {
        GroupElement { rot: rot % n, refl: false }
    }

    pub fn reflection() -> Self {
        GroupElement { rot: 0, refl: true }
    }

    /// Group product `self · other` (apply `other` first).
    ///
    /// Uses `s r^c = r^{-c} s`.
    pub fn compose(self, other: GroupElement, n: usize) -> GroupElement {
        let rot = if self.refl {
            (self.rot + n - other.rot % n) % n
        } else {
            (self.rot + other.rot) % n
        };
        GroupElement { rot, refl: self.refl ^ other.refl }
    }

    pub fn inverse(self, n: usize) -> GroupElement {
        if self.refl {
            // every reflection is an involution
            self
        } else {
            GroupElement { rot: (n - self.rot % n) % n, refl: false }
        }
    }

    /// Source index: `(g·x)[i] = x[self.source_index(i, n)]`.
    #[inline]
    pub fn source_index(self, i: usize, n: usize) -> usize {
        let j = (i + self.rot) % n;
        if self.refl {
            (n - j) % n
        } else {
            j
        }
    }

    pub fn belongs_to(self, group: Group) -> bool {
        group == Group::Dihedral || !self.refl
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.rot, self.refl) {
            (0, false) => f.write_str("e"),
            (r, false) => write!(f, "r^{r}"),
            (0, true) => f.write_str("s"),
            (r, true) => write!(f, "r^{r}s"),
        }
    }
}
