//! Two-level taxonomy of knowledge integrity risks.
//!
//! Risks are split by origin into internal and external. Internal risks are
//! further grouped into community and content concerns; external risks carry
//! no subgroup. Origin and subgroup are derived from the leaf, so they can
//! never be stored inconsistently.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Internal,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subgroup {
    Community,
    Content,
    None,
}

/// A leaf of the risk taxonomy.
///
/// Declaration order is the canonical display order: internal community,
/// internal content, then external.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskCategory {
    CommunityCapacity,
    CommunityGovernance,
    CommunityDemographics,
    ContentVerifiability,
    ContentQuality,
    ContentControversiality,
    Media,
    Geopolitics,
}

impl RiskCategory {
    pub const ALL: [RiskCategory; 8] = [
        RiskCategory::CommunityCapacity,
        RiskCategory::CommunityGovernance,
        RiskCategory::CommunityDemographics,
        RiskCategory::ContentVerifiability,
        RiskCategory::ContentQuality,
        RiskCategory::ContentControversiality,
        RiskCategory::Media,
        RiskCategory::Geopolitics,
    ];

    pub fn origin(self) -> Origin {
        match self {
            RiskCategory::Media | RiskCategory::Geopolitics => Origin::External,
            _ => Origin::Internal,
        }
    }

    pub fn subgroup(self) -> Subgroup {
        use RiskCategory::*;
        match self {
            CommunityCapacity | CommunityGovernance | CommunityDemographics => Subgroup::Community,
            ContentVerifiability | ContentQuality | ContentControversiality => Subgroup::Content,
            Media | Geopolitics => Subgroup::None,
        }
    }

    /// Stable machine identifier, identical to the serde form.
    pub fn id(self) -> &'static str {
        use RiskCategory::*;
        match self {
            CommunityCapacity => "community_capacity",
            CommunityGovernance => "community_governance",
            CommunityDemographics => "community_demographics",
            ContentVerifiability => "content_verifiability",
            ContentQuality => "content_quality",
            ContentControversiality => "content_controversiality",
            Media => "media",
            Geopolitics => "geopolitics",
        }
    }

    pub fn display_name(self) -> &'static str {
        use RiskCategory::*;
        match self {
            CommunityCapacity => "Community capacity",
            CommunityGovernance => "Community governance",
            CommunityDemographics => "Community demographics",
            ContentVerifiability => "Content verifiability",
            ContentQuality => "Content quality",
            ContentControversiality => "Content controversiality",
            Media => "Media",
            Geopolitics => "Geopolitics",
        }
    }

    /// Position in [`RiskCategory::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for RiskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for RiskCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RiskCategory::ALL
            .into_iter()
            .find(|c| c.id() == s)
            .ok_or_else(|| format!("unknown risk category `{s}`"))
    }
}

/// Every leaf in canonical order.
pub fn taxonomy() -> Vec<RiskCategory> {
    RiskCategory::ALL.to_vec()
}

/// Serializable view of a leaf with its derived placement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryInfo {
    pub id: RiskCategory,
    pub display_name: String,
    pub origin: Origin,
    pub subgroup: Subgroup,
}

impl From<RiskCategory> for CategoryInfo {
    fn from(c: RiskCategory) -> Self {
        CategoryInfo {
            id: c,
            display_name: c.display_name().to_string(),
            origin: c.origin(),
            subgroup: c.subgroup(),
        }
    }
}
