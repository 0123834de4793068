//! Country-to-region normalization from a bundled lookup table covering all
//! UN member states plus common affiliation aliases.

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// World region of an affiliation country.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    Africa,
    Asia,
    Europe,
    NorthAmerica,
    Oceania,
    SouthAmerica,
    Unknown,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Africa => "Africa",
            Region::Asia => "Asia",
            Region::Europe => "Europe",
            Region::NorthAmerica => "NorthAmerica",
            Region::Oceania => "Oceania",
            Region::SouthAmerica => "SouthAmerica",
            Region::Unknown => "Unknown",
        }
    }

    pub fn known() -> [Region; 6] {
        [
            Region::Africa,
            Region::Asia,
            Region::Europe,
            Region::NorthAmerica,
            Region::Oceania,
            Region::SouthAmerica,
        ]
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

const TABLE: &str = include_str!("../../resources/countries.csv");

fn lookup() -> &'static HashMap<String, Region> {
    static MAP: OnceLock<HashMap<String, Region>> = OnceLock::new();
    MAP.get_or_init(|| {
        let mut map = HashMap::new();
        for line in TABLE.lines().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.splitn(5, ',').collect();
            let region = match fields[0] {
                "Africa" => Region::Africa,
                "Asia" => Region::Asia,
                "Europe" => Region::Europe,
                "NorthAmerica" => Region::NorthAmerica,
                "Oceania" => Region::Oceania,
                "SouthAmerica" => Region::SouthAmerica,
                other => panic!("bad region in bundled table: {other}"),
            };
            for key in [fields[1], fields[2], fields[3]] {
                map.insert(normalize_key(key), region);
            }
            if fields.len() > 4 {
                for alias in fields[4].split('|').filter(|a| !a.is_empty()) {
                    map.insert(normalize_key(alias), region);
                }
            }
        }
        map
    })
}

fn normalize_key(s: &str) -> String {
    s.trim().to_lowercase()
}

/// Map a country code or name onto its region; unmapped input is Unknown.
pub fn normalize_region(country: &str) -> Region {
    lookup()
        .get(&normalize_key(country))
        .copied()
        .unwrap_or(Region::Unknown)
}
