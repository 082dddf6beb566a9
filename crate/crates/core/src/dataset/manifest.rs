use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Role of a feature column in the power-system testbed layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    /// Synchrophasor measurement from one of the four IEDs.
    PmuMeasurement,
    /// Relay trip status flag (R1:S .. R4:S).
    RelayStatus,
    /// Control-panel, relay, or Snort log column.
    Log,
}

impl FeatureGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureGroup::PmuMeasurement => "pmu_measurement",
            FeatureGroup::RelayStatus => "relay_status",
            FeatureGroup::Log => "log",
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pmu_measurement" => Ok(FeatureGroup::PmuMeasurement),
            "relay_status" => Ok(FeatureGroup::RelayStatus),
            "log" => Ok(FeatureGroup::Log),
            other => Err(Error::Manifest(format!(
                "unknown feature group `{other}` (expected pmu_measurement, relay_status, or log)"
            ))),
        }
    }
}

/// Maps feature column names to their group tags.
///
/// The manifest decides which columns survive the `pmu_only` and
/// `pmu_without_status` feature sets, so loading a CSV whose columns are not
/// all covered by the manifest is an error rather than a silent pass-through.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureManifest {
    map: BTreeMap<String, FeatureGroup>,
}

impl FeatureManifest {
    pub fn new(map: BTreeMap<String, FeatureGroup>) -> Self {
        FeatureManifest { map }
    }

    /// Manifest where every listed name carries the same group.
    pub fn uniform(names: &[String], group: FeatureGroup) -> Self {
        let map = names.iter().map(|n| (n.clone(), group)).collect();
        FeatureManifest { map }
    }

    pub fn group(&self, name: &str) -> Option<FeatureGroup> {
        self.map.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Column layout of the Mississippi State / Oak Ridge power-system
    /// attack dataset: 29 columns per relay R1..R4 (12 phasor angle and
    /// magnitude pairs, frequency, frequency delta, impedance angle and
    /// magnitude, trip status), then 12 log columns.
    ///
    /// The order matches the distributed CSV files; only the names and
    /// groups matter for manifest lookups.
    pub fn msu_ornl_columns() -> Vec<(String, FeatureGroup)> {
        let mut cols = Vec::with_capacity(128);
        for r in 1..=4 {
            for i in 1..=12 {
                // Angle and magnitude pairs: phase and sequence voltages at
                // indices 1-3 and 7-9, phase and sequence currents at 4-6
                // and 10-12.
                let voltage = (1..=3).contains(&i) || (7..=9).contains(&i);
                let (angle_suffix, magnitude_suffix) =
                    if voltage { ("VH", "V") } else { ("IH", "I") };
                cols.push((format!("R{r}-PA{i}:{angle_suffix}"), FeatureGroup::PmuMeasurement));
                cols.push((format!("R{r}-PM{i}:{magnitude_suffix}"), FeatureGroup::PmuMeasurement));
            }
            cols.push((format!("R{r}:F"), FeatureGroup::PmuMeasurement));
            cols.push((format!("R{r}:DF"), FeatureGroup::PmuMeasurement));
            cols.push((format!("R{r}-PA:Z"), FeatureGroup::PmuMeasurement));
            cols.push((format!("R{r}-PA:ZH"), FeatureGroup::PmuMeasurement));
            cols.push((format!("R{r}:S"), FeatureGroup::RelayStatus));
        }
        for i in 1..=4 {
            cols.push((format!("control_panel_log{i}"), FeatureGroup::Log));
        }
        for i in 1..=4 {
            cols.push((format!("relay{i}_log"), FeatureGroup::Log));
        }
        for i in 1..=4 {
            cols.push((format!("snort_log{i}"), FeatureGroup::Log));
        }
        cols
    }

    /// Default manifest for the power-system attack dataset.
    pub fn msu_ornl_default() -> Self {
        FeatureManifest {
            map: Self::msu_ornl_columns().into_iter().collect(),
        }
    }

    /// Parses the plain-text manifest format: one `column_name group` pair
    /// per line, `#` comments and blank lines ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, group) = line
                .rsplit_once(|c: char| c.is_whitespace())
                .ok_or_else(|| {
                    Error::Manifest(format!(
                        "line {}: expected `column_name group`, got `{line}`",
                        lineno + 1
                    ))
                })?;
            let name = name.trim();
            if name.is_empty() {
                return Err(Error::Manifest(format!(
                    "line {}: missing column name",
                    lineno + 1
                )));
            }
            let group: FeatureGroup = group.trim().parse()?;
            if map.insert(name.to_string(), group).is_some() {
                return Err(Error::Manifest(format!(
                    "line {}: duplicate column `{name}`",
                    lineno + 1
                )));
            }
        }
        Ok(FeatureManifest { map })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Manifest(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Renders the manifest in the same plain-text format `parse` accepts.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (name, group) in &self.map {
            out.push_str(name);
            out.push(' ');
            out.push_str(group.as_str());
            out.push('\n');
        }
        out
    }
}
