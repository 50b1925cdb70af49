use serde::{Deserialize, Serialize};

use crate::case::GridCase;

/// Start decision for a generator or fuel cell. `start` is the step at which
/// cranking begins; `None` means the device never starts within the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceDecision {
    pub id: String,
    pub start: Option<usize>,
}

/// Discharge window `[start, end)` plus the per-step dispatch in MW.
/// `end == None` keeps discharging through the horizon; `end == start` is an
/// empty window that still marks the battery as started.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryDecision {
    pub id: String,
    pub start: Option<usize>,
    pub end: Option<usize>,
    /// Indexed by `t - 1`.
    pub dispatch: Vec<f64>,
}

impl BatteryDecision {
    pub fn idle(id: impl Into<String>, n_steps: usize) -> Self {
        Self {
            id: id.into(),
            start: None,
            end: None,
            dispatch: vec![0.0; n_steps],
        }
    }

    pub fn is_discharging(&self, t: usize) -> bool {
        match self.start {
            Some(s) => t >= s && self.end.is_none_or(|e| t < e),
            None => false,
        }
    }

    /// Battery counts as an energization source from its start step onward.
    pub fn has_started(&self, t: usize) -> bool {
        self.start.is_some_and(|s| t >= s)
    }
}

/// Per-step on/off status of one bus or branch, indexed by `t - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusSeries {
    pub id: String,
    pub on: Vec<bool>,
}

impl StatusSeries {
    pub fn at(&self, t: usize) -> bool {
        self.on[t - 1]
    }

    pub fn first_on(&self) -> Option<usize> {
        self.on.iter().position(|&x| x).map(|i| i + 1)
    }
}

/// Power values a solver reported for its continuous variables, kept so the
/// validator can compare them against the closed-form trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportedPower {
    pub generators: Vec<Vec<f64>>,
    pub fuel_cells: Vec<Vec<f64>>,
}

/// A complete black-start plan. Device lists are aligned with the case's
/// device order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub n_steps: usize,
    pub generators: Vec<DeviceDecision>,
    pub fuel_cells: Vec<DeviceDecision>,
    pub batteries: Vec<BatteryDecision>,
    pub buses: Vec<StatusSeries>,
    pub branches: Vec<StatusSeries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported_power: Option<ReportedPower>,
}

impl Schedule {
    /// Nothing starts and nothing is energized.
    pub fn dark(case: &GridCase) -> Self {
        let n = case.n_steps();
        let never = |id: &String| DeviceDecision {
            id: id.clone(),
            start: None,
        };
        let off = |id: &String| StatusSeries {
            id: id.clone(),
            on: vec![false; n],
        };
        Self {
            n_steps: n,
            generators: case.generators.iter().map(|g| never(&g.id)).collect(),
            fuel_cells: case.fuel_cells.iter().map(|f| never(&f.id)).collect(),
            batteries: case
                .batteries
                .iter()
                .map(|b| BatteryDecision::idle(b.id.clone(), n))
                .collect(),
            buses: case.buses.iter().map(|b| off(&b.id)).collect(),
            branches: case.branches.iter().map(|k| off(&k.id)).collect(),
            reported_power: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
