mod auc;
mod baselines;
mod estimate;
mod simulate;
mod sweep;
mod tree;

use clap::Args;
use serde_json::json;

use crate::config::Layered;

pub use auc::{run as auc, AucArgs};
pub use baselines::{run as baselines, BaselinesArgs};
pub use estimate::{run as estimate, EstimateArgs};
pub use simulate::{run as simulate, SimulateArgs};
pub use sweep::{run as sweep, SweepArgs};
pub use tree::{run as tree, TreeArgs};

/// Simulation flags shared by `simulate`, `tree` and `sweep`.
#[derive(Args, Debug)]
pub struct SimFlags {
    /// sim1..sim6
    #[arg(long)]
    pub scenario: Option<String>,
    /// Node count (star scenarios only).
    #[arg(long)]
    pub m: Option<usize>,
    /// Dimension of each real node.
    #[arg(long = "d", visible_alias = "dim")]
    pub d: Option<usize>,
    /// `rate` or `mean` reading of the exponential parameter.
    #[arg(long)]
    pub exponential: Option<String>,
}

impl SimFlags {
    /// Writes the flags under `prefix` (empty for top level).
    pub fn apply(&self, config: &mut Layered, prefix: &str) {
        let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        config.set(&key("scenario"), self.scenario.as_ref().map(|s| json!({ "name": s })));
        config.set(&key("m"), self.m);
        config.set(&key("d"), self.d);
        config.set(&key("exponential"), self.exponential.as_deref());
    }
}

/// Accepts `"sim1"` in config files as shorthand for `{"name": "sim1"}`.
pub fn expand_scenario(config: &mut Layered, key: &str) {
    if let Some(v) = config.get_mut(key) {
        if let Some(name) = v.as_str() {
            *v = json!({ "name": name });
        }
    }
}
