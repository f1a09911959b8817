//! Weights, ball families and Muckenhoupt characteristics.

mod ap;
mod ball;
mod weight;

pub use ap::{
    ap_ball_values, ap_characteristic, check_ap_inclusion, check_product_ap, comparison_constant, doubling_constant,
    holder_ap_bound, measure_comparison_fit, random_subset_pairs, ComparisonFit, ProductApReport, SubsetPair, BETA_MIN,
};
pub use ball::{Ball, BallFamily, Metric};
pub(crate) use ball::{center_mask, require_covered, BallEngine, LinePrefix};
pub use weight::{
    check_split, complement_axes, power_weight, power_weight_with_offset, product_weight, split_indices, Weight,
    WeightSpec, WeightStructure,
};
