//! Compositional simplicity measures on finite combinational systems.
//!
//! Engines are generic over a [`Scalar`]; the aliases below fix the exact
//! arbitrary-precision rational instantiation used by the CLI and tests.

pub mod cosm;
pub mod cosmos;
pub mod cost;
pub mod dualnet;
pub mod error;
pub mod expr;
pub mod fixtures;
pub mod metric;
pub mod multiset;
pub mod oracle;
pub mod pattern;
pub mod scalar;
pub mod structure;
pub mod system;

pub use cost::{CostVector, ExtCost, Intensity};
pub use cosm::{relative_simplicity, simplicity, simplicity_table, RelativeMode, SimplicityCache, SimplicityTable};
pub use cosmos::{bundle, bundle_dominates, bundle_table, minkowski_sum, pareto_filter, Bundle};
pub use dualnet::{coherence_degree, fixed_point_iteration, lmi_distance, Iteration, lossy_frontier, CoherenceReport, LmiParams, LossyFrontier, Polarity};
pub use error::{Error, Result};
pub use pattern::{classify_multipattern, multipattern_frontier, pattern_intensity, Classification, Denominator, PatternEngine, PatternRecord};
pub use metric::{hutchinson_distance, hutchinson_metric, intension_extension, q_distribution, tanimoto, tanimoto_metrics, MetricTable, QDistribution};
pub use multiset::{multiset_simplicity, vector_multiset_simplicity, Multiset, MultisetResult, Solver};
pub use expr::{expression_cost, random_expression, vector_expression_cost, AutoOp, Expression};
pub use scalar::{parse_scalar, Scalar};
pub use structure::{build_subpattern_graph, cost_associativity, gamma_check, order_diagnostics, subpattern_graph, transitivity_composition_check, ChainScan, PositionPolicy, Relation, SubpatternGraph};
pub use system::{
    generate_builtin, load_system, load_system_file, validate_filtration, BuiltinFamily,
    CombinationalSystem, GenerateParams, MeasureDraft, MeasureSpec, Reaction, SystemBuilder,
};

pub type Rational = num_rational::BigRational;
pub type Cost = ExtCost<Rational>;
pub type Vector = CostVector<Rational>;
pub type System = CombinationalSystem<Rational>;
