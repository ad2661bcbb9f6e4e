//! Loose Hamilton cycles in k-uniform hypergraphs.
//!
//! The crate provides a compact k-graph type, validators for cycles and
//! paths with machine-readable violation reports, explicit constructions
//! (strings, loose paths in complete k-partite k-graphs, the extremal graph
//! without Hamilton cycles, the A_k gadget), A_k-packings, an exact search
//! oracle for small hosts, Monte Carlo random-splitting experiments and a
//! linking pipeline that assembles loose Hamilton cycles on cluster systems.

pub mod constructive;
pub mod cycles;
pub mod hypergraph;
pub mod linking;
pub mod packing;
pub mod random_split;
pub mod search;

pub use cycles::{
    concatenate, extremities, validate_generic_cycle, validate_loose_cycle, validate_loose_path,
    validate_path_with, validate_tight_cycle, Certificate, CertificateKind, ConcatError,
    GenericCycle, LooseCycle, LoosePath, PathRules, Prepath, TightCycle, Violation,
};
pub use hypergraph::{GraphError, KGraph, Vertex, Walk};
pub use constructive::{
    build_ak, build_loose_path_complete, build_string, extremal_construction, AkGadget,
    ConstructError, ExtremalGraph, PartitionedVertexSet,
};
pub use search::{
    count_loose_hamilton, find_generic_hamilton, find_loose_hamilton, find_loose_path_constrained,
    find_spanning_loose_path, ConnectSpec, Count, Outcome, SearchBudget, SearchError,
};
pub use packing::{augment, connected_filter, greedy_pack, AkCopy, AugmentBudget, Packing, PackingError};
pub use random_split::{
    azuma_bound, kpartite_density, run_split_experiment, SplitError, SplitExperimentConfig,
    SplitReport, SplitVariant,
};
pub use linking::{
    absorb_exceptional, assemble_pipeline, build_supplementary, check_connected, choose_ab,
    cover_walk, extend_to_prepath, plan_congruences, verify_witness, AbSpec, ClusterGroup,
    ClusterSystem, ExtendedPrepath, HostKind, LinkError, LinkPlan, PipelineFailure, PipelineOutput,
    PipelineStage, SupplementaryGraph, SyntheticConfig, SyntheticInstance,
};
