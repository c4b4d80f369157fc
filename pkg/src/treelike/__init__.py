"""Average hyperbolicity of weighted similarity spaces and tree embeddings."""

from .core import (
    CompatibleTree,
    SimilaritySpace,
    WeightedGraph,
    gromov_product_matrix,
    gromov_product_similarity,
    rescale_to_unit,
    space_from_tree,
    threshold_graph,
    tree_gromov_product,
    validate_space,
    validate_tree,
)
from .hyperbolicity import (
    ExceptionalSets,
    ThresholdLadder,
    bad_set_measure,
    bad_set_profile,
    exceptional_sets,
    gromov_delta_worst_case,
    hyp_exact,
    hyp_monte_carlo,
    profile_integral,
    threshold_ladder,
)
from .regularity import (
    PartitionResult,
    RegularityParams,
    SpectralData,
    choose_spectral_cut,
    equitable_refine,
    rationalize_weights,
    regularity_pipeline,
    regularity_test,
    spectral_bucket_partition,
    weighted_adjacency_spectrum,
)
from .cliques import (
    CliqueStructure,
    ModificationLog,
    PartNeighborGraph,
    clique_closure,
    clique_repair,
    neighborhood_family,
    part_neighbor_graph,
    verify_cliques,
)
from .treebuild import (
    TreeBuildReport,
    best_alpha,
    build_tree,
    converse_check,
    merge_tree_leaves,
    split_atoms,
    tree_cost,
)
from .spinglass import (
    OverlapMap,
    SpinGlassModel,
    gibbs_exact,
    gibbs_mcmc,
    overlap,
    overlap_map,
    overlap_space,
    pure_state_tree,
    sk_couplings,
)
from .fixtures import PlantedFixture, generate_fixture

__version__ = "0.1.0"
