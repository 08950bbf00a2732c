"""Left invertibility of linear systems with quantized outputs.

The package decides uniform left D-invertibility (ULDI) of systems

    x(k+1) = A x(k) + B u(k),   y(k) = floor(pi_p x(k)),

with a finite input alphabet, and uniform left invertibility (ULI) in the
contractive and one-dimensional cases. The decisions rest on certified
box covers of attractors of iterated function systems, a shift graph over
attractor pieces and an exact polyhedral check of short input words.

Modules
-------
system_model  systems, canonical form, difference/doubled/inverse systems
spectral      contractive/expansive splitting, subspace chain, trap set
attractor     box covers, attractor approximation, strip predicates
invgraph      depth-k graphs over attractor pieces, proper paths
polyhedral    exact in-strip word language (short windows)
analyzer      decision pipelines, 1-D classifier, oracle, helpers
sysfile       system description files
cli           command line front end
"""

from .exceptions import *  # noqa: F401,F403
from .system_model import (
    AffineIFS,
    DifferenceSystem,
    DoubledSystem,
    QuantizedSystem,
    build_difference,
    build_doubled,
    build_inverse,
    canonicalize,
    quantized_output,
    step,
)
from .spectral import spectral_split, invariant_subspace_in_kernel, trap_set
from .attractor import (
    BoxCover,
    compute_attractor,
    hutchinson_step,
    minkowski_sum,
    separation_check,
    strip_predicate,
)
from .invgraph import (
    InvGraph,
    build_graph,
    graph_to_edgelist,
    has_arbitrarily_long_proper_paths,
    prune_internal,
    stopping_k,
)
from .polyhedral import explore_language
from .analyzer import (
    AttractorInStrip,
    OneDRule,
    PathWitness,
    QuantizationSetQ,
    SeparationCert,
    Verdict,
    brute_force_oracle,
    classify_1d,
    decide_uldi,
    decide_uli_contractive,
    kronecker_witness,
    lw_matrix,
    verdict_report,
)
from .sysfile import dump_system, load_system, parse_system

__version__ = "0.1.0"
