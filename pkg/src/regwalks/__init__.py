"""Non-backtracking periodic walks on random regular graphs and their
random-matrix spectral statistics."""

__version__ = "0.1.0"

from .graphs import (  # noqa: E402
    RegularGraph,
    check_regular_simple_connected,
    complete_graph,
    generate_regular,
    load_graph,
    petersen_graph,
    serialize_graph,
)
from .rmt import c_coefficient, f_coe, f_coe_small_tau, k_coe, predicted_k_tilde, wigner_surmise  # noqa: E402
from .spectral import (  # noqa: E402
    adjacency_eigenvalues,
    counting_function,
    kesten_mckay_mu,
    kesten_mckay_phi,
    spectral_data,
    split_spectrum,
    unfold,
    y_series,
)
from .walks import (  # noqa: E402
    brute_force_count,
    build_hashimoto,
    count_periodic_exact,
    trace_power_spectral,
    verify_bass_identity,
)
