"""randwit: error suppression for entanglement witnesses via randomized
(tuned) measurements.

Closed-form worst-case separable bounds under bounded measurement infidelity,
the tuned-measurement transform with discrete randomization groups, an
alternating-convex-search optimizer, dephasing gate noise, and finite-shot
witness estimation.
"""

__version__ = "0.1.0"

from .bounds import (
    bound_lab,
    bound_tuned,
    general_linear_bound,
    pq_measurements,
    visibility_threshold,
    worst_lab_measurements,
    worst_tuned_measurements,
)
from .linalg import eigh, hs_norm, kron, min_eig_vector, psd_project
from .measurements import (
    Povm,
    QubitObservableParams,
    TargetMeasurement,
    infidelity,
    misalignment_gap,
    qubit_decompose,
    sandwich_check,
    tune,
    tune_discrete_fourier,
    tune_discrete_signs,
)
from .noise import (
    DephasingGateModel,
    KrausChannel,
    apply_channel,
    average_gate_fidelity,
    calibrate_dephasing,
    dephased_phase_gate,
    dual_channel,
    gate_independent_bound,
    min_gate_fidelity,
    noisy_tuned_observable,
)
from .optimizer import (
    BoundEstimate,
    ProductState,
    SearchConfig,
    lab_measurement_step,
    min_product_expectation,
    tuned_measurement_step,
    worst_case_bound,
)
from .sampling import ShotPlan, WitnessEstimate, born_probabilities, estimate_witness, sample_counts
from .witnesses import (
    MeasurementAssignment,
    ProductTermWitness,
    ProjectorRef,
    assemble_observable,
    certification_capability,
    expectation,
    mub_witness,
    two_qubit_xz_witness,
)
