"""Multi-level power-of-two spiking neurons.

Thin python surface over the C++ core: quantizers, neuron dynamics, the
multiplier-free shift-accumulate kernel, distribution-level analysis, the
energy model and a small training harness.
"""

from ._core import (
    SpikeLevel,
    bit_utilization,
    delta_pointwise,
    entropy_decomposition,
    expected_abs_error,
    float_reference,
    layer_energy_mj,
    lemma1_condition,
    make_level_set,
    output_entropy,
    q_int,
    q_shift,
    q_uniform,
    run_sequence,
    shift_matvec,
    spike_rate,
    ste_mask,
    synth_dataset,
    train_synthetic,
)

__all__ = [
    "SpikeLevel",
    "bit_utilization",
    "delta_pointwise",
    "entropy_decomposition",
    "expected_abs_error",
    "float_reference",
    "layer_energy_mj",
    "lemma1_condition",
    "make_level_set",
    "output_entropy",
    "q_int",
    "q_shift",
    "q_uniform",
    "run_sequence",
    "shift_matvec",
    "spike_rate",
    "ste_mask",
    "synth_dataset",
    "train_synthetic",
]
