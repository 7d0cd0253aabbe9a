"""Deterministic RNG utilities.

All randomness in the toolkit flows through :func:`rng_from` so that every
run is a pure function of its seed(s).  The generator is NumPy's PCG64 with
ziggurat normals (``numpy.random.default_rng``); the algorithm choice is
fixed per release via the pinned NumPy dependency.  Substreams are derived
with ``SeedSequence`` from the master seed plus integer key material, so
parallel cells never share a stream and results do not depend on execution
order.
"""

import hashlib

import numpy as np


def key_from_string(text: str) -> int:
    """Stable 64-bit integer key for a string (unlike built-in ``hash``)."""
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def key_from_float(value: float, resolution: float = 1e-9) -> int:
    """Stable integer key for a float, quantized to ``resolution``."""
    return int(round(value / resolution))


def _material(seed: int, keys) -> list:
    material = [int(seed)]
    for key in keys:
        if isinstance(key, str):
            material.append(key_from_string(key))
        elif isinstance(key, float):
            material.append(key_from_float(key))
        else:
            material.append(int(key))
    return material


def rng_from(seed: int, *keys) -> np.random.Generator:
    """Generator for the substream identified by ``(seed, *keys)``.

    String and float keys are converted to stable integers; with no keys the
    generator is seeded directly from ``seed``.
    """
    return np.random.default_rng(np.random.SeedSequence(_material(seed, keys)))


def derive_seed(seed: int, *keys) -> int:
    """A plain integer seed for the substream ``(seed, *keys)``.

    Used where a component wants to re-seed itself (e.g. one benchmark cell
    per (kind, eta) pair) so results are independent of execution order.
    """
    state = np.random.SeedSequence(_material(seed, keys)).generate_state(1, np.uint64)
    return int(state[0] >> 1)  # keep it inside a signed 64-bit range
