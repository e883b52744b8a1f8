"""Noiseless multi-access channel: BPSK superposition and optional chip erasure."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .ensemble import SparseCode


@dataclass(frozen=True, eq=False)
class BitVector:
    """Vector of ±1 bits with a provenance tag ("seed=<n>" or "explicit")."""

    values: np.ndarray
    provenance: str = "explicit"

    def __post_init__(self):
        if len(self.values) and not np.all(np.abs(self.values) == 1):
            raise ValueError("bits must be +1 or -1")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class Signal:
    """Integer chip values y, plus the original indices of any erased chips."""

    y: np.ndarray
    erased: tuple[int, ...] = field(default_factory=tuple)

    @property
    def num_chips(self) -> int:
        return len(self.y)


def random_bits(K: int, seed: int) -> BitVector:
    rng = np.random.default_rng(seed)
    vals = (rng.integers(0, 2, size=K, dtype=np.int8) * 2 - 1).astype(np.int8)
    return BitVector(values=vals, provenance=f"seed={seed}")


def transmit(code: SparseCode, bits: BitVector) -> Signal:
    """Superpose all users: y_mu = sum_k s_muk * b_k, exact integer arithmetic."""
    if len(bits) != code.num_users:
        raise ValueError(
            f"bit vector length {len(bits)} != K = {code.num_users}"
        )
    contrib = code.signs.astype(np.int64) * bits.values[code.user_idx].astype(np.int64)
    y = np.zeros(code.num_chips, dtype=np.int64)
    np.add.at(y, code.chip_idx, contrib)
    return Signal(y=y, erased=())


def erase_chips(code: SparseCode, erased) -> SparseCode:
    """Remove the given chips (with all incident entries) and reindex the rest."""
    erased = np.asarray(sorted(set(int(i) for i in erased)), dtype=np.int64)
    M = code.num_chips
    if len(erased) and (erased[0] < 0 or erased[-1] >= M):
        raise ValueError("erased chip index out of range")
    if len(erased) >= M:
        raise ValueError("erasure would remove every chip")
    keep = np.ones(M, dtype=bool)
    keep[erased] = False
    # old chip index -> new, order preserving
    new_index = np.cumsum(keep) - 1
    mask = keep[code.chip_idx]
    return SparseCode(
        num_users=code.num_users,
        num_chips=M - len(erased),
        beta=code.num_users / (M - len(erased)),
        C=code.C,
        ensemble=code.ensemble,
        seed=code.seed,
        chip_idx=new_index[code.chip_idx[mask]],
        user_idx=code.user_idx[mask],
        signs=code.signs[mask],
    )


def apply_erasure(
    code: SparseCode, signal: Signal, fraction: float, seed: int
) -> tuple[SparseCode, Signal]:
    """Delete a uniform random round(fraction*M) chips from both code and signal.

    Returns a self-consistent smaller instance; the dropped chips' original
    indices are recorded in the returned signal's erasure mask. The decoder
    then runs on the surviving instance with no erasure-specific logic.
    """
    if not 0 <= fraction < 1:
        raise ValueError("erasure fraction must lie in [0, 1)")
    if signal.erased:
        raise ValueError("signal already carries erasures")
    if signal.num_chips != code.num_chips:
        raise ValueError("signal length does not match code")
    M = code.num_chips
    n_erase = int(math.floor(fraction * M + 0.5))
    if n_erase == 0:
        return code, signal
    rng = np.random.default_rng(seed)
    erased = np.sort(rng.choice(M, size=n_erase, replace=False))
    new_code = erase_chips(code, erased)
    keep = np.ones(M, dtype=bool)
    keep[erased] = False
    new_signal = Signal(y=signal.y[keep], erased=tuple(int(i) for i in erased))
    return new_code, new_signal


def write_bits(bits: BitVector, path) -> None:
    doc = {"K": len(bits), "bits": [int(b) for b in bits.values]}
    with open(path, "w") as fh:
        json.dump(doc, fh, separators=(",", ":"))
        fh.write("\n")


def read_bits(path) -> BitVector:
    with open(path) as fh:
        doc = json.load(fh)
    try:
        vals = np.array(doc["bits"], dtype=np.int8)
        if len(vals) != int(doc["K"]):
            raise ValueError("bit count does not match K")
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed bits file {path}: {exc}") from exc
    return BitVector(values=vals, provenance=str(path))


def write_signal(signal: Signal, path) -> None:
    doc = {
        "M": signal.num_chips,
        "y": [int(v) for v in signal.y],
        "erased": list(signal.erased),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, separators=(",", ":"))
        fh.write("\n")


def read_signal(path) -> Signal:
    with open(path) as fh:
        doc = json.load(fh)
    try:
        y = np.array(doc["y"], dtype=np.int64)
        if len(y) != int(doc["M"]):
            raise ValueError("signal length does not match M")
        erased = tuple(int(i) for i in doc["erased"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed signal file {path}: {exc}") from exc
    return Signal(y=y, erased=erased)
