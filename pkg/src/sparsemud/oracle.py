"""Brute-force ground truth at desk scale: exhaustive solution enumeration,
decoder verification against the full solution set, exact z-factor rationals."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from .channel import BitVector, Signal
from .ensemble import SparseCode
from .ucp import Decoder, DecodeResult, STATUS_UNIQUE_JO

ENUMERATION_CAP = 24
_CHUNK = 1 << 20


@dataclass
class SolutionSet:
    """All bit vectors reproducing the signal on its non-erased chips."""

    solutions: np.ndarray  # (n, K) int8
    num_users: int
    exhaustive: bool = True

    def __len__(self) -> int:
        return len(self.solutions)

    def contains(self, bits) -> bool:
        vals = bits.values if isinstance(bits, BitVector) else np.asarray(bits)
        return bool(np.any(np.all(self.solutions == vals[None, :], axis=1)))

    def all_agree(self, variable: int, value: int) -> bool:
        return bool(np.all(self.solutions[:, variable] == value))


def enumerate_solutions(
    code: SparseCode, signal: Signal, cap: int = ENUMERATION_CAP
) -> SolutionSet:
    """Check every one of the 2^K bit vectors against the signal."""
    K = code.num_users
    if K > cap:
        raise ValueError(f"K={K} exceeds enumeration cap {cap}")
    if signal.num_chips != code.num_chips:
        raise ValueError("signal length does not match code")
    dense = np.zeros((code.num_chips, K), dtype=np.int32)
    dense[code.chip_idx, code.user_idx] = code.signs
    target = signal.y.astype(np.int32)
    shifts = np.arange(K, dtype=np.uint32)
    found = []
    total = 1 << K
    for lo in range(0, total, _CHUNK):
        idx = np.arange(lo, min(lo + _CHUNK, total), dtype=np.uint32)
        bits = (((idx[:, None] >> shifts[None, :]) & 1) * 2 - 1).astype(np.int8)
        ys = bits.astype(np.int32) @ dense.T
        hit = np.all(ys == target[None, :], axis=1)
        if hit.any():
            found.append(bits[hit])
    sols = np.concatenate(found) if found else np.empty((0, K), dtype=np.int8)
    return SolutionSet(solutions=sols, num_users=K)


@dataclass
class VerifyReport:
    passed: bool
    num_solutions: int
    result: DecodeResult
    checks: list[str] = field(default_factory=list)
    first_violation: str | None = None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "num_solutions": self.num_solutions,
            "status": self.result.status,
            "checks": self.checks,
            "first_violation": self.first_violation,
        }


def verify_deterministic_phase(
    code: SparseCode, signal: Signal, seed: int, cap: int = ENUMERATION_CAP
) -> VerifyReport:
    """Replay a decode and assert it against the exhaustive solution set.

    Pre-guess decimations must agree with every solution; a zero-guess run
    must return the unique solution; a zero-contradiction run must return
    some member of the solution set.
    """
    sols = enumerate_solutions(code, signal, cap=cap)
    checks: list[str] = []
    violation = None

    dec = Decoder(code, signal, seed)
    guessed = False
    while not dec.finished:
        ev = dec.step()
        if ev.kind == "guess":
            guessed = True
        elif not guessed and violation is None:
            if not sols.all_agree(ev.variable, ev.value):
                violation = (
                    f"step {ev.step}: forced b_{ev.variable}={ev.value:+d} "
                    f"disagrees with some enumerated solution"
                )
    res = dec.result()
    if violation is None:
        checks.append("pre-guess decimations agree with all solutions")

    if len(sols) == 0 and violation is None:
        violation = "no solution reproduces the signal (inconsistent instance)"

    if res.status == STATUS_UNIQUE_JO and violation is None:
        if len(sols) != 1:
            violation = f"status UNIQUE_JO but {len(sols)} solutions exist"
        elif not np.array_equal(res.estimate.values, sols.solutions[0]):
            violation = "status UNIQUE_JO but estimate is not the unique solution"
        else:
            checks.append("zero-guess run returned the unique solution")

    if res.num_contradiction_events == 0 and violation is None:
        if not sols.contains(res.estimate):
            violation = "no contradictions but estimate does not reproduce the signal"
        else:
            checks.append("zero-contradiction estimate is a member of the solution set")

    return VerifyReport(
        passed=violation is None,
        num_solutions=len(sols),
        result=res,
        checks=checks,
        first_violation=violation,
    )


def z_factor_oracle(l: int) -> Fraction:
    """Probability that removing one (correctly valued) variable from a random
    degenerate length-l chip leaves an extremal residual, by full enumeration.

    Enumerates all 2^l sign-weighted bit configurations, conditions on
    |y| < l, picks each variable with weight 1/l. Exact rational arithmetic.
    """
    if not 2 <= l <= 16:
        raise ValueError("l must lie in 2..16")
    degenerate = 0
    hits = 0
    for sigma in product((-1, 1), repeat=l):
        y = sum(sigma)
        if abs(y) == l:
            continue
        degenerate += 1
        hits += sum(1 for s in sigma if abs(y - s) == l - 1)
    return Fraction(hits, l * degenerate)
