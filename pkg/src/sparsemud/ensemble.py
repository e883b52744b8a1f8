"""Sparse spreading-code ensembles: Poissonian and regular sampling, degree stats, JSON I/O."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np


def _num_chips(num_users: int, beta: float) -> int:
    # round half up; banker's rounding would break M for half-integer K/beta
    m = int(math.floor(num_users / beta + 0.5))
    if m < 1:
        raise ValueError(f"load beta={beta} rounds K={num_users} down to zero chips")
    return m


@dataclass(frozen=True, eq=False)
class SparseCode:
    """Signed sparse incidence of K users on M chips.

    Entries are stored as parallel arrays sorted by (chip, user); at most one
    entry per pair, signs are ±1. Both adjacency views (per chip, per user)
    are derived lazily from the same arrays, so they can never disagree.
    """

    num_users: int
    num_chips: int
    beta: float
    C: float
    ensemble: str
    seed: int
    chip_idx: np.ndarray
    user_idx: np.ndarray
    signs: np.ndarray

    def __post_init__(self):
        if self.num_users < 1 or self.num_chips < 1:
            raise ValueError("need at least one user and one chip")
        if not (len(self.chip_idx) == len(self.user_idx) == len(self.signs)):
            raise ValueError("entry arrays must have equal length")
        if len(self.signs) and not np.all(np.abs(self.signs) == 1):
            raise ValueError("signs must be +1 or -1")
        if abs(self.beta - self.num_users / self.num_chips) > 1.0 / self.num_chips:
            raise ValueError("beta inconsistent with K/M")

    @property
    def num_entries(self) -> int:
        return len(self.chip_idx)

    @property
    def entries(self) -> list[tuple[int, int, int]]:
        return [
            (int(c), int(u), int(s))
            for c, u, s in zip(self.chip_idx, self.user_idx, self.signs)
        ]

    # per-chip adjacency (CSR); entry storage order is already chip-major
    @cached_property
    def chip_ptr(self) -> np.ndarray:
        counts = np.bincount(self.chip_idx, minlength=self.num_chips)
        return np.concatenate(([0], np.cumsum(counts))).astype(np.int64)

    @property
    def chip_users(self) -> np.ndarray:
        return self.user_idx

    @property
    def chip_signs(self) -> np.ndarray:
        return self.signs

    # per-user adjacency (CSR)
    @cached_property
    def _user_order(self) -> np.ndarray:
        return np.lexsort((self.chip_idx, self.user_idx))

    @cached_property
    def user_ptr(self) -> np.ndarray:
        counts = np.bincount(self.user_idx, minlength=self.num_users)
        return np.concatenate(([0], np.cumsum(counts))).astype(np.int64)

    @cached_property
    def user_chips(self) -> np.ndarray:
        return self.chip_idx[self._user_order]

    @cached_property
    def user_signs(self) -> np.ndarray:
        return self.signs[self._user_order]

    @classmethod
    def from_entries(
        cls,
        num_users: int,
        num_chips: int,
        entries,
        C: float = 0.0,
        ensemble: str = "explicit",
        seed: int = 0,
        beta: float | None = None,
    ) -> "SparseCode":
        """Build a code from an explicit (chip, user, sign) entry list."""
        ents = sorted((int(c), int(u), int(s)) for c, u, s in entries)
        for i in range(1, len(ents)):
            if ents[i][:2] == ents[i - 1][:2]:
                raise ValueError(f"duplicate entry for chip/user pair {ents[i][:2]}")
        for c, u, _s in ents:
            if not (0 <= c < num_chips and 0 <= u < num_users):
                raise ValueError(f"entry ({c},{u}) out of range")
        chip = np.array([e[0] for e in ents], dtype=np.int64)
        user = np.array([e[1] for e in ents], dtype=np.int64)
        sgn = np.array([e[2] for e in ents], dtype=np.int8)
        return cls(
            num_users=num_users,
            num_chips=num_chips,
            beta=beta if beta is not None else num_users / num_chips,
            C=C,
            ensemble=ensemble,
            seed=seed,
            chip_idx=chip,
            user_idx=user,
            signs=sgn,
        )


@dataclass(frozen=True)
class DegreeStats:
    chip_hist: np.ndarray
    user_hist: np.ndarray
    mean_chip_degree: float
    mean_user_degree: float


def _distinct_cells(rng: np.random.Generator, n_cells: int, count: int) -> np.ndarray:
    """Uniform sample of `count` distinct cell indices from range(n_cells), draw order."""
    if count == 0:
        return np.empty(0, dtype=np.int64)
    # dense regime: rejection would coupon-collect, permute instead
    if 4 * count > n_cells and n_cells <= (1 << 24):
        return rng.permutation(n_cells)[:count].astype(np.int64)
    raw = rng.integers(0, n_cells, size=count + 16, dtype=np.int64)
    while True:
        vals, first = np.unique(raw, return_index=True)
        if len(vals) >= count:
            return raw[np.sort(first)[:count]]
        extra = rng.integers(0, n_cells, size=(count - len(vals)) + 16, dtype=np.int64)
        raw = np.concatenate([raw, extra])


def sample_poissonian(K: int, beta: float, C: float, seed: int) -> SparseCode:
    """Sample a code where each (chip, user) entry exists independently with probability C/M.

    Mean user degree is C, mean chip degree is L = C*beta. Signs are uniform ±1.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if beta <= 0 or C <= 0:
        raise ValueError("beta and C must be positive")
    M = _num_chips(K, beta)
    p = C / M
    if p > 1:
        raise ValueError(f"entry probability C/M = {C}/{M} exceeds 1")
    rng = np.random.default_rng(seed)
    n_cells = M * K
    n_entries = int(rng.binomial(n_cells, p))
    cells = _distinct_cells(rng, n_cells, n_entries)
    sgn = (rng.integers(0, 2, size=n_entries, dtype=np.int8) * 2 - 1).astype(np.int8)
    chip = cells // K
    user = cells % K
    order = np.lexsort((user, chip))
    return SparseCode(
        num_users=K,
        num_chips=M,
        beta=K / M,
        C=C,
        ensemble="poisson",
        seed=seed,
        chip_idx=chip[order],
        user_idx=user[order],
        signs=sgn[order],
    )


def sample_regular(K: int, beta: float, C: float, seed: int) -> SparseCode:
    """Sample a code where every user hits exactly C distinct chips (uniform ±1 signs).

    Fractional C = n + f gives floor(f*K) users degree n+1 and the rest degree n.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if beta <= 0 or C <= 0:
        raise ValueError("beta and C must be positive")
    M = _num_chips(K, beta)
    if math.ceil(C) > M:
        raise ValueError(f"user degree ceil({C}) exceeds chip count {M}")
    n_low = int(math.floor(C))
    frac = C - n_low
    # 1e-9 guard: C - floor(C) carries float noise (e.g. 2.3 - 2 = 0.2999...)
    n_high_users = int(math.floor(frac * K + 1e-9))
    degrees = [(n_low + 1, n_high_users), (n_low, K - n_high_users)]

    rng = np.random.default_rng(seed)
    chip_parts = []
    user_parts = []
    next_user = 0
    for deg, group in degrees:
        if group == 0:
            continue
        users = np.arange(next_user, next_user + group, dtype=np.int64)
        next_user += group
        if deg == 0:
            continue
        rows = rng.integers(0, M, size=(group, deg), dtype=np.int64)
        while True:
            srt = np.sort(rows, axis=1)
            bad = (srt[:, 1:] == srt[:, :-1]).any(axis=1)
            if not bad.any():
                break
            rows[bad] = rng.integers(0, M, size=(int(bad.sum()), deg), dtype=np.int64)
        chip_parts.append(rows.ravel())
        user_parts.append(np.repeat(users, deg))
    if chip_parts:
        chip = np.concatenate(chip_parts)
        user = np.concatenate(user_parts)
    else:
        chip = np.empty(0, dtype=np.int64)
        user = np.empty(0, dtype=np.int64)
    sgn = (rng.integers(0, 2, size=len(chip), dtype=np.int8) * 2 - 1).astype(np.int8)
    order = np.lexsort((user, chip))
    return SparseCode(
        num_users=K,
        num_chips=M,
        beta=K / M,
        C=C,
        ensemble="regular",
        seed=seed,
        chip_idx=chip[order],
        user_idx=user[order],
        signs=sgn[order],
    )


def degree_stats(code: SparseCode) -> DegreeStats:
    """Exact chip- and user-degree histograms and their means."""
    chip_deg = np.bincount(code.chip_idx, minlength=code.num_chips)
    user_deg = np.bincount(code.user_idx, minlength=code.num_users)
    return DegreeStats(
        chip_hist=np.bincount(chip_deg),
        user_hist=np.bincount(user_deg),
        mean_chip_degree=code.num_entries / code.num_chips,
        mean_user_degree=code.num_entries / code.num_users,
    )


def write_code(code: SparseCode, path) -> None:
    doc = {
        "K": code.num_users,
        "M": code.num_chips,
        "beta": code.beta,
        "C": code.C,
        "ensemble": code.ensemble,
        "seed": code.seed,
        "entries": [[int(c), int(u), int(s)] for c, u, s in
                    zip(code.chip_idx, code.user_idx, code.signs)],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, separators=(",", ":"))
        fh.write("\n")


def read_code(path) -> SparseCode:
    with open(path) as fh:
        doc = json.load(fh)
    try:
        entries = doc["entries"]
        code = SparseCode.from_entries(
            num_users=int(doc["K"]),
            num_chips=int(doc["M"]),
            entries=entries,
            C=float(doc["C"]),
            ensemble=str(doc["ensemble"]),
            seed=int(doc["seed"]),
            beta=float(doc["beta"]),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed code file {path}: {exc}") from exc
    return code
