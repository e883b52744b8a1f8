"""Unit clause propagation detector: decimation, guessing, contradiction bookkeeping.

Two interchangeable backends produce bit-identical results: a pure-Python
reference implementation (stepwise, inspectable) and a compiled kernel in
``_fastucp``. Both consume the same splitmix64 random stream, so a run is
fully determined by (instance, seed) regardless of backend.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import BitVector, Signal
from .ensemble import SparseCode

_MASK64 = (1 << 64) - 1

STATUS_UNIQUE_JO = "UNIQUE_JO"
STATUS_JO_WITH_GUESSES = "JO_WITH_GUESSES"
STATUS_APPROXIMATE = "APPROXIMATE"


class SplitMix64:
    """splitmix64 stream; the compiled kernel replays exactly these draws."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def randbelow(self, n: int) -> int:
        # mask-and-reject on the next power of two: exactly uniform, and the
        # draw count depends only on the stream, never on Python internals
        mask = (1 << (n - 1).bit_length()) - 1
        while True:
            r = self.next64() & mask
            if r < n:
                return r

    def randbit(self) -> int:
        return self.next64() & 1


@dataclass
class ClauseRecord:
    sign: int
    multiplicity: int = 1
    contradicted: bool = False


class UnitClauseSet:
    """Aggregated forced assignments: one record per represented variable.

    Inserting the opposite sign for a represented variable discards the new
    clause, keeps the stored sign, marks the record contradicted, and counts
    one contradiction event (every conflicting insertion counts).
    """

    def __init__(self):
        self.records: dict[int, ClauseRecord] = {}
        self._order: list[int] = []
        self._pos: dict[int, int] = {}
        self.contradiction_events = 0

    def __len__(self) -> int:
        return len(self._order)

    def __contains__(self, var: int) -> bool:
        return var in self.records

    @property
    def represented_count(self) -> int:
        return len(self._order)

    def insert(self, var: int, sign: int) -> str:
        rec = self.records.get(var)
        if rec is None:
            self.records[var] = ClauseRecord(sign=sign)
            self._pos[var] = len(self._order)
            self._order.append(var)
            return "new"
        if rec.sign == sign:
            rec.multiplicity += 1
            return "repeat"
        rec.contradicted = True
        self.contradiction_events += 1
        return "contradiction"

    def remove(self, var: int) -> ClauseRecord | None:
        rec = self.records.pop(var, None)
        if rec is None:
            return None
        pos = self._pos.pop(var)
        last = self._order.pop()
        if last != var:
            self._order[pos] = last
            self._pos[last] = pos
        return rec

    def variable_at(self, idx: int) -> int:
        return self._order[idx]


@dataclass
class TraceData:
    """Per-step counters, row 0 is the pre-decimation state."""

    num_users: int
    clause_count: list[int] = field(default_factory=list)
    guesses: list[int] = field(default_factory=list)
    contradictions: list[int] = field(default_factory=list)
    errors: list[int] = field(default_factory=list)

    def write_csv(self, path) -> None:
        K = self.num_users
        with open(path, "w") as fh:
            fh.write("step,x,unit_clause_count,guesses_so_far,"
                     "contradictions_so_far,cum_bit_errors\n")
            for step in range(len(self.clause_count)):
                fh.write(f"{step},{step / K:.10g},{self.clause_count[step]},"
                         f"{self.guesses[step]},{self.contradictions[step]},"
                         f"{self.errors[step]}\n")


@dataclass
class DecoderState:
    code: SparseCode
    y: np.ndarray
    degree: np.ndarray
    retired: np.ndarray
    assignment: np.ndarray
    clauses: UnitClauseSet
    X: int = 0
    stall_step: int | None = None
    contra_step: int | None = None
    num_guesses: int = 0
    truth: np.ndarray | None = None
    cum_errors: int = 0
    trace: TraceData | None = None
    unassigned_order: list[int] = field(default_factory=list)
    unassigned_pos: dict[int, int] = field(default_factory=dict)

    @property
    def x_d(self) -> float | None:
        return None if self.stall_step is None else self.stall_step / self.code.num_users

    @property
    def x_c(self) -> float | None:
        return None if self.contra_step is None else self.contra_step / self.code.num_users


@dataclass
class DecodeResult:
    estimate: BitVector
    x_D: float
    x_C: float
    num_guesses: int
    num_contradiction_events: int
    status: str
    ber: float | None = None
    trace: TraceData | None = None


def validate_instance(code: SparseCode, signal: Signal) -> None:
    """Reject signals no bit vector can produce (magnitude or parity violation)."""
    if signal.num_chips != code.num_chips:
        raise ValueError(
            f"signal has {signal.num_chips} chips, code has {code.num_chips}"
        )
    deg = np.diff(code.chip_ptr)
    ay = np.abs(signal.y)
    if np.any(ay > deg) or np.any((deg - ay) % 2 != 0):
        raise ValueError("malformed instance: signal violates the parity invariant")


def initial_unit_clauses(code: SparseCode, signal: Signal) -> UnitClauseSet:
    """Forced assignments from extremal chips: |y| equals a positive degree."""
    validate_instance(code, signal)
    clauses, _retired, _y, _deg = _scan_initial(code, signal.y)
    return clauses


def _scan_initial(code, y):
    degree = np.diff(code.chip_ptr).astype(np.int64)
    retired = np.zeros(code.num_chips, dtype=bool)
    clauses = UnitClauseSet()
    yy = y.astype(np.int64).copy()
    for c in range(code.num_chips):
        d = degree[c]
        if d == 0:
            retired[c] = True
            continue
        if abs(yy[c]) == d:
            ysign = 1 if yy[c] > 0 else -1
            for e in range(code.chip_ptr[c], code.chip_ptr[c + 1]):
                clauses.insert(int(code.chip_users[e]), int(code.chip_signs[e]) * ysign)
            retired[c] = True
    return clauses, retired, yy, degree


def init_state(
    code: SparseCode,
    signal: Signal,
    truth: BitVector | None = None,
    record_trace: bool = False,
) -> DecoderState:
    validate_instance(code, signal)
    clauses, retired, y, degree = _scan_initial(code, signal.y)
    K = code.num_users
    state = DecoderState(
        code=code,
        y=y,
        degree=degree,
        retired=retired,
        assignment=np.zeros(K, dtype=np.int8),
        clauses=clauses,
        truth=None if truth is None else truth.values,
        trace=TraceData(num_users=K) if record_trace else None,
        unassigned_order=list(range(K)),
        unassigned_pos={k: k for k in range(K)},
    )
    if clauses.contradiction_events > 0:
        # only hand-crafted inconsistent signals can conflict before any decimation
        state.contra_step = 0
    if state.trace is not None:
        _trace_row(state)
    return state


def _trace_row(state: DecoderState) -> None:
    t = state.trace
    t.clause_count.append(state.clauses.represented_count)
    t.guesses.append(state.num_guesses)
    t.contradictions.append(state.clauses.contradiction_events)
    t.errors.append(state.cum_errors)


def _remove_unassigned(state: DecoderState, k: int) -> None:
    pos = state.unassigned_pos.pop(k)
    last = state.unassigned_order.pop()
    if last != k:
        state.unassigned_order[pos] = last
        state.unassigned_pos[last] = pos


def decimate(state: DecoderState, k: int, v: int) -> DecoderState:
    """Assign b_k = v, update residual signals/degrees, emit newly forced clauses."""
    if state.assignment[k] != 0:
        raise ValueError(f"variable {k} is already assigned")
    state.X += 1
    state.assignment[k] = v
    _remove_unassigned(state, k)
    state.clauses.remove(k)
    code = state.code
    for e in range(code.user_ptr[k], code.user_ptr[k + 1]):
        c = int(code.user_chips[e])
        if state.retired[c]:
            continue
        state.y[c] -= int(code.user_signs[e]) * v
        state.degree[c] -= 1
        if state.degree[c] == 0:
            state.retired[c] = True
        elif abs(state.y[c]) == state.degree[c]:
            ysign = 1 if state.y[c] > 0 else -1
            for f in range(code.chip_ptr[c], code.chip_ptr[c + 1]):
                j = int(code.chip_users[f])
                if state.assignment[j] != 0:
                    continue
                out = state.clauses.insert(j, int(code.chip_signs[f]) * ysign)
                if out == "contradiction" and state.contra_step is None:
                    state.contra_step = state.X
            state.retired[c] = True
    if state.truth is not None and v != state.truth[k]:
        state.cum_errors += 1
    if state.trace is not None:
        _trace_row(state)
    return state


@dataclass
class StepEvent:
    kind: str  # "forced" or "guess"
    variable: int
    value: int
    step: int


class Decoder:
    """Stepwise reference decoder; drives decimation with the seeded stream."""

    def __init__(self, code, signal, seed, truth=None, record_trace=False):
        self.state = init_state(code, signal, truth=truth, record_trace=record_trace)
        self.rng = SplitMix64(seed)

    @property
    def finished(self) -> bool:
        return self.state.X >= self.state.code.num_users

    def step(self) -> StepEvent:
        state = self.state
        if self.finished:
            raise RuntimeError("all variables already assigned")
        if state.clauses.represented_count > 0:
            idx = self.rng.randbelow(state.clauses.represented_count)
            k = state.clauses.variable_at(idx)
            v = state.clauses.records[k].sign
            kind = "forced"
        else:
            if state.stall_step is None:
                state.stall_step = state.X
            state.num_guesses += 1
            idx = self.rng.randbelow(len(state.unassigned_order))
            k = state.unassigned_order[idx]
            v = 1 if self.rng.randbit() else -1
            kind = "guess"
        decimate(state, k, v)
        return StepEvent(kind=kind, variable=k, value=v, step=state.X)

    def result(self) -> DecodeResult:
        if not self.finished:
            raise RuntimeError("decoding has not finished")
        return _build_result(self.state)


def _build_result(state: DecoderState) -> DecodeResult:
    K = state.code.num_users
    contra = state.clauses.contradiction_events
    if contra > 0:
        status = STATUS_APPROXIMATE
    elif state.num_guesses == 0:
        status = STATUS_UNIQUE_JO
    else:
        status = STATUS_JO_WITH_GUESSES
    ber = None
    if state.truth is not None:
        ber = float(np.mean(state.assignment != state.truth))
    return DecodeResult(
        estimate=BitVector(values=state.assignment.copy(), provenance="decoded"),
        x_D=1.0 if state.stall_step is None else state.stall_step / K,
        x_C=1.0 if state.contra_step is None else state.contra_step / K,
        num_guesses=state.num_guesses,
        num_contradiction_events=contra,
        status=status,
        ber=ber,
        trace=state.trace,
    )


def _run_python(code, signal, seed, truth, record_trace):
    dec = Decoder(code, signal, seed, truth=truth, record_trace=record_trace)
    while not dec.finished:
        dec.step()
    return dec.result()


def _run_fast(code, signal, seed, truth, record_trace):
    from ._fastucp import ucp_kernel

    validate_instance(code, signal)
    K = code.num_users
    truth_arr = np.empty(0, dtype=np.int8) if truth is None else truth.values.astype(np.int8)
    (bhat, stall_step, contra_step, guesses, contra_events,
     tr_clause, tr_guess, tr_contra, tr_err) = ucp_kernel(
        code.chip_ptr.astype(np.int64),
        code.chip_users.astype(np.int64),
        code.chip_signs.astype(np.int8),
        code.user_ptr.astype(np.int64),
        code.user_chips.astype(np.int64),
        code.user_signs.astype(np.int8),
        signal.y.astype(np.int64),
        np.uint64(seed & _MASK64),
        truth_arr,
    )
    trace = None
    if record_trace:
        trace = TraceData(
            num_users=K,
            clause_count=[int(v) for v in tr_clause],
            guesses=[int(v) for v in tr_guess],
            contradictions=[int(v) for v in tr_contra],
            errors=[int(v) for v in tr_err],
        )
    if contra_events > 0:
        status = STATUS_APPROXIMATE
    elif guesses == 0:
        status = STATUS_UNIQUE_JO
    else:
        status = STATUS_JO_WITH_GUESSES
    ber = None
    if truth is not None:
        ber = float(np.mean(bhat != truth_arr))
    return DecodeResult(
        estimate=BitVector(values=bhat, provenance="decoded"),
        x_D=1.0 if stall_step < 0 else stall_step / K,
        x_C=1.0 if contra_step < 0 else contra_step / K,
        num_guesses=int(guesses),
        num_contradiction_events=int(contra_events),
        status=status,
        ber=ber,
        trace=trace,
    )


def have_fast_backend() -> bool:
    try:
        from . import _fastucp  # noqa: F401
    except ImportError:
        return False
    return True


def run_ucp(
    code: SparseCode,
    signal: Signal,
    seed: int,
    truth: BitVector | None = None,
    record_trace: bool = False,
    backend: str = "auto",
) -> DecodeResult:
    """Decode by unit clause propagation: forced decimations, uniform random
    guesses when the clause set empties, x_D/x_C stamping, BER versus truth.

    backend: "auto" (compiled kernel when available), "python", or "fast".
    """
    if backend == "auto":
        backend = "fast" if have_fast_backend() else "python"
    if backend == "python":
        return _run_python(code, signal, seed, truth, record_trace)
    if backend == "fast":
        return _run_fast(code, signal, seed, truth, record_trace)
    raise ValueError(f"unknown backend {backend!r}")


def bit_error_rate(estimate: BitVector, truth: BitVector) -> float:
    a = estimate.values if isinstance(estimate, BitVector) else np.asarray(estimate)
    b = truth.values if isinstance(truth, BitVector) else np.asarray(truth)
    if len(a) != len(b):
        raise ValueError("length mismatch")
    return float(np.mean(a != b))
