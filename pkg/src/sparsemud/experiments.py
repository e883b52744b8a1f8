"""Batch Monte Carlo harness: seeded many-run batches, robust statistics,
phase-diagram sweeps, and asymptotic-versus-empirical comparison reports."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import find_xd
from .channel import apply_erasure, random_bits, transmit
from .ensemble import sample_poissonian, sample_regular
from .ucp import run_ucp

THREADS_ENV = "SPARSEMUD_THREADS"


def thread_count() -> int:
    n = os.cpu_count() or 1
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = min(n, max(1, int(env)))
        except ValueError:
            pass
    return n


def _as_grid(value) -> list[float]:
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, (list, np.ndarray)):
        return [float(v) for v in value]
    start, stop, step = (float(v) for v in value)
    if step <= 0:
        raise ValueError("grid step must be positive")
    n = int(math.floor((stop - start) / step + 0.5)) + 1
    if n < 1:
        raise ValueError("empty grid")
    # snap to the step lattice so 1.0:2.5:0.01 yields exact-looking values
    return [round(start + i * step, 12) for i in range(n)]


@dataclass(frozen=True)
class BatchConfig:
    ensemble: str
    K: int
    beta: object  # scalar, list, or (start, stop, step)
    C: object
    erasure: float = 0.0
    samples: int = 1
    base_seed: int = 0
    backend: str = "auto"
    max_cost: float = 2e9  # guard on K * samples * grid points

    def beta_grid(self) -> list[float]:
        return _as_grid(self.beta)

    def c_grid(self) -> list[float]:
        return _as_grid(self.C)


@dataclass
class BatchStats:
    ensemble: str
    C: float
    beta: float
    K: int
    samples: int
    xd_med: float
    xd_q1: float
    xd_q3: float
    xc_med: float
    xc_q1: float
    xc_q3: float
    ber_med: float
    ber_q1: float
    ber_q3: float
    frac_guess: float
    frac_contra: float


def run_one(
    ensemble: str,
    K: int,
    beta: float,
    C: float,
    erasure: float,
    run_seed: int,
    backend: str = "auto",
):
    """One full sample -> transmit -> (erase) -> decode pass.

    The single run seed expands into independent sub-seeds for code, bits,
    erasure, and decoder via SeedSequence, so each stage is reproducible.
    """
    ss = np.random.SeedSequence(run_seed)
    s_code, s_bits, s_erase, s_dec = (int(v) for v in ss.generate_state(4, np.uint64))
    if ensemble == "poisson":
        code = sample_poissonian(K, beta, C, s_code)
    elif ensemble == "regular":
        code = sample_regular(K, beta, C, s_code)
    else:
        raise ValueError(f"unknown ensemble {ensemble!r}")
    bits = random_bits(K, s_bits)
    signal = transmit(code, bits)
    if erasure > 0:
        code, signal = apply_erasure(code, signal, erasure, s_erase)
    return run_ucp(code, signal, s_dec, truth=bits, backend=backend)


def _run_point(
    ensemble: str,
    K: int,
    beta: float,
    C: float,
    erasure: float,
    samples: int,
    base_seed: int,
    point_index: int,
    backend: str,
) -> BatchStats:
    # per-run seed: base seed XOR global run index (documented contract)
    seeds = [base_seed ^ (point_index * samples + i) for i in range(samples)]

    def work(seed):
        return run_one(ensemble, K, beta, C, erasure, seed, backend)

    threads = thread_count()
    if threads > 1 and samples > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, seeds))
    else:
        results = [work(s) for s in seeds]

    def quartiles(a):
        return np.percentile(a, [25.0, 50.0, 75.0])

    xd_q1, xd_med, xd_q3 = quartiles([r.x_D for r in results])
    xc_q1, xc_med, xc_q3 = quartiles([r.x_C for r in results])
    ber_q1, ber_med, ber_q3 = quartiles([r.ber for r in results])
    return BatchStats(
        ensemble=ensemble,
        C=C,
        beta=beta,
        K=K,
        samples=samples,
        xd_med=float(xd_med), xd_q1=float(xd_q1), xd_q3=float(xd_q3),
        xc_med=float(xc_med), xc_q1=float(xc_q1), xc_q3=float(xc_q3),
        ber_med=float(ber_med), ber_q1=float(ber_q1), ber_q3=float(ber_q3),
        frac_guess=float(np.mean([r.num_guesses > 0 for r in results])),
        frac_contra=float(np.mean([r.num_contradiction_events > 0 for r in results])),
    )


def run_batch(config: BatchConfig) -> list[BatchStats]:
    """One BatchStats row per (C, beta) grid point, in grid order."""
    if config.samples < 1:
        raise ValueError("samples must be >= 1")
    cs = config.c_grid()
    betas = config.beta_grid()
    n_points = len(cs) * len(betas)
    cost = float(config.K) * config.samples * n_points
    if cost > config.max_cost:
        raise ValueError(
            f"batch cost K*samples*points = {cost:.3g} exceeds guard {config.max_cost:.3g}"
        )
    rows = []
    point = 0
    for c in cs:
        for b in betas:
            rows.append(
                _run_point(
                    config.ensemble, config.K, b, c, config.erasure,
                    config.samples, config.base_seed, point, config.backend,
                )
            )
            point += 1
    return rows


@dataclass
class SweepResult:
    rows: list[BatchStats]
    # per C: first beta (grid order) where the regime indicator trips
    onset_xd: dict = field(default_factory=dict)
    onset_xc: dict = field(default_factory=dict)
    onset_ber: dict = field(default_factory=dict)


def sweep_phase_diagram(config: BatchConfig) -> SweepResult:
    """Batch over the (C, beta) grid plus grid-order threshold detection."""
    rows = run_batch(config)
    out = SweepResult(rows=rows)
    for r in rows:
        if r.xd_med < 1.0 and r.C not in out.onset_xd:
            out.onset_xd[r.C] = r.beta
        if r.xc_med < 1.0 and r.C not in out.onset_xc:
            out.onset_xc[r.C] = r.beta
        if r.ber_med > 0.0 and r.C not in out.onset_ber:
            out.onset_ber[r.C] = r.beta
    return out


@dataclass
class CompareRow:
    C: float
    beta: float
    K: int
    samples: int
    ode_xd: float
    xd_med: float
    xd_q1: float
    xd_q3: float
    gap: float


@dataclass
class CompareReport:
    rows: list[CompareRow]
    passed: bool


def compare_asymptotic_empirical(
    C: float,
    beta_range,
    K: int,
    samples: int,
    base_seed: int = 0,
    dx: float = 1e-4,
    backend: str = "auto",
    gap_bound: float = 0.02,
) -> CompareReport:
    """Per beta: ODE threshold vs empirical median and quartiles of x_D.

    PASS when at every beta where both sides are below 1, the gap stays
    within gap_bound and the empirical interquartile interval contains the
    ODE value.
    """
    if not float(C).is_integer():
        raise ValueError("comparison requires integer C (regular ensemble)")
    betas = _as_grid(beta_range)
    rows = []
    passed = True
    for i, b in enumerate(betas):
        ode_xd = find_xd(b, C, "regular", dx=dx)
        stats = _run_point("regular", K, b, C, 0.0, samples, base_seed, i, backend)
        gap = abs(ode_xd - stats.xd_med)
        rows.append(
            CompareRow(
                C=C, beta=b, K=K, samples=samples, ode_xd=ode_xd,
                xd_med=stats.xd_med, xd_q1=stats.xd_q1, xd_q3=stats.xd_q3, gap=gap,
            )
        )
        if ode_xd < 1.0 and stats.xd_med < 1.0:
            if gap > gap_bound or not (stats.xd_q1 <= ode_xd <= stats.xd_q3):
                passed = False
    return CompareReport(rows=rows, passed=passed)


SWEEP_HEADER = ("C,beta,K,samples,xd_med,xd_q1,xd_q3,xc_med,xc_q1,xc_q3,"
                "ber_med,ber_q1,ber_q3,frac_guess,frac_contra")
COMPARE_HEADER = "C,beta,K,samples,ode_xd,xd_med,xd_q1,xd_q3,gap"


def _fmt(v: float) -> str:
    return f"{v:.10g}"


def write_sweep_csv(rows: list[BatchStats], path) -> None:
    with open(path, "w") as fh:
        fh.write(SWEEP_HEADER + "\n")
        for r in rows:
            fh.write(",".join([
                _fmt(r.C), _fmt(r.beta), str(r.K), str(r.samples),
                _fmt(r.xd_med), _fmt(r.xd_q1), _fmt(r.xd_q3),
                _fmt(r.xc_med), _fmt(r.xc_q1), _fmt(r.xc_q3),
                _fmt(r.ber_med), _fmt(r.ber_q1), _fmt(r.ber_q3),
                _fmt(r.frac_guess), _fmt(r.frac_contra),
            ]) + "\n")


def write_compare_csv(report: CompareReport, path) -> None:
    with open(path, "w") as fh:
        fh.write(COMPARE_HEADER + "\n")
        for r in report.rows:
            fh.write(",".join([
                _fmt(r.C), _fmt(r.beta), str(r.K), str(r.samples),
                _fmt(r.ode_xd), _fmt(r.xd_med), _fmt(r.xd_q1), _fmt(r.xd_q3),
                _fmt(r.gap),
            ]) + "\n")
