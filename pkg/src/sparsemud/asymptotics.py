"""Mean-field analysis of the decimation process.

Tracks the density phi_l(x) of degenerate chips of residual degree l and the
density omega_c(x) of unassigned variables represented c times in the unit
clause set (the regular ensemble tracks c = 0..C, the Poissonian only c = 0,
the unrepresented mass). The deterministic phase ends at the first x with
omega_0(x) = 1 - x, found by RK4 integration with bisection refinement; the
Poissonian phi system also admits an exact polynomial solution used as an
independent cross-check on the integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

TERM_ROOT_FOUND = "ROOT_FOUND"
TERM_REACHED_ONE = "REACHED_ONE"

NEAR_ROOT_THRESHOLD = 1e-4
# the end of the run shrinks (1-x) - omega_0 toward 0 trivially; the grazing
# minimum that marks a near-transition sits in the interior, so scan below this
_MIN_GAP_SCAN_LIMIT = 0.99


def z_factor(l: int) -> float:
    """Probability a degenerate chip of degree l turns extremal when one of its
    variables is decimated to its true value: 2^(1-l) / (1 - 2^(1-l))."""
    if l < 2:
        raise ValueError("clause length must be >= 2")
    t = 2.0 ** (1 - l)
    return t / (1.0 - t)


def z_factor_exact(l: int) -> Fraction:
    if l < 2:
        raise ValueError("clause length must be >= 2")
    t = Fraction(1, 2 ** (l - 1))
    return t / (1 - t)


def default_lmax(L: float) -> int:
    return max(math.ceil(L + 10.0 * math.sqrt(L)), 30)


def _poisson_pmf(l: int, L: float) -> float:
    return math.exp(-L + l * math.log(L) - math.lgamma(l + 1))


def _poisson_tail_mass(L: float, lmax: int) -> float:
    total = 0.0
    l = lmax + 1
    while True:
        term = _poisson_pmf(l, L)
        total += term
        if term < 1e-30 and l > L:
            return total
        l += 1


@dataclass(frozen=True, eq=False)
class OdeState:
    """Mean-field state at rescaled time x: phi[i] holds phi_{i+2} for
    l = 2..L_max, omega[c] holds omega_c (length 1 for the Poisson system)."""

    x: float
    phi: np.ndarray
    omega: np.ndarray
    beta: float
    C: float
    L: float
    L_max: int

    def phi_l(self, l: int) -> float:
        if not 2 <= l <= self.L_max:
            raise ValueError(f"l={l} outside 2..{self.L_max}")
        return float(self.phi[l - 2])

    def omega_c(self, c: int) -> float:
        return float(self.omega[c])


def _phi0(beta: float, C: float, lmax: int) -> np.ndarray:
    L = C * beta
    ls = np.arange(2, lmax + 1)
    pmf = np.array([_poisson_pmf(int(l), L) for l in ls])
    return pmf * (1.0 - 2.0 ** (1.0 - ls)) / beta


def poisson_omega0_series(beta: float, C: float) -> float:
    """omega_0(0) as the direct sum exp(-(1/beta) sum_l l 2^(1-l) pois(l; L))."""
    L = C * beta
    total = 0.0
    l = 1
    while True:
        term = l * 2.0 ** (1 - l) * _poisson_pmf(l, L)
        total += term
        if term < 1e-25 and l > L:
            break
        l += 1
    return math.exp(-total / beta)


def poisson_initial_state(beta: float, C: float, L_max: int | None = None) -> OdeState:
    """phi_l(0) = (1/beta) pois(l; L) (1 - 2^(1-l)); omega_0(0) = exp(-C e^(-L/2))."""
    if beta <= 0 or C <= 0:
        raise ValueError("beta and C must be positive")
    L = C * beta
    lmax = default_lmax(L) if L_max is None else int(L_max)
    tail = _poisson_tail_mass(L, lmax)
    if tail >= 1e-10:
        raise ValueError(
            f"L_max={lmax} leaves Poisson tail mass {tail:.2e} >= 1e-10 at L={L}"
        )
    omega0 = math.exp(-C * math.exp(-L / 2.0))
    return OdeState(
        x=0.0,
        phi=_phi0(beta, C, lmax),
        omega=np.array([omega0]),
        beta=beta,
        C=C,
        L=L,
        L_max=lmax,
    )


def regular_initial_state(beta: float, C: float, L_max: int | None = None) -> OdeState:
    """Same phi_l(0); omega_c(0) = Binomial(C, p) with p = e^(-L/2)."""
    if beta <= 0 or C <= 0:
        raise ValueError("beta and C must be positive")
    if not float(C).is_integer():
        raise ValueError("the regular ODE system is defined for integer C only")
    Ci = int(C)
    L = Ci * beta
    lmax = default_lmax(L) if L_max is None else int(L_max)
    tail = _poisson_tail_mass(L, lmax)
    if tail >= 1e-10:
        raise ValueError(
            f"L_max={lmax} leaves Poisson tail mass {tail:.2e} >= 1e-10 at L={L}"
        )
    p = math.exp(-L / 2.0)
    omega = np.array(
        [math.comb(Ci, c) * p**c * (1.0 - p) ** (Ci - c) for c in range(Ci + 1)]
    )
    return OdeState(
        x=0.0,
        phi=_phi0(beta, Ci, lmax),
        omega=omega,
        beta=beta,
        C=float(Ci),
        L=L,
        L_max=lmax,
    )


def _phi_coeffs(lmax: int):
    ls = np.arange(2, lmax + 1).astype(np.float64)
    zs = np.array([z_factor(int(l)) for l in range(2, lmax + 1)])
    # inflow weight from level l+1 into l (absent at l = L_max)
    inflow = np.zeros(lmax - 1)
    inflow[:-1] = (ls[:-1] + 1.0) * (1.0 - zs[1:])
    spawn = zs * ls * (ls - 1.0)  # new unit clauses per chip hit, weighted
    return ls, inflow, spawn


def ode_rhs_poisson(state: OdeState):
    """Returns (dphi/dx, domega/dx) for the Poissonian system."""
    if state.x >= 1:
        raise ValueError("x must be < 1")
    ls, inflow, spawn = _phi_coeffs(state.L_max)
    ux = 1.0 - state.x
    dphi = -ls * state.phi
    dphi[:-1] += inflow[:-1] * state.phi[1:]
    dphi /= ux
    clause_rate = float(spawn @ state.phi) / ux
    domega = np.array([-state.omega[0] / ux * clause_rate])
    return dphi, domega


def e_factor(omega: np.ndarray, C: int) -> float:
    """Mean residual degree of represented variables relative to all remaining.

    Decimated variables are drawn from the represented classes c >= 1, whose
    mean residual degree C - c is lower than the population average, so chips
    are hit at rate e < 1 per decimation relative to a uniform pick.
    """
    cs = np.arange(len(omega), dtype=np.float64)
    s0 = float(omega.sum())
    s1 = float(((C - cs) * omega).sum())
    rep = float(omega[1:].sum())
    rep1 = float(((C - cs[1:]) * omega[1:]).sum())
    if rep <= 0.0 or s1 <= 0.0:
        return 0.0
    return (rep1 / rep) * (s0 / s1)


def ode_rhs_regular(state: OdeState, force_unit_factors: bool = False):
    """Returns (dphi/dx, domega/dx) for the regular system.

    force_unit_factors=True pins e = 1 and f_c = 1, which collapses the phi
    and omega_0 equations onto the Poissonian ones (cross-check hook).
    """
    if state.x >= 1:
        raise ValueError("x must be < 1")
    C = int(state.C)
    ls, inflow, spawn = _phi_coeffs(state.L_max)
    cs = np.arange(C + 1, dtype=np.float64)
    om = state.omega
    ux = 1.0 - state.x

    s0 = float(om.sum())
    s1 = float(((C - cs) * om).sum())
    rep = s0 - float(om[0])

    if force_unit_factors:
        e = 1.0
        flux = om.copy()  # f_c = 1 means flux_c = omega_c
    else:
        if rep <= 0.0 or s1 <= 0.0:
            # no represented variables left: the deterministic phase is over
            return np.zeros_like(state.phi), np.zeros_like(om)
        e = (float(((C - cs[1:]) * om[1:]).sum()) / rep) * (s0 / s1)
        flux = (C - cs) * om * (s0 / s1)

    dphi = -ls * state.phi
    dphi[:-1] += inflow[:-1] * state.phi[1:]
    dphi *= e / ux

    clause_rate = e * float(spawn @ state.phi) / ux
    domega = np.empty_like(om)
    domega[0] = -flux[0] / ux * clause_rate
    if rep > 0.0:
        domega[1:] = -om[1:] / rep + (flux[:-1] - flux[1:]) / ux * clause_rate
    else:
        domega[1:] = (flux[:-1] - flux[1:]) / ux * clause_rate
    return dphi, domega


@dataclass
class Trajectory:
    xs: np.ndarray
    phis: np.ndarray    # (n, L_max-1)
    omegas: np.ndarray  # (n, C_max+1)
    x_D: float
    termination: str
    min_gap: float
    near_root: bool
    beta: float
    C: float
    L_max: int

    def __len__(self) -> int:
        return len(self.xs)

    def state_at(self, i: int) -> OdeState:
        return OdeState(
            x=float(self.xs[i]),
            phi=self.phis[i],
            omega=self.omegas[i],
            beta=self.beta,
            C=self.C,
            L=self.C * self.beta,
            L_max=self.L_max,
        )

    @property
    def omega0(self) -> np.ndarray:
        return self.omegas[:, 0]


def _rk4_step(rhs, state: OdeState, h: float) -> OdeState:
    x, phi, om = state.x, state.phi, state.omega
    k1p, k1o = rhs(state)
    k2p, k2o = rhs(replace(state, x=x + h / 2, phi=phi + h / 2 * k1p, omega=om + h / 2 * k1o))
    k3p, k3o = rhs(replace(state, x=x + h / 2, phi=phi + h / 2 * k2p, omega=om + h / 2 * k2o))
    k4p, k4o = rhs(replace(state, x=x + h, phi=phi + h * k3p, omega=om + h * k3o))
    return replace(
        state,
        x=x + h,
        phi=phi + h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p),
        omega=om + h / 6 * (k1o + 2 * k2o + 2 * k3o + k4o),
    )


def _gap(state: OdeState) -> float:
    # g(x) = omega_0 - (1 - x); the deterministic phase ends where g hits 0
    return float(state.omega[0]) - (1.0 - state.x)


def integrate(
    initial: OdeState,
    rhs,
    dx: float = 1e-4,
    root_tol: float = 1e-9,
    stop_at_root: bool = True,
) -> Trajectory:
    """Fixed-step classic RK4 from x = 0 toward 1 - dx, with the threshold
    condition omega_0(x) = 1 - x refined by in-step bisection.

    stop_at_root=False integrates the full range regardless of the threshold
    (for method-equivalence studies of the phi subsystem, whose equations do
    not depend on omega).
    """
    if dx > 1e-3:
        raise ValueError("dx must be <= 1e-3")
    if root_tol > 1e-6:
        raise ValueError("root_tol must be <= 1e-6")

    n_steps = int(round(1.0 / dx)) - 1
    state = initial
    xs = [state.x]
    phis = [state.phi.copy()]
    omegas = [state.omega.copy()]
    min_gap = -_gap(state)
    termination = TERM_REACHED_ONE
    x_d = 1.0

    for i in range(n_steps):
        prev = state
        state = _rk4_step(rhs, prev, dx)
        state = replace(state, x=(i + 1) * dx)  # keep the grid exact
        g = _gap(state)
        if stop_at_root and g >= 0.0:
            lo, hi = 0.0, dx
            probe = state
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                probe = _rk4_step(rhs, prev, mid)
                gm = _gap(probe)
                if abs(gm) <= root_tol or (hi - lo) < 1e-16:
                    break
                if gm < 0.0:
                    lo = mid
                else:
                    hi = mid
            state = probe
            x_d = state.x
            termination = TERM_ROOT_FOUND
            xs.append(state.x)
            phis.append(state.phi.copy())
            omegas.append(state.omega.copy())
            break
        if state.x <= _MIN_GAP_SCAN_LIMIT and -g < min_gap:
            min_gap = -g
        xs.append(state.x)
        phis.append(state.phi.copy())
        omegas.append(state.omega.copy())

    near = termination == TERM_REACHED_ONE and min_gap < NEAR_ROOT_THRESHOLD
    return Trajectory(
        xs=np.array(xs),
        phis=np.array(phis),
        omegas=np.array(omegas),
        x_D=x_d,
        termination=termination,
        min_gap=min_gap,
        near_root=near,
        beta=initial.beta,
        C=initial.C,
        L_max=initial.L_max,
    )


@dataclass
class PolynomialSolution:
    """phi_l(x) = sum_i coef[l, i] (1-x)^i x^(L_max - i), i = l..L_max."""

    beta: float
    C: float
    L_max: int
    coef: np.ndarray  # (L_max+1, L_max+1), rows l = 2..L_max

    def phi_l(self, l: int, x: float) -> float:
        if not 2 <= l <= self.L_max:
            raise ValueError(f"l={l} outside 2..{self.L_max}")
        N = self.L_max
        i = np.arange(l, N + 1)
        u = 1.0 - x
        return float(np.sum(self.coef[l, l:] * u**i * x ** (N - i).astype(float)))

    def evaluate(self, x: float) -> np.ndarray:
        return np.array([self.phi_l(l, x) for l in range(2, self.L_max + 1)])


def poisson_polynomial_solution(
    beta: float, C: float, L_max: int | None = None
) -> PolynomialSolution:
    """Exact solution of the Poissonian phi system, solved top-down from
    l = L_max (whose equation decouples: phi(x) = phi(0) (1-x)^L_max)."""
    st = poisson_initial_state(beta, C, L_max)
    N = st.L_max
    phi0 = np.zeros(N + 1)
    phi0[2:] = st.phi
    coef = np.zeros((N + 1, N + 1))
    coef[N, N] = phi0[N]
    for l in range(N - 1, 1, -1):
        w = (l + 1) * (1.0 - z_factor(l + 1))
        part = np.zeros(N + 1)
        for i in range(l + 1, N + 1):
            part[i] = ((N - i + 1) * part[i - 1] - w * coef[l + 1, i]) / (i - l)
        # the homogeneous family is binom(N-l, i-l); pin it by the boundary value
        alpha = phi0[l] - part[N]
        for i in range(l, N + 1):
            coef[l, i] = part[i] + math.comb(N - l, i - l) * alpha
    return PolynomialSolution(beta=beta, C=C, L_max=N, coef=coef)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    with open(path, "w") as fh:
        header = ["x", "omega_0"] + [f"phi_{l}" for l in range(2, traj.L_max + 1)]
        fh.write(",".join(header) + "\n")
        for i in range(len(traj)):
            row = [f"{traj.xs[i]:.10g}", f"{traj.omegas[i, 0]:.12g}"]
            row.extend(f"{v:.12g}" for v in traj.phis[i])
            fh.write(",".join(row) + "\n")


def find_xd(
    beta: float,
    C: float,
    ensemble: str,
    dx: float = 1e-4,
    L_max: int | None = None,
    root_tol: float = 1e-9,
) -> float:
    """Deterministic-phase threshold x_D for the given ensemble and parameters."""
    if ensemble == "poisson":
        st = poisson_initial_state(beta, C, L_max)
        rhs = ode_rhs_poisson
    elif ensemble == "regular":
        st = regular_initial_state(beta, C, L_max)
        rhs = ode_rhs_regular
    else:
        raise ValueError(f"unknown ensemble {ensemble!r}")
    return integrate(st, rhs, dx=dx, root_tol=root_tol).x_D
