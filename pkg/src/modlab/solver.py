"""Contraction-mapping construction of NLS solutions, with a split-step oracle.

The fixed-point map is Phi(u)(t) = exp(itL) u0 - i Duhamel(F(u)) with
F(u) = sign * |u|^kappa u, i.e. the integral form of
i u_t + Laplace(u) = sign |u|^kappa u.  Picard iterates start from the free
trajectory; the split-step solver integrates the same equation by Strang
splitting and serves as an independent oracle for cross-validation.

Large data runs through a frequency-cutoff protocol: a total bound 2A and a
high-frequency tail bound 2*delta above a cutoff N constrain every iterate,
with the horizon T chosen from (A, N).  The protocol emits a certificate and
aborts naming the violated inequality if an iterate leaves the ball.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from modlab.grid import Field, Grid, from_spectrum, lp_norm, to_spectrum, SpectralField
from modlab.modspace import ModNormSpec, Window, make_window, modulation_norm, _smoothstep, _abs_freq
from modlab.propagator import TimeGrid, duhamel_path, free_evolve, mass

__all__ = [
    "NLSProblem",
    "SolverReport",
    "Certificate",
    "nonlinearity",
    "picard_solve",
    "splitstep_solve",
    "large_data_protocol",
    "cross_validate",
]


_DEFAULT_KAPPA = {1: 4.0, 2: 2.0, 3: 4.0, 4: 2.0}


@dataclass(frozen=True)
class NLSProblem:
    """Initial value problem for i u_t + Lap u = sign |u|^kappa u.

    kappa defaults to the mass-critical power for d in {1, 2} (quintic /
    cubic) and the energy-critical power 4/(d-2) for d in {3, 4}.
    """

    u0: Field
    horizon: float
    time_nodes: int = 33
    kappa: float | None = None
    sign: int = 1

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +-1, got {self.sign}")
        if self.kappa is None:
            object.__setattr__(self, "kappa", _DEFAULT_KAPPA[self.u0.grid.d])
        if self.kappa <= 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")

    @property
    def d(self) -> int:
        return self.u0.grid.d

    @property
    def grid(self) -> Grid:
        return self.u0.grid


@dataclass
class Certificate:
    """Large-data ball certificate: the chosen constants and the verified
    bounds, one entry per Picard iterate."""

    A: float
    delta: float
    cutoff: float
    horizon: float
    c0: float
    c1: float
    total_norms: list = field(default_factory=list)
    tail_norms: list = field(default_factory=list)

    def holds(self) -> bool:
        return all(x <= 2.0 * self.A + 1e-12 for x in self.total_norms) and all(
            x <= 2.0 * self.delta + 1e-12 for x in self.tail_norms
        )

    def to_dict(self) -> dict:
        return {
            "A": self.A,
            "delta": self.delta,
            "cutoff": self.cutoff,
            "horizon": self.horizon,
            "c0": self.c0,
            "c1": self.c1,
            "total_norms": list(self.total_norms),
            "tail_norms": list(self.tail_norms),
            "holds": self.holds(),
        }


@dataclass
class SolverReport:
    iterations: int
    contraction_factors: list
    residuals: list
    final_residual: float
    converged: bool
    diverged: bool
    iteration_norm: str
    mass_drift: float
    certificate: Certificate | None = None

    def to_dict(self) -> dict:
        out = {
            "iterations": self.iterations,
            "contraction_factors": list(self.contraction_factors),
            "residuals": list(self.residuals),
            "final_residual": self.final_residual,
            "converged": self.converged,
            "diverged": self.diverged,
            "iteration_norm": self.iteration_norm,
            "mass_drift": self.mass_drift,
        }
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_dict()
        return out


def nonlinearity(f: Field, kappa: float, sign: int = 1) -> Field:
    """Pointwise power nonlinearity sign * |f|^kappa f."""
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    return Field(f.grid, sign * np.abs(f.values) ** kappa * f.values)


# ---------------------------------------------------------------------------
# Iteration norms
# ---------------------------------------------------------------------------


def _path_norm(kind: str, window: Window | None, s: float) -> Callable:
    """Norms on trajectories used to measure contraction.

    ``sup_l2``: sup over nodes of the L^2 norm; ``sup_m42``: sup over nodes
    of M^s_{4,2}; ``strichartz``: sup-L^2 plus the space-time L^{kappa+2}
    norm used in the d <= 2 well-posedness argument.
    """

    if kind == "sup_l2":
        def norm(path, kappa):
            return max(lp_norm(f, 2) for _, f in path)
        return norm
    if kind == "sup_m42":
        if window is None:
            raise ValueError("sup_m42 iteration norm needs a window")
        spec = ModNormSpec(s, 4.0, 2.0)
        def norm(path, kappa):
            return max(modulation_norm(f, spec, window) for _, f in path)
        return norm
    if kind == "strichartz":
        from modlab.grid import spacetime_lp_norm
        def norm(path, kappa):
            return max(lp_norm(f, 2) for _, f in path) + spacetime_lp_norm(
                path, kappa + 2.0
            )
        return norm
    raise ValueError(f"unknown iteration norm {kind!r}")


def _default_norm_kind(d: int) -> str:
    return "strichartz" if d <= 2 else "sup_m42"


# ---------------------------------------------------------------------------
# Picard iteration
# ---------------------------------------------------------------------------


def picard_solve(
    problem: NLSProblem,
    max_iters: int = 25,
    tol: float = 1e-10,
    norm_kind: str | None = None,
    window: Window | None = None,
    s: float = 0.0,
    initial: str = "free",
    iterate_hook: Callable | None = None,
) -> tuple[list, SolverReport]:
    """Fixed-point iteration of the Duhamel map.

    Starts from the free trajectory (or the zero path), applies the map until
    the iteration-norm residual drops below ``tol`` or ``max_iters`` is hit.
    Three consecutive non-contracting steps flag divergence and stop the run;
    the report carries the factors either way.  ``iterate_hook(j, path)`` is
    called on every iterate including the initial one and may raise to abort.
    """
    if problem.time_nodes < 16:
        raise ValueError(f"need at least 16 time nodes, got {problem.time_nodes}")
    grid = problem.grid
    kind = norm_kind or _default_norm_kind(problem.d)
    if kind == "sup_m42" and window is None:
        window = make_window(grid)
    path_norm = _path_norm(kind, window, s)
    ts = TimeGrid(0.0, problem.horizon, problem.time_nodes).nodes
    free = [(float(t), free_evolve(problem.u0, float(t))) for t in ts]
    if initial == "free":
        current = free
    elif initial == "zero":
        current = [(float(t), Field.zero(grid)) for t in ts]
    else:
        raise ValueError(f"unknown initial iterate {initial!r}")
    if iterate_hook is not None:
        iterate_hook(0, current)

    residuals: list[float] = []
    factors: list[float] = []
    converged = False
    diverged = False
    iterations = 0
    zero_data = lp_norm(problem.u0, 2) == 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(max_iters):
            iterations = it + 1
            # iterates of non-contracting runs grow super-exponentially; bail
            # out as a reported divergence before the power overflows the
            # field samples themselves (norms may still report inf)
            if any(float(np.max(np.abs(f.values))) > 1e50 for _, f in current):
                diverged = True
                break
            forcing = [
                (t, nonlinearity(f, problem.kappa, problem.sign)) for t, f in current
            ]
            integrals = duhamel_path(forcing)
            new = [
                (t, fr - 1j * integ)
                for (t, fr), (_, integ) in zip(free, integrals)
            ]
            diff = [(t, a - b) for (t, a), (_, b) in zip(new, current)]
            res = path_norm(diff, problem.kappa)
            residuals.append(res)
            if len(residuals) >= 2 and residuals[-2] > 0:
                factors.append(residuals[-1] / residuals[-2])
            current = new
            if iterate_hook is not None:
                iterate_hook(iterations, current)
            if res <= tol or (zero_data and res == 0.0):
                converged = True
                break
            if len(factors) >= 3 and all(f >= 1.0 for f in factors[-3:]):
                diverged = True
                break

        drift = max(abs(mass(f) - mass(problem.u0)) for _, f in current)
    report = SolverReport(
        iterations=iterations,
        contraction_factors=factors,
        residuals=residuals,
        final_residual=residuals[-1] if residuals else 0.0,
        converged=converged,
        diverged=diverged,
        iteration_norm=kind,
        mass_drift=drift,
    )
    return current, report


# ---------------------------------------------------------------------------
# Split-step oracle
# ---------------------------------------------------------------------------


def splitstep_solve(
    problem: NLSProblem,
    dt: float,
    store: str = "nodes",
    guard_factor: float = 1e6,
) -> list:
    """Strang splitting: half nonlinear phase, full linear step, half phase.

    Each substep is either unitary or a pointwise phase rotation, so the mass
    is conserved to round-off.  Aborts when the sup norm exceeds
    ``guard_factor`` times its initial value.

    ``store``: "nodes" records the state at the problem's time nodes,
    "final" only at the horizon.
    """
    if dt > problem.horizon / 64:
        raise ValueError(f"dt={dt} too coarse; need dt <= horizon/64")
    grid = problem.grid
    n_steps = int(round(problem.horizon / dt))
    if abs(n_steps * dt - problem.horizon) > 1e-9 * problem.horizon:
        raise ValueError("dt must divide the horizon")
    nodes = np.linspace(0.0, problem.horizon, problem.time_nodes)
    u = problem.u0.values.copy()
    w2 = grid.freq_sq()
    linear = np.exp(-1j * dt * w2)
    guard = guard_factor * max(float(np.max(np.abs(u))), 1e-300)
    out = [(0.0, Field(grid, u.copy()))]
    next_node = 1

    def phase_halfstep(v):
        return v * np.exp(-1j * problem.sign * 0.5 * dt * np.abs(v) ** problem.kappa)

    fft, ifft = np.fft.fftn, np.fft.ifftn
    for step in range(n_steps):
        u = phase_halfstep(u)
        u = ifft(linear * fft(u))
        u = phase_halfstep(u)
        if float(np.max(np.abs(u))) > guard:
            raise RuntimeError(
                f"blow-up guard tripped at t={(step + 1) * dt:.6g}: "
                f"sup|u| exceeded {guard_factor:g} x initial"
            )
        t = (step + 1) * dt
        if store == "nodes":
            while next_node < len(nodes) and nodes[next_node] <= t + 1e-12:
                out.append((float(nodes[next_node]), Field(grid, u.copy())))
                next_node += 1
    if store == "final":
        out.append((problem.horizon, Field(grid, u.copy())))
    return out


# ---------------------------------------------------------------------------
# Large-data frequency-cutoff protocol
# ---------------------------------------------------------------------------


def _tail_field(f: Field, cutoff: float) -> Field:
    """High-pass part above the cutoff (complement of the smooth low-pass)."""
    F = to_spectrum(f)
    mult = 1.0 - _smoothstep(_abs_freq(f.grid) / cutoff)
    return from_spectrum(SpectralField(f.grid, mult * F.coefficients))


def large_data_protocol(
    problem: NLSProblem,
    window: Window | None = None,
    s: float = 1.1,
    c0: float = 0.1,
    c1: float = 0.1,
    max_iters: int = 25,
    tol: float = 1e-9,
) -> tuple[list, SolverReport]:
    """Frequency-cutoff contraction run for large data, d in {3, 4}.

    Chooses A = ||u0||_{M^s_{4,2}}, the tail budget
    delta = c0 * A^{-(6-d)/(d-2)}, the smallest dyadic cutoff N with
    ||P_{>N} u0|| <= delta, and the horizon
    T <= c1 * min(N^{-6/(d-2)}, N^{-2d/(d-2)}) * A^{-4/(d-2)}.  Runs the
    Picard iteration on [0, T] and verifies the ball conditions
    ||u^(j)|| <= 2A and ||P_{>N} u^(j)|| <= 2 delta at every iterate,
    aborting with the failing inequality named.
    """
    d = problem.d
    if d not in (3, 4):
        raise ValueError(f"large-data protocol expects d in {{3, 4}}, got {d}")
    grid = problem.grid
    if window is None:
        window = make_window(grid)
    spec = ModNormSpec(s, 4.0, 2.0)
    A = modulation_norm(problem.u0, spec, window)
    if not np.isfinite(A) or A == 0.0:
        raise ValueError("initial data has degenerate modulation norm")
    delta = c0 * A ** (-(6.0 - d) / (d - 2.0))

    cutoff = 1.0
    while True:
        tail = modulation_norm(_tail_field(problem.u0, cutoff), spec, window)
        if tail <= delta or cutoff > grid.xi_max:
            break
        cutoff *= 2.0
    if cutoff > grid.xi_max:
        raise ValueError("no dyadic cutoff within the band meets the tail budget")

    t_bound = c1 * min(
        cutoff ** (-6.0 / (d - 2.0)), cutoff ** (-2.0 * d / (d - 2.0))
    ) * A ** (-4.0 / (d - 2.0))
    horizon = min(problem.horizon, t_bound)
    run = NLSProblem(
        u0=problem.u0,
        horizon=horizon,
        time_nodes=problem.time_nodes,
        kappa=problem.kappa,
        sign=problem.sign,
    )
    cert = Certificate(A=A, delta=delta, cutoff=cutoff, horizon=horizon, c0=c0, c1=c1)

    def verify_ball(j: int, trajectory) -> None:
        total = max(modulation_norm(f, spec, window) for _, f in trajectory)
        tail = max(
            modulation_norm(_tail_field(f, cutoff), spec, window) for _, f in trajectory
        )
        cert.total_norms.append(total)
        cert.tail_norms.append(tail)
        if total > 2.0 * A + 1e-12:
            raise RuntimeError(
                f"certificate violation at iterate {j}: "
                f"||u||_{{M^s_{{4,2}}}} = {total:.6g} > 2A = {2 * A:.6g}"
            )
        if tail > 2.0 * delta + 1e-12:
            raise RuntimeError(
                f"certificate violation at iterate {j}: "
                f"||P_>N u||_{{M^s_{{4,2}}}} = {tail:.6g} > 2 delta = {2 * delta:.6g}"
            )

    path, report = picard_solve(
        run,
        max_iters=max_iters,
        tol=tol,
        norm_kind="sup_m42",
        window=window,
        s=s,
        iterate_hook=verify_ball,
    )
    report.certificate = cert
    return path, report


def sum_space_smallness(
    u0: Field, window: Window, s: float = 0.5
) -> dict:
    """Smallness data for sum-space initial values in the d <= 2 theory.

    Bounds the modulation + L^2 sum-space norm of the data from above by
    threshold splitting (p = 6 for d = 1, p = 4 for d = 2) so the small-data
    hypothesis can be checked before a solve.
    """
    from modlab.modspace import sum_space_norm_upper

    d = u0.grid.d
    if d not in (1, 2):
        raise ValueError(f"sum-space smallness check applies to d in {{1,2}}, got {d}")
    p = 6.0 if d == 1 else 4.0
    bound = sum_space_norm_upper(u0, ModNormSpec(s, p, 2.0), window)
    return {
        "bound": bound.value,
        "threshold": bound.threshold,
        "p": p,
        "s": s,
        "table": [list(row) for row in bound.table],
    }


def small_data_threshold(
    make_problem: Callable[[float], NLSProblem],
    amplitudes: Sequence[float],
    max_iters: int = 12,
    tol: float = 1e-10,
) -> dict:
    """Measured stand-in for the unquantified smallness constant: the largest
    amplitude in the sweep whose Picard run keeps every contraction factor
    below 1/2.

    ``make_problem`` maps an amplitude to the problem instance; the sweep is
    probed in increasing order and reported with per-amplitude factors.
    """
    rows = []
    largest = None
    for amp in sorted(amplitudes):
        _, rep = picard_solve(make_problem(amp), max_iters=max_iters, tol=tol)
        contracting = (
            rep.converged
            and not rep.diverged
            and all(f < 0.5 for f in rep.contraction_factors)
        )
        rows.append(
            {
                "amplitude": amp,
                "contracting": contracting,
                "factors": list(rep.contraction_factors),
            }
        )
        if contracting:
            largest = amp
    return {"largest_contracting": largest, "sweep": rows}


# ---------------------------------------------------------------------------
# Cross validation
# ---------------------------------------------------------------------------


def cross_validate(
    problem: NLSProblem,
    dt: float | None = None,
    tol: float = 1e-5,
    picard_tol: float = 1e-12,
) -> dict:
    """Relative L^2 distance at the horizon between the Picard solution and
    the split-step oracle, with matched-resolution convergence logging.

    The two solvers discretize the same spatial spectral system with
    independent second-order time integrators, so their distance bounds the
    time-integration error of either.  Disagreement beyond ``tol`` is
    reported with both convergence histories.
    """
    if dt is None:
        dt = problem.horizon / max(1024, 16 * (problem.time_nodes - 1))
    path, report = picard_solve(problem, tol=picard_tol)
    ss = splitstep_solve(problem, dt, store="final")
    u_picard = path[-1][1]
    u_split = ss[-1][1]
    denom = max(lp_norm(u_split, 2), 1e-300)
    distance = lp_norm(u_picard - u_split, 2) / denom
    if lp_norm(problem.u0, 2) == 0.0:
        distance = lp_norm(u_picard - u_split, 2)

    # convergence orders: halve both resolutions once
    coarse_problem = NLSProblem(
        u0=problem.u0,
        horizon=problem.horizon,
        time_nodes=(problem.time_nodes - 1) // 2 + 1
        if (problem.time_nodes - 1) // 2 + 1 >= 16
        else problem.time_nodes,
        kappa=problem.kappa,
        sign=problem.sign,
    )
    coarse_path, _ = picard_solve(coarse_problem, tol=picard_tol)
    picard_step_err = lp_norm(coarse_path[-1][1] - u_picard, 2) / denom
    ss_coarse = splitstep_solve(problem, 2 * dt, store="final")
    split_step_err = lp_norm(ss_coarse[-1][1] - u_split, 2) / denom
    return {
        "distance": distance,
        "tolerance": tol,
        "agrees": bool(distance <= tol),
        "dt": dt,
        "time_nodes": problem.time_nodes,
        "picard_coarse_vs_fine": picard_step_err,
        "splitstep_coarse_vs_fine": split_step_err,
        "picard_report": report.to_dict(),
    }
