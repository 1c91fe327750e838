"""Quadratic Hamiltonians on the cotangent bundle and their flows.

``H(x, p) = p^T s(x) p / 2`` for a cometric closure ``s`` (``h*``, ``v*`` or
``g*`` of a model).  Hamilton's equations in canonical coordinates are

    x' = s(x) p,        p'_k = -1/2 p^T (d_k s)(x) p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from . import dual
from .config import FlowConfig
from .connections import Connection, LEVI_CIVITA, RNABLA, christoffel
from .dual import value
from .errors import ChartExhausted, OutOfChart, StepFailure
from .serialize import write_csv


@dataclass(frozen=True)
class PhaseState:
    """A covector ``p`` at the point ``x`` of chart ``chart``."""

    x: np.ndarray
    p: np.ndarray
    chart: int = 0
    energy_at_start: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        if self.x.shape != self.p.shape:
            raise ValueError(f"x and p must have equal length, got {self.x.shape} and {self.p.shape}")

    def with_energy(self, model, which: str) -> "PhaseState":
        return replace(self, energy_at_start=hamiltonian(model, which, self))


def hamiltonian(model, which: str, state: PhaseState) -> float:
    S = value(model.cometric(which)(state.x, state.chart))
    return 0.5 * float(state.p @ S @ state.p)


def hamiltonian_vector_field(model, which: str, x, p, chart: int = 0):
    """``(x', p')`` of the Hamiltonian of the ``which`` cometric at ``(x, p)``."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    S, dS = dual.jacobian(lambda y: model.cometric(which)(y, chart), x)
    return S @ p, -0.5 * np.einsum("ijk,i,j->k", dS, p, p)


def covariant_cometric(G, S, dS):
    """``(nabla_k s)^{ab}`` as ``[a, b, k]`` for connection coefficients ``G``."""
    return dS + np.einsum("akc,cb->abk", G, S) + np.einsum("bkc,ac->abk", G, S)


def split_vector_field(model, which: str, x, p, chart: int = 0, kind: str = RNABLA):
    """The same vector field assembled from a connection: horizontal lift of ``s(p)``
    minus the vertical lift of ``p T(s(p), .) + 1/2 (nabla s)(p, p)``."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    G = Connection(model, kind).coeffs(x, chart)
    S, dS = dual.jacobian(lambda y: model.cometric(which)(y, chart), x)
    xd = S @ p
    T = G - G.transpose(0, 2, 1)
    lift = np.einsum("jik,i,j->k", G, xd, p)
    torsion = np.einsum("j,jik,i->k", p, T, xd)
    nabla_s = np.einsum("abk,a,b->k", covariant_cometric(G, S, dS), p, p)
    return xd, lift - torsion - 0.5 * nabla_s


def vector_field_cross_check(model, which: str, x, p, chart: int = 0) -> float:
    """Max difference between canonical and split (both connections) vector fields."""
    xd, pd = hamiltonian_vector_field(model, which, x, p, chart)
    worst = 0.0
    for kind in (LEVI_CIVITA, RNABLA):
        xs, ps = split_vector_field(model, which, x, p, chart, kind)
        worst = max(worst, float(np.abs(xs - xd).max()), float(np.abs(ps - pd).max()))
    return worst


def poisson_bracket(model, a: str, b: str, x, p, chart: int = 0) -> float:
    """``{H_a, H_b} = d_x H_a . d_p H_b - d_p H_a . d_x H_b``."""
    xa, pa = hamiltonian_vector_field(model, a, x, p, chart)
    xb, pb = hamiltonian_vector_field(model, b, x, p, chart)
    # d_p H = x',  d_x H = -p'
    return float(-pa @ xb + xa @ pb)


# -- integration ------------------------------------------------------------------
@dataclass
class Trajectory:
    """Recorded states of a flow; ``vectors`` holds Levi-Civita-transported vectors if requested."""

    model: str
    which: str
    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    chart: np.ndarray
    energy: np.ndarray
    switches: list = field(default_factory=list)
    vectors: np.ndarray | None = None
    grid_index: np.ndarray | None = None
    config: dict = field(default_factory=dict)

    @property
    def final(self) -> PhaseState:
        return PhaseState(self.x[-1], self.p[-1], int(self.chart[-1]), float(self.energy[0]))

    @property
    def energy_drift(self) -> float:
        return float(np.abs(self.energy - self.energy[0]).max())

    def at_grid(self, i: int) -> PhaseState:
        j = int(self.grid_index[i])
        return PhaseState(self.x[j], self.p[j], int(self.chart[j]), float(self.energy[0]))

    def rows(self):
        for k in range(len(self.t)):
            yield [self.t[k], *self.x[k], *self.p[k], int(self.chart[k]), self.energy[k]]

    def header(self):
        n = self.x.shape[1]
        return ["t", *(f"x{i + 1}" for i in range(n)), *(f"p{i + 1}" for i in range(n)), "chart_id", "H"]

    def to_csv(self, path):
        return write_csv(path, self.header(), self.rows())

    def summary(self) -> dict:
        return {
            "model": self.model,
            "hamiltonian": self.which,
            "t_final": float(self.t[-1]),
            "n_records": int(len(self.t)),
            "energy_start": float(self.energy[0]),
            "energy_drift": self.energy_drift,
            "chart_switches": [{"t": float(t), "from": int(a), "to": int(b)} for t, a, b in self.switches],
            "final_x": self.x[-1].tolist(),
            "final_p": self.p[-1].tolist(),
            "final_chart": int(self.chart[-1]),
        }


class _System:
    """Right-hand side of Hamilton's equations, optionally with parallel transport of ``m`` vectors."""

    def __init__(self, model, which: str, m: int = 0, transport_kind: str = LEVI_CIVITA):
        self.model = model
        self.which = which
        self.s = model.cometric(which)
        self.n = model.dim
        self.m = m
        self.conn = Connection(model, transport_kind)

    def __call__(self, y, chart):
        n, m = self.n, self.m
        x, p = y[:n], y[n : 2 * n]
        S, dS = dual.jacobian(lambda z: self.s(z, chart), x)
        xd = S @ p
        pd = -0.5 * np.einsum("ijk,i,j->k", dS, p, p)
        if not m:
            return np.concatenate([xd, pd])
        V = y[2 * n :].reshape(n, m)
        G = self.conn.coeffs(x, chart)
        Vd = -np.einsum("kij,i,jm->km", G, xd, V)
        return np.concatenate([xd, pd, Vd.ravel()])

    def energy(self, y, chart):
        n = self.n
        p = y[n : 2 * n]
        return 0.5 * float(p @ value(self.s(y[:n], chart)) @ p)

    def switch(self, y, src, dst):
        """Change chart: points by the transition, covectors by the inverse transpose, vectors by the Jacobian."""
        atlas, n = self.model.atlas, self.n
        x = y[:n]
        J = atlas.transition_jacobian(x, src, dst)
        out = [np.asarray(atlas.transition(x, src, dst), dtype=float), np.linalg.solve(J.T, y[n : 2 * n])]
        if self.m:
            out.append((J @ y[2 * n :].reshape(n, self.m)).ravel())
        return np.concatenate(out)


def _rk4_step(f, y, chart, h):
    k1 = f(y, chart)
    k2 = f(y + 0.5 * h * k1, chart)
    k3 = f(y + 0.5 * h * k2, chart)
    k4 = f(y + h * k3, chart)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _midpoint_step(f, y, chart, h, tol):
    z = y + h * f(y, chart)
    for _ in range(100):
        z_new = y + h * f(0.5 * (y + z), chart)
        if np.abs(z_new - z).max() <= tol * max(1.0, np.abs(z_new).max()):
            return z_new
        z = z_new
    raise StepFailure(f"implicit midpoint iteration did not converge at step {h:g}")


class _Recorder:
    def __init__(self, system, cfg):
        self.sys = system
        self.cfg = cfg
        self.t, self.y, self.c = [], [], []
        self.switches = []

    def push(self, t, y, chart):
        if not np.all(np.isfinite(y)):
            raise StepFailure(f"non-finite state at t={t:g}")
        self.t.append(t)
        self.y.append(y.copy())
        self.c.append(chart)

    def settle(self, t, y, chart):
        """Apply a chart change if the atlas asks for one; enforce guards and the switch budget."""
        atlas, n = self.sys.model.atlas, self.sys.n
        new = atlas.choose_chart(y[:n], chart)
        if new != chart:
            y = self.sys.switch(y, chart, new)
            self.switches.append((t, chart, new))
            if len(self.switches) > self.cfg.max_chart_switches:
                raise ChartExhausted(f"more than {self.cfg.max_chart_switches} chart switches")
            chart = new
        if not atlas.guard(y[:n], chart):
            raise OutOfChart(f"trajectory left {atlas.guard_description(chart)} at t={t:g}, x={y[:n]}")
        return y, chart


def _segment_fixed(rec, f, y, chart, t0, t1, cfg):
    n_steps = max(1, math.ceil((t1 - t0) / cfg.step - 1e-9))
    h = (t1 - t0) / n_steps
    for k in range(1, n_steps + 1):
        if cfg.integrator == "rk4":
            y = _rk4_step(f, y, chart, h)
        else:
            y = _midpoint_step(f, y, chart, h, cfg.abs_tol)
        t = t1 if k == n_steps else t0 + k * h
        y, chart = rec.settle(t, y, chart)
        rec.push(t, y, chart)
    return y, chart


def _segment_adaptive(rec, f, y, chart, t0, t1, cfg):
    """RK45 (scipy) with a terminal event that hands the state over before it nears a chart guard."""
    atlas, n = rec.sys.model.atlas, rec.sys.n
    radius = getattr(atlas, "guard_radius", None)
    events = None
    if radius is not None:
        def leave(tt, yy):
            return float(yy[:n] @ yy[:n]) - 0.5625 * radius * radius

        leave.terminal = True
        leave.direction = 1
        events = leave
    t = t0
    while True:
        sol = solve_ivp(
            lambda tt, yy, c=chart: f(yy, c), (t, t1), y, method="RK45", rtol=cfg.rel_tol, atol=cfg.abs_tol, events=events
        )
        if sol.status == -1:
            raise StepFailure(f"adaptive integrator failed: {sol.message}")
        t, y = float(sol.t[-1]), sol.y[:, -1].copy()
        y, chart = rec.settle(t, y, chart)
        if sol.status == 0:
            break
    rec.push(t1, y, chart)
    return y, chart


def integrate(model, which: str, state: PhaseState, t_grid, cfg: FlowConfig | None = None, vectors=None, transport_kind: str = LEVI_CIVITA) -> Trajectory:
    """Integrate the flow of ``H_which`` from ``state`` through the increasing times ``t_grid``.

    Fixed-step integrators record every step; each grid segment is divided into
    ``ceil(dt / step)`` equal steps so grid times are hit exactly.  ``vectors``
    (columns) are carried along by parallel transport for ``transport_kind``.
    """
    cfg = cfg or FlowConfig()
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid[0] != 0.0 or np.any(np.diff(t_grid) < 0):
        raise ValueError("t_grid must start at 0 and be nondecreasing")
    n = model.dim
    V0 = None if vectors is None else np.asarray(vectors, dtype=float).reshape(n, -1)
    m = 0 if V0 is None else V0.shape[1]
    system = _System(model, which, m, transport_kind)
    y = np.concatenate([state.x, state.p] + ([V0.ravel()] if m else []))
    chart = state.chart
    rec = _Recorder(system, cfg)
    y, chart = rec.settle(0.0, y, chart)
    rec.push(0.0, y, chart)
    grid_index = [0]
    segment = _segment_adaptive if cfg.integrator == "rk45_adaptive" else _segment_fixed
    for t0, t1 in zip(t_grid[:-1], t_grid[1:]):
        if t1 > t0:
            y, chart = segment(rec, system, y, chart, t0, t1, cfg)
        grid_index.append(len(rec.t) - 1)
    Y = np.array(rec.y)
    energies = np.array([system.energy(yk, ck) for yk, ck in zip(Y, rec.c)])
    return Trajectory(
        model=model.name,
        which=which,
        t=np.array(rec.t),
        x=Y[:, :n],
        p=Y[:, n : 2 * n],
        chart=np.array(rec.c, dtype=int),
        energy=energies,
        switches=rec.switches,
        vectors=Y[:, 2 * n :].reshape(len(Y), n, m) if m else None,
        grid_index=np.array(grid_index, dtype=int),
        config=cfg.to_dict(),
    )


def flow(model, which: str, state: PhaseState, t: float, cfg: FlowConfig | None = None, vectors=None) -> Trajectory:
    """Flow of ``H_which`` for time ``t >= 0``."""
    if t < 0:
        raise ValueError("flow time must be nonnegative")
    return integrate(model, which, state, [0.0, float(t)], cfg, vectors)


def flow_to(model, which: str, state: PhaseState, t: float, cfg: FlowConfig | None = None) -> PhaseState:
    return flow(model, which, state, t, cfg).final


# -- comparisons across charts ------------------------------------------------
def to_chart(model, state: PhaseState, chart: int) -> PhaseState:
    """The same covector expressed in another chart."""
    if state.chart == chart:
        return state
    atlas = model.atlas
    J = atlas.transition_jacobian(state.x, state.chart, chart)
    x = np.asarray(atlas.transition(state.x, state.chart, chart), dtype=float)
    return PhaseState(x, np.linalg.solve(J.T, state.p), chart, state.energy_at_start)


def state_distance(model, a: PhaseState, b: PhaseState) -> tuple[float, float]:
    """(ambient base-point distance, covector component distance in ``a``'s chart)."""
    base = model.distance(a.x, a.chart, b.x, b.chart)
    b = to_chart(model, b, a.chart)
    return base, float(np.linalg.norm(a.p - b.p))


def flow_commutation_residual(model, state: PhaseState, s: float, t: float, cfg: FlowConfig | None = None, pair=("h", "g")):
    """Distances between ``e^{s H_a} e^{t H_b}(state)`` and ``e^{t H_b} e^{s H_a}(state)``."""
    a, b = pair
    one = flow_to(model, a, flow_to(model, b, state, t, cfg), s, cfg)
    two = flow_to(model, b, flow_to(model, a, state, s, cfg), t, cfg)
    return state_distance(model, one, two)


# -- residuals along trajectories ---------------------------------------------------
def _five_point(f, h):
    """Derivative of the equally spaced samples ``f`` at interior indices 2..N-3."""
    return (-f[4:] + 8.0 * f[3:-1] - 8.0 * f[1:-3] + f[:-4]) / (12.0 * h)


def _sample_indices(traj: Trajectory, n_samples: int):
    """Interior indices whose 5-point stencil lies in one chart and one uniform segment."""
    t, c = traj.t, traj.chart
    dt = np.diff(t)
    ok = []
    for i in range(2, len(t) - 2):
        w = slice(i - 2, i + 3)
        if np.all(c[w] == c[i]) and np.ptp(dt[i - 2 : i + 2]) <= 1e-12 * max(1.0, t[-1]):
            ok.append(i)
    if not ok:
        raise ValueError("trajectory too short for derivative sampling")
    pick = np.unique(np.linspace(0, len(ok) - 1, min(n_samples, len(ok))).round().astype(int))
    return [ok[k] for k in pick]


def _covector_rate(traj, which, i):
    """Finite-difference ``(x', p')`` at record ``i``."""
    h = traj.t[i + 1] - traj.t[i]
    w = slice(i - 2, i + 3)
    return _five_point(traj.x[w], h)[0], _five_point(traj.p[w], h)[0]


def normal_geodesic_residual(model, state: PhaseState, t: float, kind: str = LEVI_CIVITA, cfg: FlowConfig | None = None, n_samples: int = 64, which: str = "h") -> dict:
    """Sup residuals of ``gamma' = s(lambda)`` and of the covariant normal-geodesic equation

    ``nabla_{gamma'} lambda = -lambda T(gamma', .) - 1/2 (nabla_. s)(lambda, lambda)``

    along the flow of ``H_which``; derivatives of the trajectory are 5-point differences.
    """
    cfg = cfg or FlowConfig()
    traj = flow(model, which, state, t, cfg)
    conn = Connection(model, kind)
    s = model.cometric(which)
    vel, cov = 0.0, 0.0
    for i in _sample_indices(traj, n_samples):
        x, lam, c = traj.x[i], traj.p[i], int(traj.chart[i])
        xdot, lamdot = _covector_rate(traj, which, i)
        S, dS = dual.jacobian(lambda y: s(y, c), x)
        G = conn.coeffs(x, c)
        T = G - G.transpose(0, 2, 1)
        nabla_lam = lamdot - np.einsum("jik,i,j->k", G, xdot, lam)
        rhs = -np.einsum("j,jik,i->k", lam, T, xdot) - 0.5 * np.einsum("abk,a,b->k", covariant_cometric(G, S, dS), lam, lam)
        vel = max(vel, float(np.linalg.norm(xdot - S @ lam)))
        cov = max(cov, float(np.linalg.norm(nabla_lam - rhs)))
    return {"velocity": vel, "covariant": cov, "energy_drift": traj.energy_drift, "connection": kind, "step": cfg.step}


def vertical_flow_check(model, state: PhaseState, t: float, cfg: FlowConfig | None = None, n_samples: int = 64) -> dict:
    """Residuals of the vertical flow: ``gamma' = v*(lambda)``, split-parallel ``lambda``,
    Levi-Civita-parallel ``pr_V^* lambda`` (totally geodesic models) and, when a
    submersion is declared, the drift of ``pi(gamma)`` away from the starting fibre."""
    cfg = cfg or FlowConfig()
    traj = flow(model, "v", state, t, cfg)
    vel = rn = lc = 0.0
    for i in _sample_indices(traj, n_samples):
        x, lam, c = traj.x[i], traj.p[i], int(traj.chart[i])
        xdot, lamdot = _covector_rate(traj, "v", i)
        vel = max(vel, float(np.linalg.norm(xdot - value(model.v_star(x, c)) @ lam)))
        G = Connection(model, RNABLA).coeffs(x, c)
        rn = max(rn, float(np.linalg.norm(lamdot - np.einsum("jik,i,j->k", G, xdot, lam))))
        if model.declared.totally_geodesic:
            # pr_V^* lambda along the curve, differentiated with the same stencil
            h = traj.t[i + 1] - traj.t[i]
            mu = np.array([value(model.pr_v(traj.x[j], c)).T @ traj.p[j] for j in range(i - 2, i + 3)])
            mudot = _five_point(mu, h)[0]
            Gl = christoffel(model, x, c)
            lc = max(lc, float(np.linalg.norm(mudot - np.einsum("jik,i,j->k", Gl, xdot, mu[2]))))
    out = {"velocity": vel, "rnabla_parallel": rn, "levi_civita_parallel": lc if model.declared.totally_geodesic else None, "energy_drift": traj.energy_drift}
    if model.submersion is not None:
        pi = model.submersion.pi
        b0 = value(pi(traj.x[0], int(traj.chart[0])))
        out["fiber_drift"] = max(float(np.linalg.norm(value(pi(xk, int(ck))) - b0)) for xk, ck in zip(traj.x, traj.chart))
    return out
