"""Closed-form reference solutions for the spatially homogeneous model.

The homogeneous Neumann problem with zero forcing reduces to the scalar
ODE u'' + beta(u) = 0.  For the hard constraint the limit trajectory is
free flight interrupted by instantaneous velocity jumps at the walls
u = +-1; the post-impact level ell is a free datum of the limit problem
(the regularization selects one), so it stays an explicit parameter
here.  For the regularized problems the first wall passage is a
harmonic half-arch in closed form:

* Yosida regularization of the hard constraint at eps, data (0, 1):
  u(t) = t up to t = 1, then 1 + sqrt(eps)*sin((t-1)/sqrt(eps)) for a
  half period, exiting with velocity -1.
* piecewise-linear family (dead zone r_threshold, slope eps_param^-2),
  data (0, 1): u(t) = t up to r_threshold, then
  r_threshold + eps_param*sin((t-r_threshold)/eps_param), exiting with
  velocity -1.

Both refuse evaluation beyond their derivation window instead of
composing further events.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidEll, OutOfValidityWindow
from .graphs import MonotoneGraph, RegularizedPotential, eval_j, moreau
from .weaklimit import TestFunction


@dataclass(frozen=True)
class ToySegment:
    t0: float
    t1: float
    u0: float
    v: float

    def eval(self, t: float):
        return self.u0 + self.v * (t - self.t0), self.v


@dataclass(frozen=True)
class ToySolution:
    """Piecewise-affine limit trajectory with its jump events and atoms."""

    segments: tuple
    jumps: tuple  # (t, v_before, v_after)
    atoms: tuple  # (t, mass), mass = v_before - v_after

    def eval(self, t: float):
        for seg in self.segments:
            if seg.t0 <= t <= seg.t1:
                return seg.eval(t)
        raise OutOfValidityWindow(f"t={t} beyond constructed horizon")

    def u_t_right(self, t: float) -> float:
        """Right-continuous velocity representative at time t."""
        for seg in self.segments:
            if seg.t0 <= t < seg.t1:
                return seg.v
        return self.segments[-1].v


def limit_toy_solution(u0: float, u1: float, ell: float, T: float) -> ToySolution:
    """Free flight plus wall jumps up to horizon T.

    ``ell`` is the post-impact velocity at a hit of the +1 wall and must
    be <= 0 there; the opposite wall mirrors it (post velocity -ell).
    """
    if not -1.0 <= u0 <= 1.0:
        raise ValueError("u0 must lie in [-1, 1]")
    segments, jumps, atoms = [], [], []
    t, u, v = 0.0, float(u0), float(u1)
    speed = abs(ell)
    while t < T:
        if v == 0.0:
            segments.append(ToySegment(t, T, u, 0.0))
            break
        wall = 1.0 if v > 0.0 else -1.0
        t_hit = t + (wall - u) / v
        if t_hit >= T:
            segments.append(ToySegment(t, T, u, v))
            break
        segments.append(ToySegment(t, t_hit, u, v))
        if wall > 0 and ell > 0.0:
            raise InvalidEll(f"ell={ell} > 0 at a +1 hit")
        v_after = -wall * speed
        jumps.append((t_hit, v, v_after))
        atoms.append((t_hit, v - v_after))
        t, u, v = t_hit, wall, v_after
    return ToySolution(tuple(segments), tuple(jumps), tuple(atoms))


def exact_limit_toy(u0: float, u1: float, ell: float, t: float):
    """Evaluate the limit trajectory (u, v) at time t."""
    sol = limit_toy_solution(u0, u1, ell, T=max(t, 1e-300) * (1.0 + 1e-12))
    return sol.eval(t)


def toy_xi_atom(ell: float) -> float:
    """Mass of the reaction atom at the first +1 impact of data (0, 1)."""
    if ell > 0.0:
        raise InvalidEll(f"ell={ell} must be <= 0")
    return 1.0 - ell


def exact_family_toy(r_threshold: float, eps_param: float, t: float):
    """First wall passage of the family regularization with data (0, 1).

    Valid through the sinusoidal arch and the straight exit segment,
    up to the entry into the opposite layer; refuses beyond that.
    """
    rt, ep = float(r_threshold), float(eps_param)
    if not 0.0 < rt <= 1.0 or ep <= 0.0:
        raise ValueError("need 0 < r_threshold <= 1 and eps_param > 0")
    t_exit = rt + math.pi * ep
    if t < 0.0 or t > t_exit + 2.0 * rt:
        raise OutOfValidityWindow(f"t={t} beyond first return to the dead zone")
    if t <= rt:
        return t, 1.0
    if t <= t_exit:
        phase = (t - rt) / ep
        return rt + ep * math.sin(phase), math.cos(phase)
    return rt - (t - t_exit), -1.0


def yosida_layer_toy(epsilon: float, t: float):
    """First wall passage of the Yosida regularization with data (0, 1)."""
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    se = math.sqrt(epsilon)
    t_exit = 1.0 + math.pi * se
    if t < 0.0 or t > t_exit + 2.0:
        raise OutOfValidityWindow(f"t={t} beyond first return to the dead zone")
    if t <= 1.0:
        return t, 1.0
    if t <= t_exit:
        phase = (t - 1.0) / se
        return 1.0 + se * math.sin(phase), math.cos(phase)
    return 1.0 - (t - t_exit), -1.0


# ---------------------------------------------------------------------------
# phase-plane level sets


@dataclass(frozen=True)
class LevelSet:
    c: float
    branches: tuple  # arrays of (u, v) points
    connected: bool


def phase_level_set(pot, c: float, n_samples: int = 200) -> LevelSet:
    """Sample {j(u) + v^2/2 = c} and report whether it is one closed curve.

    ``pot`` is a RegularizedPotential (envelope potential) or a bare
    MonotoneGraph (limit potential).  The set splits into a +v and a -v
    branch; they join into a single closed curve exactly when the
    potential climbs to c before the domain boundary, which fails for
    the hard constraint whenever c > 0 (and for the logarithmic graph
    once c exceeds the boundary value of j).
    """
    if c < 0.0:
        raise ValueError("c must be nonnegative")

    if isinstance(pot, RegularizedPotential):
        jfun = lambda u: float(moreau(pot, float(u)))
        u_cap = _envelope_reach(pot, c)
    elif isinstance(pot, MonotoneGraph):
        jfun = lambda u: float(eval_j(pot, float(u)))
        u_cap = 1.0
    else:
        raise TypeError("pot must be a RegularizedPotential or MonotoneGraph")

    u_max = _bisect_level(jfun, c, u_cap)
    us = np.linspace(-u_max, u_max, n_samples)
    js = np.array([jfun(u) for u in us])
    v = np.sqrt(np.maximum(2.0 * (c - js), 0.0))
    upper = np.column_stack([us, v])
    lower = np.column_stack([us[::-1], -v[::-1]])
    if c == 0.0:
        return LevelSet(c, (upper,), True)
    # branches meet iff v -> 0 at both extreme u values
    tip = math.sqrt(2.0 * max(c - jfun(u_max), 0.0))
    connected = tip <= 1e-6 * math.sqrt(2.0 * c)
    return LevelSet(c, (upper, lower), connected)


def _envelope_reach(pot: RegularizedPotential, c: float) -> float:
    # the envelope is finite everywhere; grow the bracket until j > c
    hi = 1.0
    for _ in range(200):
        if float(moreau(pot, hi)) > c:
            return hi
        hi *= 2.0
    return hi


def _bisect_level(jfun, c: float, u_cap: float) -> float:
    """Largest u in [0, u_cap] with j(u) <= c (j even and nondecreasing)."""
    if jfun(u_cap) <= c:
        return u_cap
    lo, hi = 0.0, u_cap
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if jfun(mid) <= c:
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# weak identity of the limit toy problem


def toy_weak_identity_residual(sol: ToySolution, phi: TestFunction, T: float) -> float:
    """Residual of -int u_t phi_t + phi(T) u_t(T) + <xi, phi> - phi(0) u_t(0).

    u_t is piecewise constant, so the time integral is evaluated segment
    by segment in closed form; the only error left is roundoff.
    """
    acc = 0.0
    for seg in sol.segments:
        t1 = min(seg.t1, T)
        if t1 <= seg.t0:
            continue
        acc -= seg.v * (float(phi.time.value(t1)) - float(phi.time.value(seg.t0)))
        if t1 >= T:
            break
    acc += float(phi.time.value(T)) * sol.u_t_right(T)
    for t_a, mass in sol.atoms:
        if t_a <= T:
            acc += mass * float(phi.time.value(t_a))
    acc -= float(phi.time.value(0.0)) * sol.segments[0].v
    return abs(acc)
