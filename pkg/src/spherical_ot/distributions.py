"""Reference distributions on the sphere: uniform, von Mises-Fisher, mixtures
of von Mises-Fisher, power spherical.

Samplers return raw ``(n, d)`` arrays of unit vectors; wrap them in
:class:`~spherical_ot.sphere.SphereCloud` where the cloud abstraction is
needed.  All samplers take a ``numpy.random.Generator``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, ive

__all__ = [
    "VmfParams",
    "PowerSphericalParams",
    "VmfMixture",
    "sample_uniform_sphere",
    "sample_vmf",
    "vmf_log_density",
    "sample_power_spherical",
    "sample_vmf_mixture",
    "six_mode_mixture",
]

log = logging.getLogger(__name__)

# proposals per requested sample before the rejection loop gives up
_MAX_REJECTION_FACTOR = 1_000_000


def _unit(mu):
    mu = np.asarray(mu, dtype=float).ravel()
    n = np.linalg.norm(mu)
    if mu.size < 2 or not np.isfinite(n) or abs(n - 1.0) > 1e-10:
        raise ValueError("mu must be a unit vector of dimension >= 2")
    return mu


@dataclass(frozen=True)
class VmfParams:
    """Location ``mu`` on the sphere and concentration ``kappa >= 0``.

    ``kappa = 0`` is the uniform distribution.
    """

    mu: np.ndarray
    kappa: float

    def __post_init__(self):
        object.__setattr__(self, "mu", _unit(self.mu))
        if not self.kappa >= 0:
            raise ValueError("kappa must be >= 0")

    @property
    def d(self) -> int:
        return self.mu.size


@dataclass(frozen=True)
class PowerSphericalParams:
    """Parameters of the density proportional to ``(1 + mu . x)^kappa``."""

    mu: np.ndarray
    kappa: float

    def __post_init__(self):
        object.__setattr__(self, "mu", _unit(self.mu))
        if not self.kappa > 0:
            raise ValueError("kappa must be > 0")

    @property
    def d(self) -> int:
        return self.mu.size


@dataclass(frozen=True)
class VmfMixture:
    """Finite mixture of von Mises-Fisher components."""

    components: tuple
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        d = comps[0].d
        if any(c.d != d for c in comps):
            raise ValueError("all components must share the dimension")
        if self.weights is None:
            w = np.full(len(comps), 1.0 / len(comps))
        else:
            w = np.asarray(self.weights, dtype=float).ravel()
            if w.size != len(comps) or np.any(w <= 0):
                raise ValueError("need one positive weight per component")
            if abs(w.sum() - 1.0) > 1e-12:
                raise ValueError("weights must sum to 1 within 1e-12")
        w.flags.writeable = False
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", w)

    @property
    def d(self) -> int:
        return self.components[0].d


def sample_uniform_sphere(d, n, rng):
    """``n`` i.i.d. uniform points on ``S^{d-1}``: normalized Gaussians."""
    if d < 2:
        raise ValueError("d must be at least 2")
    if n < 1:
        raise ValueError("n must be at least 1")
    x = rng.standard_normal((n, d))
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    while np.any(norms < 1e-12):  # pragma: no cover - probability zero
        bad = norms[:, 0] < 1e-12
        x[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(x, axis=1, keepdims=True)
    return x / norms


def _householder_from_first_axis(y, mu):
    """Reflect rows of ``y`` so that the pole ``e_1`` is mapped onto ``mu``."""
    e1 = np.zeros_like(mu)
    e1[0] = 1.0
    u = e1 - mu
    nu = np.linalg.norm(u)
    if nu < 1e-12:
        return y
    u = u / nu
    return y - 2.0 * np.outer(y @ u, u)


def _unit_tangential(d, n, rng):
    """Uniform directions on the (d-2)-sphere embedded in the last d-1 axes."""
    if d == 2:
        return rng.choice([-1.0, 1.0], size=(n, 1))
    return sample_uniform_sphere(d - 1, n, rng)


def sample_vmf(params, n, rng):
    """``n`` i.i.d. von Mises-Fisher draws, by envelope rejection.

    The cosine against the location is sampled with the classical
    beta-envelope rejection scheme; the tangential part is uniform on the
    orthogonal subsphere; a Householder reflection moves the pole onto
    ``mu``.  Raises ``RuntimeError`` if the (bounded) rejection loop fails
    to produce enough accepted cosines, which cannot happen for finite
    ``kappa``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    d, kappa, mu = params.d, params.kappa, params.mu
    if kappa == 0.0:
        return sample_uniform_sphere(d, n, rng)

    b = (d - 1.0) / (2.0 * kappa + np.hypot(2.0 * kappa, d - 1.0))
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + (d - 1.0) * np.log1p(-x0 * x0)

    accepted = np.empty(n)
    got = 0
    proposed = 0
    while got < n:
        todo = n - got
        batch = max(todo + 8, int(1.2 * todo))
        z = rng.beta(0.5 * (d - 1.0), 0.5 * (d - 1.0), size=batch)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.random(batch)
        keep = kappa * w + (d - 1.0) * np.log1p(-x0 * w) - c >= np.log(u)
        take = w[keep][:todo]
        accepted[got : got + take.size] = take
        got += take.size
        proposed += batch
        if proposed > _MAX_REJECTION_FACTOR * n:
            raise RuntimeError(
                f"vmf rejection sampler exceeded {proposed} proposals for {n} "
                f"samples (kappa={kappa:g}, d={d})"
            )
    log.debug("vmf rejection acceptance rate %.3f (kappa=%g, d=%d)", n / proposed, kappa, d)

    v = _unit_tangential(d, n, rng)
    sin_part = np.sqrt(np.maximum(0.0, 1.0 - accepted**2))
    y = np.concatenate([accepted[:, None], sin_part[:, None] * v], axis=1)
    x = _householder_from_first_axis(y, mu)
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def vmf_log_density(params, x):
    """Log density of the von Mises-Fisher law at points ``x`` (..., d).

    Uses the exponentially scaled Bessel function, so it stays finite for
    concentrations up to at least 1e4.  ``kappa = 0`` returns the constant
    uniform log density (minus the log surface area).
    """
    d, kappa, mu = params.d, params.kappa, params.mu
    x = np.asarray(x, dtype=float)
    log_area = np.log(2.0) + 0.5 * d * np.log(np.pi) - gammaln(0.5 * d)
    if kappa == 0.0:
        out = np.broadcast_to(-log_area, x.shape[:-1])
        return float(out) if out.ndim == 0 else out.copy()
    nu = 0.5 * d - 1.0
    log_norm = (
        nu * np.log(kappa)
        - 0.5 * d * np.log(2.0 * np.pi)
        - (np.log(ive(nu, kappa)) + kappa)
    )
    out = log_norm + kappa * (x @ mu)
    return float(out) if out.ndim == 0 else out


def sample_power_spherical(params, n, rng):
    """``n`` i.i.d. draws of the power spherical law, rejection-free.

    Draw ``z ~ Beta((d-1)/2 + kappa, (d-1)/2)``, set ``t = 2z - 1``, pick a
    uniform tangential direction, assemble ``(t, sqrt(1-t^2) v)`` around the
    pole ``e_1`` and reflect the pole onto ``mu``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    d, kappa, mu = params.d, params.kappa, params.mu
    z = rng.beta(0.5 * (d - 1.0) + kappa, 0.5 * (d - 1.0), size=n)
    t = 2.0 * z - 1.0
    v = _unit_tangential(d, n, rng)
    y = np.concatenate([t[:, None], np.sqrt(np.maximum(0.0, 1.0 - t * t))[:, None] * v], axis=1)
    x = _householder_from_first_axis(y, mu)
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def sample_vmf_mixture(mix, n, rng):
    """``n`` draws of a von Mises-Fisher mixture, rows in random order."""
    if n < 1:
        raise ValueError("n must be at least 1")
    counts = rng.multinomial(n, mix.weights)
    parts = [
        sample_vmf(comp, int(c), rng)
        for comp, c in zip(mix.components, counts)
        if c > 0
    ]
    return rng.permutation(np.concatenate(parts, axis=0), axis=0)


def six_mode_mixture(kappa=10.0):
    """Equal-weight mixture of six vMF components at ``+-e_1, +-e_2, +-e_3``."""
    locs = [
        (1, 0, 0), (0, 1, 0), (0, 0, 1),
        (-1, 0, 0), (0, -1, 0), (0, 0, -1),
    ]
    comps = tuple(VmfParams(np.array(m, dtype=float), kappa) for m in locs)
    return VmfMixture(comps)
