"""Strong-monotonicity certificates for the game operator.

The certificate bounds the operator's monotonicity margin from per-player
curvature and the interaction structure alone:

    margin  =  kappa_min  -  coupling_max * weight(W),

where ``kappa_min`` is the smallest eigenvalue over players of the
own-strategy Hessian, ``coupling_max`` the largest spectral norm of the
aggregate cross-derivative, and ``weight(W)`` one of two network weights:

- spectral branch ``|lambda_min(W)|`` — available only when the interaction
  matrix is symmetric with zero diagonal and every cross-derivative is the
  *same nonnegative multiple of the identity*;
- norm branch ``||W||_2`` — always available.

The spectral branch is strictly sharper on networks with heavy negative
spectrum (complete graphs being the canonical case).  A positive margin
certifies strong monotonicity of ``F(., y)``, hence uniqueness of the
equilibrium; the certificate is cross-checked against the sampled smallest
eigenvalue of the symmetrized operator Jacobian before being returned.

Games whose interaction matrix has a nonzero diagonal (routing) are outside
the certificate's domain — its derivation uses the zero trace of the
interaction — and must be checked directly on the Jacobian; see
:func:`direct_margin` and :func:`nagsens.routing.routing_margin`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ModelViolationError, UnsupportedRegimeError
from .model import GameSpec

__all__ = [
    "MonotonicityCertificate",
    "network_weight",
    "certify",
    "direct_margin",
]


@dataclass(frozen=True)
class MonotonicityCertificate:
    """Outcome of :func:`certify`.

    ``branch`` is ``"spectral"`` or ``"norm"``; ``mode`` records whether the
    curvature bounds were evaluated once ("analytic", constant-curvature
    models) or over a sample ("sampled").  ``jacobian_min_eig`` is the
    cross-check value: the smallest eigenvalue of the symmetrized operator
    Jacobian over the probe points, which must not undercut ``margin``.
    """

    min_curvature: float
    max_coupling: float
    weight: float
    branch: str
    margin: float
    certified: bool
    mode: str
    n_samples: int
    jacobian_min_eig: float


def _scaled_identity_coefficient(M, rtol=1e-10):
    """Return ``c`` if ``M = c * I`` within tolerance, else ``None``."""
    M = np.asarray(M, dtype=float)
    d = np.diagonal(M)
    c = float(d.mean())
    scale = max(1.0, abs(c))
    if np.abs(M - c * np.eye(M.shape[0])).max() <= rtol * scale:
        return c
    return None


def network_weight(network, scaled_identity: bool):
    """Network weight entering the monotonicity bound.

    Parameters
    ----------
    network : Network
    scaled_identity : bool
        Whether every player's cross-derivative is the same nonnegative
        multiple of the identity (the caller certifies this; use
        :func:`certify` for the full detection).

    Returns
    -------
    (weight, branch) : (float, str)
        ``branch`` is ``"spectral"`` when the sharp eigenvalue bound applies
        (requires symmetry, zero diagonal, and ``scaled_identity``),
        otherwise ``"norm"``.
    """
    W = network.weights
    if scaled_identity and network.is_symmetric() and not np.any(np.diag(W) != 0):
        return float(abs(np.linalg.eigvalsh(W).min())), "spectral"
    return float(np.linalg.norm(W, 2)), "norm"


def _probe_points(spec, mode, box, n_samples, rng):
    if mode == "analytic":
        if not spec.cost.constant_curvature:
            raise ConfigurationError(
                "analytic mode needs constant curvature; use mode='sampled' with a box"
            )
        return [np.zeros(spec.dim)]
    if mode == "sampled":
        if box is None:
            raise ConfigurationError(
                "sampled mode needs an explicit sampling box (lo, hi) — the strategy sets "
                "may be unbounded"
            )
        lo, hi = float(box[0]), float(box[1])
        if not lo < hi:
            raise ConfigurationError("sampling box must satisfy lo < hi")
        rng = np.random.default_rng(rng)
        return [rng.uniform(lo, hi, size=spec.dim) for _ in range(int(n_samples))]
    raise ConfigurationError(f"unknown evaluation mode {mode!r}")


def certify(
    spec: GameSpec,
    y,
    mode: str = "analytic",
    box=None,
    n_samples: int = 64,
    rng=0,
) -> MonotonicityCertificate:
    """Certify strong monotonicity of ``F(., y)`` from curvature bounds.

    Parameters
    ----------
    spec : GameSpec
        The game; its interaction matrix must have zero diagonal (games with
        self loops are outside this certificate — check the Jacobian
        directly).
    y : ndarray
        Parameter at which curvature is evaluated.
    mode : {"analytic", "sampled"}
        "analytic" evaluates curvature once (valid for constant-curvature
        models); "sampled" probes random points from ``box``.
    box : (lo, hi), optional
        Componentwise sampling interval, required in sampled mode.
    n_samples : int
        Number of probe points in sampled mode.
    rng : seed or Generator
        Randomness for the sample.

    Returns
    -------
    MonotonicityCertificate
        ``certified`` is True iff the margin is strictly positive.  A
        certificate is *not* an error: an uncertified result simply means
        this test is inconclusive.
    """
    y = spec._check_y(y)
    W = spec.network.weights
    if np.any(np.diag(W) != 0):
        raise UnsupportedRegimeError(
            "certificate requires a zero interaction diagonal; for self-loop games check "
            "the operator Jacobian directly (direct_margin)"
        )
    points = _probe_points(spec, mode, box, n_samples, rng)
    N, n = spec.n_players, spec.n
    kappa_min = np.inf
    coupling_max = 0.0
    scaled_identity = True
    shared_coeff = None
    for x in points:
        X = x.reshape(N, n)
        Z = W @ X
        for i in range(N):
            y_i = spec.param_block(y, i)
            Hi = np.asarray(spec.cost.hess(i, X[i], Z[i], y_i), dtype=float)
            if np.abs(Hi - Hi.T).max() > 1e-10 * max(1.0, np.abs(Hi).max()):
                raise ModelViolationError("own-strategy Hessian is not symmetric", player=i)
            kappa_min = min(kappa_min, float(np.linalg.eigvalsh(Hi).min()))
            Ki = np.asarray(spec.cost.cross(i, X[i], Z[i], y_i), dtype=float)
            coupling_max = max(coupling_max, float(np.linalg.norm(Ki, 2)))
            c = _scaled_identity_coefficient(Ki)
            if c is None or c < 0:
                scaled_identity = False
            elif shared_coeff is None:
                shared_coeff = c
            elif abs(c - shared_coeff) > 1e-10 * max(1.0, abs(shared_coeff)):
                scaled_identity = False
    weight, branch = network_weight(spec.network, scaled_identity)
    margin = kappa_min - coupling_max * weight
    # cross-check: the bound must hold for the actual Jacobian at the probes
    jac_min = np.inf
    for x in points[: max(1, min(len(points), 8))]:
        J = spec.operator_jacobian(x, y)
        jac_min = min(jac_min, float(np.linalg.eigvalsh(0.5 * (J + J.T)).min()))
    if jac_min < margin - 1e-8:
        raise ModelViolationError(
            f"certificate margin {margin:.6e} exceeds the sampled Jacobian eigenvalue "
            f"{jac_min:.6e}; the model's declared derivatives are inconsistent"
        )
    return MonotonicityCertificate(
        min_curvature=float(kappa_min),
        max_coupling=float(coupling_max),
        weight=float(weight),
        branch=branch,
        margin=float(margin),
        certified=bool(margin > 0),
        mode=mode,
        n_samples=len(points),
        jacobian_min_eig=float(jac_min),
    )


def direct_margin(spec: GameSpec, y, x=None) -> float:
    """Smallest eigenvalue of the symmetrized operator Jacobian at a point.

    For constant-curvature models this is the exact global monotonicity
    margin; for state-dependent curvature it is a one-point probe.  This is
    the check that applies when the spectral certificate's hypotheses fail
    (notably self-loop interaction, as in routing games).
    """
    y = spec._check_y(y)
    x = np.zeros(spec.dim) if x is None else spec._check_x(np.asarray(x, dtype=float))
    J = spec.operator_jacobian(x, y)
    return float(np.linalg.eigvalsh(0.5 * (J + J.T)).min())
