"""Randomized identity checks for the curvature-function algebra.

Each check returns the worst relative error over a batch of random tuples so
callers can compare against their own tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curvfun import (
    FAMILIES,
    CurvatureFunctionSpec,
    cone_margin,
    elementary_from_power_sums,
    elementary_symmetric_all,
    eval_F,
    grad_elementary,
    grad_F,
    hess_quadratic_form,
    power_sums,
)


@dataclass(frozen=True)
class IdentityResult:
    name: str
    error: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tol)


def sample_cone(rng: np.random.Generator, n: int, k: int, size: int, min_margin: float = 1e-3) -> np.ndarray:
    """Random tuples in ``Gamma_k`` by rejection from a shifted Gaussian."""
    out = []
    have = 0
    while have < size:
        kap = rng.normal(1.0, 1.0, size=(2 * size, n))
        m = cone_margin(kap, k)
        good = kap[m > min_margin]
        out.append(good)
        have += len(good)
    return np.concatenate(out)[:size]


def _rel(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def euler_error(spec: CurvatureFunctionSpec, kappa: np.ndarray) -> float:
    f = eval_F(spec, kappa)
    return _rel(np.sum(kappa * grad_F(spec, kappa), axis=-1), f)


def trace_identity_errors(kappa: np.ndarray) -> float:
    """Worst relative error of the three trace identities of ``ds_k``.

    ``sum_i k_i ds_k/dk_i = k s_k``, ``sum_i ds_k/dk_i = (n-k+1) s_{k-1}`` and
    ``sum_i k_i^2 ds_k/dk_i = s_1 s_k - (k+1) s_{k+1}``.
    """
    n = kappa.shape[-1]
    s = np.concatenate([elementary_symmetric_all(kappa), np.zeros(kappa.shape[:-1] + (1,))], axis=-1)
    worst = 0.0
    for k in range(1, n + 1):
        ds = grad_elementary(kappa, k)
        pairs = [
            ((kappa * ds).sum(-1), k * s[..., k]),
            (ds.sum(-1), (n - k + 1) * s[..., k - 1]),
            ((kappa**2 * ds).sum(-1), s[..., 1] * s[..., k] - (k + 1) * s[..., k + 1]),
        ]
        for lhs, rhs in pairs:
            worst = max(worst, _rel(lhs, rhs))
    return worst


def newton_error(kappa: np.ndarray) -> float:
    s = elementary_symmetric_all(kappa)
    rec = elementary_from_power_sums(power_sums(kappa))
    # relative to the size of the monomials, which bounds the cancellation
    scale = elementary_symmetric_all(np.abs(kappa))
    return float(np.max(np.abs(rec - s) / np.maximum(scale, 1e-300)))


def gradient_fd_error(spec: CurvatureFunctionSpec, kappa: np.ndarray, h: float = 1e-6) -> float:
    g = grad_F(spec, kappa)
    fd = np.empty_like(g)
    for i in range(spec.n):
        e = np.zeros(spec.n)
        e[i] = h
        fd[..., i] = (eval_F(spec, kappa + e) - eval_F(spec, kappa - e)) / (2 * h)
    return float(np.max(np.abs(fd - g) / np.maximum(np.abs(g).max(axis=-1, keepdims=True), 1e-300)))


def concavity_max(spec: CurvatureFunctionSpec, kappa: np.ndarray, rng: np.random.Generator) -> float:
    """Largest value of the second-derivative form over random unit symmetric directions."""
    n = spec.n
    eta = rng.normal(size=kappa.shape[:-1] + (n, n))
    eta = 0.5 * (eta + np.swapaxes(eta, -1, -2))
    eta /= np.linalg.norm(eta, axis=(-2, -1), keepdims=True)
    return float(np.max(hess_quadratic_form(spec, kappa, eta)))


def curvfun_suite(dims=(1, 2, 3, 4, 5), samples: int = 1000, seed: int = 0) -> list[IdentityResult]:
    """Run all algebraic identity checks; one result per identity and dimension."""
    rng = np.random.default_rng(seed)
    results = []
    for n in dims:
        raw = rng.uniform(0.0, 3.0, size=(samples, n))
        results.append(IdentityResult(f"trace_identities[n={n}]", trace_identity_errors(raw), 1e-10))
        results.append(IdentityResult(f"newton_identities[n={n}]", newton_error(raw), 1e-10))
        for k in range(1, n + 1):
            kap = sample_cone(rng, n, k, samples, min_margin=1e-2)
            for family in FAMILIES:
                spec = CurvatureFunctionSpec(family, k, n)
                tag = f"{family}[n={n},k={k}]"
                results.append(IdentityResult(f"euler:{tag}", euler_error(spec, kap), 1e-10))
                results.append(IdentityResult(f"grad_fd:{tag}", gradient_fd_error(spec, kap), 1e-6))
                # monotonicity: reported as the negated smallest partial, so <= 0 passes
                results.append(IdentityResult(f"monotone:{tag}", -float(np.min(grad_F(spec, kap))), 0.0))
                if family == "quotient":
                    results.append(IdentityResult(f"concavity:{tag}", concavity_max(spec, kap, rng), 1e-10))
    return results
