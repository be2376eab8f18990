"""Independent spectral verification.

Dense and matrix-free minimum eigenvalues, the 2d x 2d momentum operator, and a
numerical check of the closed-form top eigenvalues of that operator together
with its top-k eigen-gap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import CertificationUnavailableError, DomainError
from .oracle import EvalCounter, OracleProblem, hessian_vec

DENSE_CAP = 2000


def dense_min_eig(H, sym_tol: float = 1e-10):
    """Minimum eigenpair of a symmetric matrix via a dense symmetric eigensolve."""
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {H.shape}")
    scale = max(1.0, float(np.max(np.abs(H)))) if H.size else 1.0
    if np.max(np.abs(H - H.T), initial=0.0) > sym_tol * scale:
        raise DomainError("matrix is not symmetric")
    if H.shape[0] > DENSE_CAP:
        return power_min_eig(lambda v: H @ v, H.shape[0], shift=np.linalg.norm(H, 2))
    w, V = np.linalg.eigh(0.5 * (H + H.T))
    return float(w[0]), V[:, 0]


def power_min_eig(matvec: Callable, d: int, shift: float, tol: float = 1e-8,
                  max_iter: int = 100_000, rng=None):
    """Minimum eigenpair by power iteration on ``shift*I - H``.

    ``shift`` must upper-bound the spectral radius of ``H``.  Convergence is
    declared when the eigen-residual ``||Hv - lam v||`` drops below ``tol * shift``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    shift = float(shift) if shift > 0 else 1.0
    for _ in range(max_iter):
        hv = matvec(v)
        lam = float(v @ hv)
        if np.linalg.norm(hv - lam * v) <= tol * shift:
            return lam, v
        w = shift * v - hv
        v = w / np.linalg.norm(w)
    raise CertificationUnavailableError(
        f"shifted power iteration did not converge in {max_iter} iterations")


def hessian_matrix(problem: OracleProblem, x, counter: Optional[EvalCounter] = None):
    """Dense Hessian assembled column by column from Hessian-vector products."""
    d = problem.d
    cols = [hessian_vec(problem, x, e, counter) for e in np.eye(d)]
    H = np.column_stack(cols)
    return 0.5 * (H + H.T)


def min_hessian_eig(problem: OracleProblem, x, counter: Optional[EvalCounter] = None,
                    dense_cap: int = DENSE_CAP, tol: float = 1e-8) -> float:
    """lambda_min of the Hessian at ``x``: dense below ``dense_cap``, iterative above."""
    if problem.d <= dense_cap:
        return dense_min_eig(hessian_matrix(problem, x, counter))[0]
    lam, _ = power_min_eig(lambda v: hessian_vec(problem, x, v, counter), problem.d,
                           shift=2 * problem.L1, tol=tol)
    return lam


# --- momentum operator ------------------------------------------------------

def augmented_matrix(H, eta: float, zeta: float) -> np.ndarray:
    """``[[(1+zeta)(I-eta H), -zeta(I-eta H)], [I, 0]]``."""
    if not eta > 0:
        raise DomainError("step size must be positive")
    if not 0 < zeta < 1:
        raise DomainError("momentum must lie in (0, 1)")
    H = np.atleast_2d(np.asarray(H, dtype=float))
    d = H.shape[0]
    M = np.eye(d) - eta * H
    A = np.zeros((2 * d, 2 * d))
    A[:d, :d] = (1 + zeta) * M
    A[:d, d:] = -zeta * M
    A[d:, :d] = np.eye(d)
    return A


@dataclass
class AugmentedOperator:
    """Matrix-free application of the momentum operator to ``(u_tau, u_{tau-1})``."""

    hess_vec: Callable
    eta: float
    zeta: float
    d: int

    @classmethod
    def from_matrix(cls, H, eta, zeta):
        H = np.asarray(H, dtype=float)
        return cls(lambda v: H @ v, eta, zeta, H.shape[0])

    def apply(self, u, u_prev):
        mu = u - self.eta * self.hess_vec(u)
        mp = u_prev - self.eta * self.hess_vec(u_prev)
        return (1 + self.zeta) * mu - self.zeta * mp, u.copy()


def lemma1_eig_formula(lam: float, eta: float, zeta: float, return_branch: bool = False):
    """Larger root of ``mu^2 - (1+zeta)(1-eta lam) mu + zeta(1-eta lam) = 0``.

    When the discriminant is negative the two roots are a complex pair whose
    common modulus ``sqrt(zeta (1 - eta lam))`` is returned instead.  With
    ``return_branch`` the result is ``(value, is_real)``.
    """
    m = 1.0 - eta * lam
    b = (1.0 + zeta) * m
    disc = b * b - 4.0 * zeta * m
    if disc >= 0:
        out, real = 0.5 * (b + np.sqrt(disc)), True
    else:
        out, real = float(np.sqrt(zeta * m)), False
    out = float(out)
    return (out, real) if return_branch else out


@dataclass
class EigReport:
    eigenvalues: np.ndarray          # moduli, descending
    k: int
    gap_topk: Optional[float]
    gap_bound: float
    matched_formula: np.ndarray      # |computed - closed form| for the top-k
    eigvec_deviation: np.ndarray
    passed: bool
    eta: float
    zeta: float
    gamma: float
    notes: list = field(default_factory=list)

    @property
    def max_formula_deviation(self) -> float:
        return float(np.max(self.matched_formula, initial=0.0))

    @property
    def max_eigvec_deviation(self) -> float:
        return float(np.max(self.eigvec_deviation, initial=0.0))


def eigen_gap_check(H, eta: float, gamma: float, formula_tol: float = 1e-8,
                    vec_tol: float = 1e-6) -> EigReport:
    """Compare the momentum operator's spectrum against the closed form.

    ``zeta = 1 - sqrt(eta*gamma)``.  The top-k block (k = number of Hessian
    eigenvalues <= -gamma) is matched to :func:`lemma1_eig_formula`, each
    eigenvector to the ``(e, e/mu)`` structure, and the gap between the k-th and
    (k+1)-th largest moduli is compared with ``sqrt(eta*gamma)/2``.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    zeta = 1.0 - np.sqrt(eta * gamma)
    bound = np.sqrt(eta * gamma) / 2
    lam, E = np.linalg.eigh(0.5 * (H + H.T))
    k = int(np.sum(lam <= -gamma))
    A = augmented_matrix(H, eta, zeta)
    try:
        mu, W = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise CertificationUnavailableError(str(exc)) from exc
    order = np.argsort(-np.abs(mu), kind="stable")
    mu, W = mu[order], W[:, order]
    moduli = np.abs(mu)
    notes = []
    if k == 0:
        notes.append("no Hessian eigenvalue <= -gamma; gap claim not applicable")
        return EigReport(moduli, 0, None, bound, np.zeros(0), np.zeros(0), False,
                         eta, zeta, gamma, notes)

    expected = np.array([lemma1_eig_formula(l, eta, zeta) for l in lam[:k]])
    dev = np.abs(np.sort(moduli[:k])[::-1] - np.sort(expected)[::-1])
    if np.max(np.abs(mu[:k].imag)) > formula_tol:
        notes.append("complex eigenvalue inside the top-k block")

    vec_dev = np.empty(k)
    for i in range(k):
        # match each Hessian eigen-direction to the closest computed top-k eigenvalue
        j = int(np.argmin(np.abs(moduli[:k] - expected[i])))
        w = np.real_if_close(W[:, j], tol=1e6).real
        target = np.concatenate([E[:, i], E[:, i] / expected[i]])
        target /= np.linalg.norm(target)
        w = w / np.linalg.norm(w)
        vec_dev[i] = min(np.linalg.norm(w - target), np.linalg.norm(w + target))

    gap = float(moduli[k - 1] - moduli[k])
    passed = bool(gap >= bound - 1e-12 and np.max(dev) <= formula_tol
                  and np.max(vec_dev) <= vec_tol)
    return EigReport(moduli, k, gap, bound, dev, vec_dev, passed, eta, zeta, gamma, notes)


def random_lemma1_hessian(d: int, k: int, gamma: float, L1: float, rng) -> np.ndarray:
    """Random rotated Hessian with ``k`` eigenvalues in ``[-L1, -gamma]`` and the rest in ``[0, L1]``."""
    neg = rng.uniform(-L1, -gamma, size=k)
    pos = rng.uniform(0.0, L1, size=d - k)
    lam = np.concatenate([neg, pos])
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    H = q @ np.diag(lam) @ q.T
    return 0.5 * (H + H.T)
