"""
Truncated axially symmetric covariance models.

A :class:`HarmonicCovariance` stores, for each wavenumber ``m = 0..N``, a
lower-triangular factor ``A_m`` of the coefficient covariance block
``C_m = A_m A_m^*`` of ``(Y_mm, ..., Y_Nm)``, plus a nugget variance.
``A_0`` is real; ``A_m`` for ``m >= 1`` is complex with a real diagonal.
Diagonal signs are free (any column may be negated without changing
``C_m``); :func:`canonicalize` makes them nonnegative.

The covariance function excludes the nugget::

    K(L, L', l) = sum_{m=-N..N} sum_{n,n'=|m|..N}
                  e^{i m l} Pbar_n^|m|(sin L) Pbar_n'^|m|(sin L') c_m(n, n')

with ``c_{-m} = conj(c_m)``. On the real basis of
:func:`axisym.harmonics.real_basis` this equals ``u(p)^T Sigma u(q)`` where
``Sigma`` is block diagonal with ``C_0`` for m = 0 and ``[[R, I], [-I, R]]``
(``C_m = R + iI``) for m >= 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .harmonics import basis_size, basis_slices, legendre_norm_all, real_basis
from .geom import wrap_lon

PSD_RTOL = 1e-9


def block_dims(N):
    return [N - m + 1 for m in range(N + 1)]


@dataclass(frozen=True)
class HarmonicCovariance:
    N: int
    A: tuple = field(repr=False)
    nugget: float = 0.0

    def __post_init__(self):
        N = int(self.N)
        if N < 0:
            raise ValueError("N must be >= 0")
        if len(self.A) != N + 1:
            raise ValueError(f"expected {N + 1} factor blocks, got {len(self.A)}")
        blocks = []
        for m, (a, d) in enumerate(zip(self.A, block_dims(N))):
            a = np.array(a, dtype=float if m == 0 else complex)
            if a.shape != (d, d):
                raise ValueError(f"A_{m} must be {d}x{d}, got {a.shape}")
            if np.any(np.triu(a, 1) != 0):
                raise ValueError(f"A_{m} is not lower triangular")
            if m > 0 and np.any(np.diag(a).imag != 0):
                raise ValueError(f"A_{m} must have a real diagonal")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"A_{m} has non-finite entries")
            a.setflags(write=False)
            blocks.append(a)
        nug = float(self.nugget)
        if not nug >= 0 or not np.isfinite(nug):
            raise ValueError("nugget must be finite and >= 0")
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "A", tuple(blocks))
        object.__setattr__(self, "nugget", nug)

    @classmethod
    def zeros(cls, N, nugget=0.0):
        return cls(N, [np.zeros((d, d), dtype=float if m == 0 else complex)
                       for m, d in enumerate(block_dims(N))], nugget)

    @classmethod
    def random(cls, N, rng, scale=1.0, nugget=None, complex_offdiag=True):
        """A random model; entries are Gaussian, scaled by ``scale``."""
        A = []
        for m, d in enumerate(block_dims(N)):
            a = np.tril(rng.standard_normal((d, d)))
            if m > 0:
                a = a.astype(complex)
                if complex_offdiag:
                    a += 1j * np.tril(rng.standard_normal((d, d)), -1)
            A.append(scale * a)
        if nugget is None:
            nugget = float(rng.uniform(0.1, 1.0)) * scale ** 2
        return cls(N, A, nugget)

    def replace(self, A=None, nugget=None):
        return HarmonicCovariance(self.N, self.A if A is None else A,
                                  self.nugget if nugget is None else nugget)

    def blocks(self):
        return assemble_blocks(self)


@dataclass(frozen=True)
class BlockModel:
    """Coefficient covariance blocks given directly (possibly indefinite)."""

    N: int
    C: tuple = field(repr=False)
    nugget: float = 0.0

    def blocks(self):
        return list(self.C)


@dataclass(frozen=True)
class ExpChordalModel:
    """Nugget plus ``theta1 * exp(-d / theta2)`` in unit-sphere chord length."""

    theta1: float
    theta2: float
    nugget: float = 0.0

    def __post_init__(self):
        if not (self.theta1 >= 0 and self.nugget >= 0 and self.theta2 > 0):
            raise ValueError("need theta1 >= 0, theta2 > 0, nugget >= 0")


def assemble_blocks(model):
    """Blocks ``C_m = A_m A_m^*`` for m = 0..N (Hermitian by construction)."""
    if isinstance(model, BlockModel):
        return list(model.C)
    out = []
    for a in model.A:
        c = a @ a.conj().T
        out.append(0.5 * (c + c.conj().T))
    return out


def _model_parts(model):
    return model.N, assemble_blocks(model), model.nugget


def sigma_from_blocks(N, blocks):
    """Real symmetric embedding of the blocks on the real basis."""
    r = basis_size(N)
    S = np.zeros((r, r))
    for m, ((start, d), C) in enumerate(zip(basis_slices(N), blocks)):
        if m == 0:
            S[start : start + d, start : start + d] = np.real(C)
        else:
            R, I = C.real, C.imag
            S[start : start + d, start : start + d] = R
            S[start : start + d, start + d : start + 2 * d] = I
            S[start + d : start + 2 * d, start : start + d] = -I
            S[start + d : start + 2 * d, start + d : start + 2 * d] = R
    return S


def factor_embedding(model: HarmonicCovariance):
    """Real ``M`` with ``M M^T = Sigma`` built from the Cholesky factors."""
    N = model.N
    r = basis_size(N)
    M = np.zeros((r, r))
    for m, ((start, d), a) in enumerate(zip(basis_slices(N), model.A)):
        if m == 0:
            M[start : start + d, start : start + d] = a
        else:
            ar, ai = a.real, a.imag
            M[start : start + d, start : start + d] = ar
            M[start : start + d, start + d : start + 2 * d] = ai
            M[start + d : start + 2 * d, start : start + d] = -ai
            M[start + d : start + 2 * d, start + d : start + 2 * d] = ar
    return M


def sigma_embedding(model):
    N, blocks, _ = _model_parts(model)
    return sigma_from_blocks(N, blocks)


def K(model, L, L2, dl):
    """Continuous covariance part at latitudes ``L``, ``L2`` and lon lag ``dl``.

    Degrees throughout; array arguments broadcast. The nugget is not included.
    """
    N, blocks, _ = _model_parts(model)
    L, L2, dl = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (L, L2, dl)))
    P1 = legendre_norm_all(N, np.sin(np.radians(L)))
    P2 = legendre_norm_all(N, np.sin(np.radians(L2)))
    lam = np.radians(dl)
    out = np.zeros(L.shape)
    for m, C in enumerate(blocks):
        p1 = np.moveaxis(P1[m:, m], 0, -1)
        p2 = np.moveaxis(P2[m:, m], 0, -1)
        q = np.einsum("...i,ij,...j->...", p1, C, p2)
        if m == 0:
            out += np.real(q)
        else:
            out += 2.0 * np.real(np.exp(1j * m * lam) * q)
    return out if out.ndim else float(out)


def K_matrix(model, lat, lon, lat2=None, lon2=None):
    """Matrix ``[K(p_i, q_j)]`` via the real embedding (no nugget)."""
    B1 = real_basis(model.N, lat, lon)
    B2 = B1 if lat2 is None else real_basis(model.N, lat2, lon2)
    return B1 @ sigma_embedding(model) @ B2.T


def _distinct(L, L2, dl):
    return ~((L == L2) & (wrap_lon(dl) == 0.0))


def gamma_model(model, L, L2, dl):
    """Semivariance ``0.5 var{Z(L, l) - Z(L2, l - dl)}``.

    The nugget is added whenever the two arguments differ.
    """
    L, L2, dl = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (L, L2, dl)))
    g = 0.5 * (K(model, L, L, 0.0) + K(model, L2, L2, 0.0)) - K(model, L, L2, dl)
    g = g + model.nugget * _distinct(L, L2, dl)
    return g if np.ndim(g) else float(g)


REVERSIBILITY_LATS = np.arange(-80.0, 81.0, 20.0)
REVERSIBILITY_LAGS = np.array([5.0, 17.0, 45.0, 90.0, 133.0])


def is_longitudinally_reversible(model, tol=1e-10):
    """Check ``K(L, L', l) == K(L, L', -l)`` on a fixed grid.

    The grid is every pair of latitudes in -80, -60, ..., 80 and lags
    5, 17, 45, 90 and 133 degrees. ``tol`` is absolute.
    """
    L, L2, dl = np.meshgrid(REVERSIBILITY_LATS, REVERSIBILITY_LATS, REVERSIBILITY_LAGS,
                            indexing="ij")
    diff = np.abs(K(model, L, L2, dl) - K(model, L, L2, -dl))
    return bool(np.max(diff) <= tol)


def param_count(N: int) -> int:
    """Real parameters of the truncated model at level N, nugget included."""
    if N < 0:
        raise ValueError("N must be >= 0")
    n = (N + 1) * (N * N + 2 * N + 3)
    assert n % 3 == 0
    return n // 3 + 1


def conditional_variances(model: HarmonicCovariance):
    """``V[m][j - m]``: squared diagonal entries of each ``A_m``."""
    return [np.abs(np.diag(a)) ** 2 for a in model.A]


def effective_rank(model: HarmonicCovariance, tol=0.0):
    """Per-wavenumber count of nonzero conditional variances.

    Also returns the real rank of the continuous part: each m = 0 direction
    counts once, each complex one twice.
    """
    V = conditional_variances(model)
    per_m = [int(np.sum(v > tol)) for v in V]
    real_rank = per_m[0] + 2 * sum(per_m[1:])
    return per_m, real_rank


def canonicalize(model: HarmonicCovariance) -> HarmonicCovariance:
    """Negate columns with negative diagonal entries. Leaves every C_m unchanged."""
    A = []
    for a in model.A:
        sign = np.where(np.real(np.diag(a)) < 0, -1.0, 1.0)
        A.append(a * sign[None, :])
    return model.replace(A=A)


def psd_cholesky(C, rtol=PSD_RTOL):
    """Lower-triangular ``A`` with ``A A^* = C`` for Hermitian PSD ``C``.

    Zero pivots (relative to the largest diagonal) give an all-zero column,
    which loses nothing for a semidefinite matrix. Raises ``ValueError`` if a
    pivot is clearly negative.
    """
    C = np.array(C)
    is_complex = np.iscomplexobj(C)
    d = C.shape[0]
    A = np.zeros((d, d), dtype=complex if is_complex else float)
    W = C.astype(A.dtype).copy()
    scale = max(float(np.max(np.abs(np.real(np.diag(C))))) if d else 0.0, 0.0)
    tol = rtol * scale
    for j in range(d):
        piv = float(np.real(W[j, j]))
        if piv < -max(tol, 1e-300) * 10:
            raise ValueError("matrix is not positive semidefinite")
        if piv <= tol:
            continue
        col = W[j:, j] / np.sqrt(piv)
        A[j:, j] = col
        W[j:, j:] -= np.outer(col, col.conj())
    for j in range(d):
        A[j, j] = np.real(A[j, j])
    return A


def project_psd(C):
    """Nearest PSD matrix in Frobenius norm (eigenvalue clipping at zero)."""
    w, V = np.linalg.eigh(C)
    P = (V * np.clip(w, 0.0, None)) @ V.conj().T
    return 0.5 * (P + P.conj().T)


def model_from_blocks(N, blocks, nugget) -> HarmonicCovariance:
    """Factor PSD blocks (after clipping) into a :class:`HarmonicCovariance`."""
    A = []
    for m, C in enumerate(blocks):
        C = project_psd(np.real(C) if m == 0 else np.asarray(C, dtype=complex))
        a = psd_cholesky(C)
        A.append(np.real(a) if m == 0 else a)
    return HarmonicCovariance(N, A, max(float(nugget), 0.0))


def exp_chordal_cov(model: ExpChordalModel, d):
    """``theta1 exp(-d/theta2)``, plus the nugget where ``d == 0``."""
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise ValueError("distance must be >= 0")
    c = model.theta1 * np.exp(-d / model.theta2) + model.nugget * (d == 0)
    return c if c.ndim else float(c)


# --- parameter layout -------------------------------------------------------

Y00_MASK = "y00"


@dataclass(frozen=True)
class ParamLayout:
    """Flat real parameter vector for the entries of all ``A_m``.

    Ordering: m ascending; within m, row-major over the lower triangle;
    off-diagonal complex entries contribute (re, im). Keys are
    ``(m, i, j, part)`` with part in {'re', 'im'}. ``frozen`` keys are
    excluded from the free vector.
    """

    N: int
    frozen: frozenset = frozenset()

    @property
    def all_keys(self):
        keys = []
        for m, d in enumerate(block_dims(self.N)):
            for i in range(d):
                for j in range(i + 1):
                    keys.append((m, i, j, "re"))
                    if m > 0 and i != j:
                        keys.append((m, i, j, "im"))
        return keys

    @property
    def free_keys(self):
        return [k for k in self.all_keys if k not in self.frozen]

    @property
    def n_free(self):
        """Free A-entries plus the nugget."""
        return len(self.free_keys) + 1

    def get(self, model):
        out = np.empty(len(self.free_keys))
        for idx, (m, i, j, part) in enumerate(self.free_keys):
            v = model.A[m][i, j]
            out[idx] = np.real(v) if part == "re" else np.imag(v)
        return out

    def put(self, theta, base: HarmonicCovariance, nugget=None):
        A = [np.array(a) for a in base.A]
        for v, (m, i, j, part) in zip(theta, self.free_keys):
            if part == "re":
                A[m][i, j] = v + 1j * np.imag(A[m][i, j]) if m > 0 else v
            else:
                A[m][i, j] = np.real(A[m][i, j]) + 1j * v
        return HarmonicCovariance(self.N, A, base.nugget if nugget is None else nugget)

    def embedding_jacobian(self):
        """Dense ``J`` with ``vec(dM) = J dtheta`` (row-major vec)."""
        N = self.N
        r = basis_size(N)
        slices = basis_slices(N)
        keys = self.free_keys
        J = np.zeros((r * r, len(keys)))
        for col, (m, i, j, part) in enumerate(keys):
            s, d = slices[m]
            if m == 0:
                J[(s + i) * r + s + j, col] = 1.0
            elif part == "re":
                J[(s + i) * r + s + j, col] = 1.0
                J[(s + d + i) * r + s + d + j, col] = 1.0
            else:
                J[(s + i) * r + s + d + j, col] = 1.0
                J[(s + d + i) * r + s + j, col] = -1.0
        return J


def y00_keys(N):
    """First column of ``A_0``: the entries that carry var Y00 and cov(Y00, Yn0)."""
    return frozenset((0, i, 0, "re") for i in range(N + 1))


def zero_y00(model: HarmonicCovariance) -> HarmonicCovariance:
    """Set the first column of ``A_0`` to zero."""
    A = [np.array(a) for a in model.A]
    A[0][:, 0] = 0.0
    return model.replace(A=A)


def drop_y00(model: HarmonicCovariance) -> HarmonicCovariance:
    """Remove the Y00 row/column from C_0 and refactor.

    The result has a zero first column in ``A_0`` and exactly the same
    variogram as ``model`` (up to rounding); its covariance differs by a
    function of the form a(L) + a(L').
    """
    C0 = assemble_blocks(model)[0].copy()
    C0[0, :] = 0.0
    C0[:, 0] = 0.0
    A = [np.array(a) for a in model.A]
    A[0] = psd_cholesky(C0)
    return model.replace(A=A)


# --- serialization ----------------------------------------------------------


def model_to_dict(model):
    if isinstance(model, ExpChordalModel):
        return {"kind": "exp_chordal", "theta1": model.theta1, "theta2": model.theta2,
                "nugget": model.nugget}
    model = canonicalize(model)
    entries = []
    for m, a in enumerate(model.A):
        for i in range(a.shape[0]):
            for j in range(i + 1):
                v = complex(a[i, j])
                # + 0.0 folds -0.0 so equal models give equal bytes
                entries.append([m, i, j, v.real + 0.0, v.imag + 0.0])
    return {"kind": "harmonic", "N": model.N, "nugget": model.nugget,
            "columns": ["m", "row", "col", "re", "im"], "A": entries}


def model_from_dict(doc):
    kind = doc.get("kind")
    if kind == "exp_chordal":
        return ExpChordalModel(float(doc["theta1"]), float(doc["theta2"]), float(doc["nugget"]))
    if kind != "harmonic":
        raise ValueError(f"unknown model kind {kind!r}")
    N = int(doc["N"])
    A = [np.zeros((d, d), dtype=float if m == 0 else complex)
         for m, d in enumerate(block_dims(N))]
    for m, i, j, re, im in doc["A"]:
        m, i, j = int(m), int(i), int(j)
        if m == 0:
            if im != 0:
                raise ValueError("A_0 entries must be real")
            A[m][i, j] = re
        else:
            A[m][i, j] = complex(re, im)
    return HarmonicCovariance(N, A, float(doc["nugget"]))


def save_model(path, model):
    """Write a model file. Harmonic models are canonicalized (diagonals >= 0)."""
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text()))
