"""Inner loops with a numba path and a pure-numpy path.

The numba path is used when numba imports and the environment variable
``QNET_PRIVACY_NUMBA`` is not set to ``0``.  Both paths are always importable
(``*_numpy`` / ``*_numba``) so they can be compared directly.
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def _env_wants_numba():
    return os.environ.get("QNET_PRIVACY_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and _env_wants_numba()


def backend():
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# SLD in the eigenbasis of rho: L_jk = 2 D_jk / (l_j + l_k) on the support.

def sld_eigenbasis_numpy(evals, drho_eig, cutoff):
    denom = evals[:, None] + evals[None, :]
    mask = denom > cutoff
    out = np.zeros_like(drho_eig)
    out[mask] = 2.0 * drho_eig[mask] / denom[mask]
    return out


def _sld_eigenbasis_loops(evals, drho_eig, cutoff):
    n = evals.shape[0]
    out = np.zeros((n, n), dtype=np.complex128)
    for j in range(n):
        for k in range(n):
            s = evals[j] + evals[k]
            if s > cutoff:
                out[j, k] = 2.0 * drho_eig[j, k] / s
    return out


# ---------------------------------------------------------------------------
# Local Kraus map on one tensor factor:
#   out = sum_k (1_L x K_k x 1_R) M (1_L x K_k x 1_R)^dagger
# with M of shape (L*n*R, L*n*R).

def apply_local_kraus_numpy(mat, kraus, left, n, right):
    m = mat.reshape(left, n, right, left, n, right)
    out = np.einsum("kab,xbyzcw,kdc->xayzdw", kraus, m, kraus.conj(), optimize=True)
    return out.reshape(mat.shape)


def _apply_local_kraus_loops(mat, kraus, left, n, right):
    dim = left * n * right
    q = kraus.shape[0]
    # tmp[k] = (1 x K_k x 1) M, then out += tmp[k] (1 x K_k x 1)^dagger
    out = np.zeros((dim, dim), dtype=np.complex128)
    tmp = np.zeros((dim, dim), dtype=np.complex128)
    for k in range(q):
        tmp[:, :] = 0.0
        for x in range(left):
            for a in range(n):
                row = (x * n + a) * right
                for b in range(n):
                    kab = kraus[k, a, b]
                    if kab == 0.0:
                        continue
                    src = (x * n + b) * right
                    for y in range(right):
                        for col in range(dim):
                            tmp[row + y, col] += kab * mat[src + y, col]
        for r in range(dim):
            for z in range(left):
                for c in range(n):
                    col_out = (z * n + c) * right
                    for e in range(n):
                        kce = np.conj(kraus[k, c, e])
                        if kce == 0.0:
                            continue
                        col_src = (z * n + e) * right
                        for w in range(right):
                            out[r, col_out + w] += tmp[r, col_src + w] * kce
    return out


if HAVE_NUMBA:
    sld_eigenbasis_numba = numba.njit(cache=False)(_sld_eigenbasis_loops)
    _apply_local_kraus_jit = numba.njit(cache=False)(_apply_local_kraus_loops)

    def apply_local_kraus_numba(mat, kraus, left, n, right):
        return _apply_local_kraus_jit(
            np.ascontiguousarray(mat, dtype=np.complex128),
            np.ascontiguousarray(kraus, dtype=np.complex128),
            int(left), int(n), int(right),
        )
else:  # pragma: no cover
    sld_eigenbasis_numba = None
    apply_local_kraus_numba = None


def sld_eigenbasis(evals, drho_eig, cutoff):
    evals = np.ascontiguousarray(evals, dtype=np.float64)
    drho_eig = np.ascontiguousarray(drho_eig, dtype=np.complex128)
    if USE_NUMBA:
        return sld_eigenbasis_numba(evals, drho_eig, float(cutoff))
    return sld_eigenbasis_numpy(evals, drho_eig, cutoff)


def apply_local_kraus(mat, kraus, left, n, right):
    kraus = np.asarray(kraus, dtype=np.complex128)
    if USE_NUMBA:
        return apply_local_kraus_numba(mat, kraus, left, n, right)
    return apply_local_kraus_numpy(np.asarray(mat, dtype=np.complex128), kraus, left, n, right)
