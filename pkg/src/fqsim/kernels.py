"""Low-level statevector kernels with optional numba acceleration.

All kernels operate in place on a flat complex128 amplitude array of
length 2**m.  Qubit 0 is the most significant bit of the basis index,
so qubit q strides by 2**(m-1-q).  Set FQSIM_NO_NUMBA=1 to force the
pure-numpy fallback.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


USE_NUMBA = HAS_NUMBA and os.environ.get("FQSIM_NO_NUMBA", "") not in ("1", "true", "yes")

# Op kinds of the packed circuit representation.
K_1Q = 0
K_CX = 1
K_CZ = 2
K_2Q = 3
K_C1Q = 4


# ---------------------------------------------------------------------------
# numba path


@njit(cache=True, nogil=True)
def _apply_1q_nb(amps, q, m, u00, u01, u10, u11):
    stride = 1 << (m - 1 - q)
    n = amps.shape[0]
    for base in range(0, n, stride << 1):
        for off in range(stride):
            i0 = base + off
            i1 = i0 + stride
            a0 = amps[i0]
            a1 = amps[i1]
            amps[i0] = u00 * a0 + u01 * a1
            amps[i1] = u10 * a0 + u11 * a1


@njit(cache=True, nogil=True)
def _apply_c1q_nb(amps, c, t, m, u00, u01, u10, u11):
    cs = 1 << (m - 1 - c)
    ts = 1 << (m - 1 - t)
    n = amps.shape[0]
    for i in range(n):
        if (i & cs) != 0 and (i & ts) == 0:
            j = i | ts
            a0 = amps[i]
            a1 = amps[j]
            amps[i] = u00 * a0 + u01 * a1
            amps[j] = u10 * a0 + u11 * a1


@njit(cache=True, nogil=True)
def _apply_cz_nb(amps, a, b, m):
    sa = 1 << (m - 1 - a)
    sb = 1 << (m - 1 - b)
    n = amps.shape[0]
    for i in range(n):
        if (i & sa) != 0 and (i & sb) != 0:
            amps[i] = -amps[i]


@njit(cache=True, nogil=True)
def _apply_2q_nb(amps, qa, qb, m, mat):
    sa = 1 << (m - 1 - qa)
    sb = 1 << (m - 1 - qb)
    n = amps.shape[0]
    for i in range(n):
        if (i & sa) == 0 and (i & sb) == 0:
            i00 = i
            i01 = i | sb
            i10 = i | sa
            i11 = i | sa | sb
            a00 = amps[i00]
            a01 = amps[i01]
            a10 = amps[i10]
            a11 = amps[i11]
            amps[i00] = mat[0, 0] * a00 + mat[0, 1] * a01 + mat[0, 2] * a10 + mat[0, 3] * a11
            amps[i01] = mat[1, 0] * a00 + mat[1, 1] * a01 + mat[1, 2] * a10 + mat[1, 3] * a11
            amps[i10] = mat[2, 0] * a00 + mat[2, 1] * a01 + mat[2, 2] * a10 + mat[2, 3] * a11
            amps[i11] = mat[3, 0] * a00 + mat[3, 1] * a01 + mat[3, 2] * a10 + mat[3, 3] * a11


@njit(cache=True, nogil=True)
def _run_ops_nb(amps, kinds, qa, qb, mats, start, end, m):
    for i in range(start, end):
        k = kinds[i]
        if k == K_1Q:
            _apply_1q_nb(amps, qa[i], m, mats[i, 0, 0], mats[i, 0, 1], mats[i, 1, 0], mats[i, 1, 1])
        elif k == K_CX:
            # CNOT = controlled X
            _apply_c1q_nb(amps, qa[i], qb[i], m, 0.0 + 0.0j, 1.0 + 0.0j, 1.0 + 0.0j, 0.0 + 0.0j)
        elif k == K_CZ:
            _apply_cz_nb(amps, qa[i], qb[i], m)
        elif k == K_2Q:
            _apply_2q_nb(amps, qa[i], qb[i], m, mats[i])
        else:
            _apply_c1q_nb(amps, qa[i], qb[i], m, mats[i, 0, 0], mats[i, 0, 1], mats[i, 1, 0], mats[i, 1, 1])


@njit(cache=True, nogil=True)
def _popcount(v):
    c = 0
    while v:
        c += 1
        v &= v - 1
    return c


@njit(cache=True, nogil=True)
def _pauli_expect_nb(amps, xmask, zmask, ymask, phase0):
    # <psi| O |psi> for a Pauli string; O|i> = phase0 * (-1)^par(i) |i ^ xmask|
    acc = 0.0 + 0.0j
    n = amps.shape[0]
    for i in range(n):
        par = _popcount(i & zmask) + _popcount(i & ymask)
        ph = phase0 if (par & 1) == 0 else -phase0
        acc += np.conj(amps[i ^ xmask]) * ph * amps[i]
    return acc


@njit(cache=True, nogil=True)
def _apply_pauli_nb(inp, out, xmask, zmask, ymask, phase0):
    n = inp.shape[0]
    for i in range(n):
        par = _popcount(i & zmask) + _popcount(i & ymask)
        ph = phase0 if (par & 1) == 0 else -phase0
        out[i ^ xmask] = ph * inp[i]


# ---------------------------------------------------------------------------
# numpy path


def _apply_1q_np(amps, q, m, mat):
    # int(q): packed qubit indices arrive as int8, and int8 arithmetic
    # would overflow the shift for m >= 8
    stride = 1 << (m - 1 - int(q))
    v = amps.reshape(-1, 2, stride)
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :]
    v[:, 0, :] = mat[0, 0] * a0 + mat[0, 1] * a1
    v[:, 1, :] = mat[1, 0] * a0 + mat[1, 1] * a1


def _apply_c1q_np(amps, c, t, m, mat):
    v = amps.reshape((2,) * m)
    idx = [slice(None)] * m
    idx[c] = 1
    sub = v[tuple(idx)]
    ta = t - 1 if c < t else t
    a0 = np.take(sub, 0, axis=ta).copy()
    a1 = np.take(sub, 1, axis=ta)
    sel = [slice(None)] * (m - 1)
    sel[ta] = 0
    sub[tuple(sel)] = mat[0, 0] * a0 + mat[0, 1] * a1
    sel[ta] = 1
    sub[tuple(sel)] = mat[1, 0] * a0 + mat[1, 1] * a1


def _apply_cz_np(amps, a, b, m):
    v = amps.reshape((2,) * m)
    idx = [slice(None)] * m
    idx[a] = 1
    idx[b] = 1
    v[tuple(idx)] *= -1


def _apply_2q_np(amps, qa, qb, m, mat):
    v = amps.reshape((2,) * m)
    w = np.moveaxis(v, (qa, qb), (0, 1))
    r = mat @ w.reshape(4, -1)
    w[...] = r.reshape(w.shape)


def _run_ops_np(amps, kinds, qa, qb, mats, start, end, m):
    cx = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
    for i in range(start, end):
        k = kinds[i]
        if k == K_1Q:
            _apply_1q_np(amps, qa[i], m, mats[i, :2, :2])
        elif k == K_CX:
            _apply_c1q_np(amps, qa[i], qb[i], m, cx)
        elif k == K_CZ:
            _apply_cz_np(amps, qa[i], qb[i], m)
        elif k == K_2Q:
            _apply_2q_np(amps, qa[i], qb[i], m, mats[i])
        else:
            _apply_c1q_np(amps, qa[i], qb[i], m, mats[i, :2, :2])


def _pauli_expect_np(amps, xmask, zmask, ymask, phase0):
    n = amps.shape[0]
    idx = np.arange(n, dtype=np.uint64)
    par = np.bitwise_count(idx & np.uint64(zmask)) + np.bitwise_count(idx & np.uint64(ymask))
    ph = np.where(par & 1, -phase0, phase0)
    return np.sum(np.conj(amps[idx ^ np.uint64(xmask)]) * ph * amps)


def _apply_pauli_np(inp, out, xmask, zmask, ymask, phase0):
    n = inp.shape[0]
    idx = np.arange(n, dtype=np.uint64)
    par = np.bitwise_count(idx & np.uint64(zmask)) + np.bitwise_count(idx & np.uint64(ymask))
    ph = np.where(par & 1, -phase0, phase0)
    out[idx ^ np.uint64(xmask)] = ph * inp


# ---------------------------------------------------------------------------
# dispatch


def run_ops(amps, kinds, qa, qb, mats, start, end, m):
    """Apply packed ops [start, end) in place on a flat amplitude array."""
    if USE_NUMBA:
        _run_ops_nb(amps, kinds, qa, qb, mats, start, end, m)
    else:
        _run_ops_np(amps, kinds, qa, qb, mats, start, end, m)


def apply_1q(amps, q, m, mat):
    """Apply a 2x2 matrix to qubit q in place."""
    if USE_NUMBA:
        _apply_1q_nb(amps, q, m, mat[0, 0], mat[0, 1], mat[1, 0], mat[1, 1])
    else:
        _apply_1q_np(amps, q, m, mat)


def apply_c1q(amps, c, t, m, mat):
    """Apply a 2x2 matrix to qubit t where control qubit c is 1, in place."""
    if USE_NUMBA:
        _apply_c1q_nb(amps, c, t, m, mat[0, 0], mat[0, 1], mat[1, 0], mat[1, 1])
    else:
        _apply_c1q_np(amps, c, t, m, mat)


def apply_cz(amps, a, b, m):
    """Apply a controlled-Z between qubits a and b in place."""
    if USE_NUMBA:
        _apply_cz_nb(amps, a, b, m)
    else:
        _apply_cz_np(amps, a, b, m)


def apply_2q(amps, qa, qb, m, mat):
    """Apply a 4x4 matrix to the ordered qubit pair (qa, qb) in place."""
    if USE_NUMBA:
        _apply_2q_nb(amps, qa, qb, m, mat)
    else:
        _apply_2q_np(amps, qa, qb, m, mat)


def pauli_masks(axes):
    """Bit masks (xmask, zmask, ymask, phase0) for a Pauli label string."""
    m = len(axes)
    xmask = zmask = ymask = 0
    ny = 0
    for q, ax in enumerate(axes):
        bit = 1 << (m - 1 - q)
        if ax == "X":
            xmask |= bit
        elif ax == "Y":
            xmask |= bit
            ymask |= bit
            ny += 1
        elif ax == "Z":
            zmask |= bit
    phase0 = 1j ** (ny % 4)
    return xmask, zmask, ymask, complex(phase0)


def pauli_expect(amps, xmask, zmask, ymask, phase0):
    """Complex <psi|O|psi> for the Pauli string described by the masks."""
    if USE_NUMBA:
        return _pauli_expect_nb(amps, xmask, zmask, ymask, phase0)
    return complex(_pauli_expect_np(amps, xmask, zmask, ymask, phase0))


def apply_pauli(inp, out, xmask, zmask, ymask, phase0):
    """Write O|inp> into out (distinct buffers) for the masked Pauli string."""
    if USE_NUMBA:
        _apply_pauli_nb(inp, out, xmask, zmask, ymask, phase0)
    else:
        _apply_pauli_np(inp, out, xmask, zmask, ymask, phase0)


class PackedOps:
    """Append-only packed circuit: parallel op arrays consumed by run_ops.

    Gate matrices may be overwritten in place after finalization (parameter
    updates); op kinds and qubit assignments are frozen once built.
    """

    def __init__(self, qubit_count):
        self.qubit_count = qubit_count
        self._kinds = []
        self._qa = []
        self._qb = []
        self._mats = []
        self.kinds = None
        self.qa = None
        self.qb = None
        self.mats = None

    @property
    def n(self):
        return len(self._kinds)

    def _add(self, kind, qa, qb, mat):
        self._kinds.append(kind)
        self._qa.append(qa)
        self._qb.append(qb)
        m4 = np.zeros((4, 4), dtype=np.complex128)
        if mat is not None:
            m4[: mat.shape[0], : mat.shape[1]] = mat
        self._mats.append(m4)
        self.kinds = None  # invalidate finalized arrays
        return len(self._kinds) - 1

    def add_1q(self, q, mat2):
        return self._add(K_1Q, q, 0, np.asarray(mat2, dtype=np.complex128))

    def add_cx(self, control, target):
        return self._add(K_CX, control, target, None)

    def add_cz(self, a, b):
        return self._add(K_CZ, a, b, None)

    def add_2q(self, qa, qb, mat4):
        return self._add(K_2Q, qa, qb, np.asarray(mat4, dtype=np.complex128))

    def add_c1q(self, control, target, mat2):
        return self._add(K_C1Q, control, target, np.asarray(mat2, dtype=np.complex128))

    def _finalize(self):
        self.kinds = np.asarray(self._kinds, dtype=np.int8)
        self.qa = np.asarray(self._qa, dtype=np.int8)
        self.qb = np.asarray(self._qb, dtype=np.int8)
        self.mats = np.stack(self._mats) if self._mats else np.zeros((0, 4, 4), np.complex128)

    def set_1q(self, i, mat2):
        if self.kinds is None:
            self._finalize()
        self.mats[i, :2, :2] = mat2
        self._mats[i][:2, :2] = mat2

    def set_2q(self, i, mat4):
        if self.kinds is None:
            self._finalize()
        self.mats[i] = mat4
        self._mats[i][:, :] = mat4

    def clone(self):
        """Deep copy; gate matrices are independent of the original's."""
        new = PackedOps(self.qubit_count)
        new._kinds = list(self._kinds)
        new._qa = list(self._qa)
        new._qb = list(self._qb)
        new._mats = [m.copy() for m in self._mats]
        return new

    def append_from(self, other, start=0, end=None):
        """Copy other's ops [start, end) onto this builder (same indices)."""
        if end is None:
            end = other.n
        for i in range(start, end):
            self._kinds.append(other._kinds[i])
            self._qa.append(other._qa[i])
            self._qb.append(other._qb[i])
            self._mats.append(other._mats[i].copy())
        self.kinds = None

    def run(self, amps, start=0, end=None):
        """Apply ops [start, end) in place; returns amps for chaining."""
        if self.kinds is None:
            self._finalize()
        if end is None:
            end = self.n
        if end > start:
            run_ops(amps, self.kinds, self.qa, self.qb, self.mats, start, end, self.qubit_count)
        return amps
