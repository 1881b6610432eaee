"""Compiled inner loops for the split-step propagator.

One step of length h is the symmetric composition

    A(a1 h) B(b1 h) A(a2 h) B(b2 h) A(a3 h) B(b3 h) A(a4 h) B(b3 h) A(a3 h) B(b2 h) A(a2 h) B(b1 h) A(a1 h)

where A is the (diagonal) interaction + detuning flow and B the single-atom
drive rotation, both applied exactly. The coefficients are the 6-stage
fourth-order partitioned scheme of Blanes & Moan (2002).
"""

import numpy as np
from numba import njit

_A1 = 0.0792036964311957
_A2 = 0.353172906049774
_A3 = -0.0420650803577195
_A4 = 1.0 - 2.0 * (_A1 + _A2 + _A3)
_B1 = 0.209515106613362
_B2 = -0.143851773179818
_B3 = 0.5 - (_B1 + _B2)

A_COEF = np.array([_A1, _A2, _A3, _A4, _A3, _A2, _A1])
B_COEF = np.array([_B1, _B2, _B3, _B3, _B2, _B1])
# which of the four distinct A coefficients each A stage uses
A_INDEX = np.array([0, 1, 2, 3, 2, 1, 0], dtype=np.int64)
A_DISTINCT = np.array([_A1, _A2, _A3, _A4])


@njit(cache=True, nogil=True)
def _diag_stage(psi, phase_tab, pc, det_phase, n):
    # psi[b] *= exp(-i tau E_b) * exp(+i det_phase * popcount(b))
    pcp = np.empty(n + 1, dtype=np.complex128)
    for k in range(n + 1):
        pcp[k] = np.cos(det_phase * k) + 1j * np.sin(det_phase * k)
    for b in range(psi.shape[0]):
        psi[b] *= phase_tab[b] * pcp[pc[b]]


@njit(cache=True, nogil=True)
def _diag_stage_inline(psi, energies, tau, pc, det_phase, n):
    pcp = np.empty(n + 1, dtype=np.complex128)
    for k in range(n + 1):
        pcp[k] = np.cos(det_phase * k) + 1j * np.sin(det_phase * k)
    for b in range(psi.shape[0]):
        x = -tau * energies[b]
        psi[b] *= (np.cos(x) + 1j * np.sin(x)) * pcp[pc[b]]


@njit(cache=True, nogil=True)
def _rotation_stage(psi, theta, phi, n):
    # exp(-i theta (e^{i phi}|g><r| + e^{-i phi}|r><g|)) on every atom
    if theta == 0.0:
        return
    c = np.cos(theta)
    s = np.sin(theta)
    u01 = -1j * s * (np.cos(phi) + 1j * np.sin(phi))
    u10 = -1j * s * (np.cos(phi) - 1j * np.sin(phi))
    dim = psi.shape[0]
    for j in range(n):
        stride = 1 << j
        for hi in range(0, dim, 2 * stride):
            for lo in range(stride):
                i0 = hi + lo
                i1 = i0 + stride
                x0 = psi[i0]
                x1 = psi[i1]
                psi[i0] = c * x0 + u01 * x1
                psi[i1] = u10 * x0 + c * x1


@njit(cache=True, nogil=True)
def split_steps(psi, n, pc, etab, uidx, det_int, theta, phi):
    """Advance ``psi`` in place through all steps.

    etab[u, k, :] = exp(-i A_DISTINCT[k] h_u E) for the step length class u.
    det_int[s, i] is the detuning integral over A stage i of step s,
    theta[s, j] / phi[s, j] the rotation angle and phase of B stage j.
    """
    nsteps = uidx.shape[0]
    for s in range(nsteps):
        u = uidx[s]
        for i in range(6):
            _diag_stage(psi, etab[u, A_INDEX[i]], pc, det_int[s, i], n)
            _rotation_stage(psi, theta[s, i], phi[s, i], n)
        _diag_stage(psi, etab[u, A_INDEX[6]], pc, det_int[s, 6], n)


@njit(cache=True, nogil=True)
def split_steps_inline(psi, n, pc, energies, hs, det_int, theta, phi):
    """Same as ``split_steps`` but computes the interaction phases on the fly."""
    nsteps = hs.shape[0]
    for s in range(nsteps):
        h = hs[s]
        for i in range(6):
            _diag_stage_inline(psi, energies, A_COEF[i] * h, pc, det_int[s, i], n)
            _rotation_stage(psi, theta[s, i], phi[s, i], n)
        _diag_stage_inline(psi, energies, A_COEF[6] * h, pc, det_int[s, 6], n)
