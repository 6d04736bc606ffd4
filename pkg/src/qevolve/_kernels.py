"""Numba kernels for the statevector simulator.

Basis index convention: bit ``q`` of the index is the computational value of
qubit ``q``. All kernels release the GIL.
"""

import numba as nb
import numpy as np

RZ = 0
RY = 1
CNOT = 2
CRY = 3

_jit = nb.njit(cache=True, nogil=True)


@_jit
def parity(v):
    v ^= v >> 32
    v ^= v >> 16
    v ^= v >> 8
    v ^= v >> 4
    v ^= v >> 2
    v ^= v >> 1
    return v & 1


@_jit
def _rz(state, tb, angle):
    ph = np.exp(2j * angle)
    dim = state.shape[0]
    for blk in range(0, dim, 2 * tb):
        for j in range(blk + tb, blk + 2 * tb):
            state[j] *= ph


@_jit
def _ry(state, tb, cb, angle):
    # cb == 0 means uncontrolled
    c = np.cos(angle)
    s = np.sin(angle)
    dim = state.shape[0]
    for blk in range(0, dim, 2 * tb):
        for j in range(blk, blk + tb):
            if cb and not (j & cb):
                continue
            a = state[j]
            b = state[j + tb]
            state[j] = c * a - s * b
            state[j + tb] = s * a + c * b


@_jit
def _cnot(state, tb, cb):
    dim = state.shape[0]
    for blk in range(0, dim, 2 * tb):
        for j in range(blk, blk + tb):
            if j & cb:
                a = state[j]
                state[j] = state[j + tb]
                state[j + tb] = a


@_jit
def apply_one(state, kind, target, control, angle):
    tb = 1 << target
    if kind == RZ:
        _rz(state, tb, angle)
    elif kind == RY:
        _ry(state, tb, 0, angle)
    elif kind == CNOT:
        _cnot(state, tb, 1 << control)
    else:
        _ry(state, tb, 1 << control, angle)


@_jit
def _apply_2x2(state, tb, m00, m01, m10, m11):
    dim = state.shape[0]
    for blk in range(0, dim, 2 * tb):
        for j in range(blk, blk + tb):
            a = state[j]
            b = state[j + tb]
            state[j] = m00 * a + m01 * b
            state[j + tb] = m10 * a + m11 * b


@_jit
def run(state, kinds, targets, controls, pidx, params):
    # consecutive RZ/RY gates on one qubit are fused into a single 2x2 pass
    n_gates = kinds.shape[0]
    g = 0
    while g < n_gates:
        k = kinds[g]
        if k == RZ or k == RY:
            t = targets[g]
            m00 = 1.0 + 0.0j
            m01 = 0.0j
            m10 = 0.0j
            m11 = 1.0 + 0.0j
            while g < n_gates and (kinds[g] == RZ or kinds[g] == RY) and targets[g] == t:
                angle = params[pidx[g]]
                if kinds[g] == RZ:
                    ph = np.exp(2j * angle)
                    m10 *= ph
                    m11 *= ph
                else:
                    c = np.cos(angle)
                    s = np.sin(angle)
                    m00, m01, m10, m11 = (
                        c * m00 - s * m10,
                        c * m01 - s * m11,
                        s * m00 + c * m10,
                        s * m01 + c * m11,
                    )
                g += 1
            _apply_2x2(state, 1 << t, m00, m01, m10, m11)
        else:
            angle = params[pidx[g]] if pidx[g] >= 0 else 0.0
            apply_one(state, k, targets[g], controls[g], angle)
            g += 1


@_jit
def unitary(dim, kinds, targets, controls, pidx, params):
    out = np.zeros((dim, dim), dtype=np.complex128)
    col = np.empty(dim, dtype=np.complex128)
    for c in range(dim):
        col[:] = 0.0
        col[c] = 1.0
        run(col, kinds, targets, controls, pidx, params)
        out[:, c] = col
    return out


@_jit
def expectation(state, xs, zs, coefs):
    total = 0.0 + 0.0j
    dim = state.shape[0]
    for t in range(xs.shape[0]):
        x = xs[t]
        z = zs[t]
        acc = 0.0 + 0.0j
        for i in range(dim):
            v = np.conj(state[i ^ x]) * state[i]
            if parity(i & z):
                acc -= v
            else:
                acc += v
        total += coefs[t] * acc
    return total


@_jit
def apply_sum(state, xs, zs, coefs, out):
    """out <- sum_t coefs[t] * P_t state; P_t = i^ny X^x Z^z with i^ny folded into coefs."""
    out[:] = 0.0
    dim = state.shape[0]
    for t in range(xs.shape[0]):
        x = xs[t]
        z = zs[t]
        w = coefs[t]
        for i in range(dim):
            if parity(i & z):
                out[i ^ x] -= w * state[i]
            else:
                out[i ^ x] += w * state[i]
    return out
