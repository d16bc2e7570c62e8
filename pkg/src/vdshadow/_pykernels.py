"""Pure-Python versions of the tableau kernels.

Same signatures as the compiled ``_kernels`` module. Used when the extension
is not built, or when ``VDSHADOW_PURE=1`` is set.

Tableau layout: row ``2q`` is the image of X_q, row ``2q+1`` the image of Z_q,
each row a vector in interleaved coordinates ``(x_0, z_0, x_1, z_1, ...)``.
"""

import numpy as np


def _inner(v, w):
    t = 0
    for i in range(0, len(v), 2):
        t += v[i] * w[i + 1] + v[i + 1] * w[i]
    return t & 1


def _transvect(h, v):
    if _inner(v, h):
        return [(a ^ b) for a, b in zip(v, h)]
    return v


def _find_transvection(x, y):
    nn = len(x)
    zero = [0] * nn
    if x == y:
        return zero, zero
    if _inner(x, y):
        return [(a ^ b) for a, b in zip(x, y)], zero
    z = [0] * nn
    for i in range(0, nn, 2):
        if (x[i] | x[i + 1]) and (y[i] | y[i + 1]):
            z[i] = x[i] ^ y[i]
            z[i + 1] = x[i + 1] ^ y[i + 1]
            if not (z[i] | z[i + 1]):
                z[i + 1] = 1
                if x[i] != x[i + 1]:
                    z[i] = 1
            return [(a ^ b) for a, b in zip(x, z)], [(a ^ b) for a, b in zip(y, z)]
    for i in range(0, nn, 2):
        if (x[i] | x[i + 1]) and not (y[i] | y[i + 1]):
            if x[i] == x[i + 1]:
                z[i + 1] = 1
            else:
                z[i + 1] = x[i]
                z[i] = x[i + 1]
            break
    for i in range(0, nn, 2):
        if not (x[i] | x[i + 1]) and (y[i] | y[i + 1]):
            if y[i] == y[i + 1]:
                z[i + 1] = 1
            else:
                z[i + 1] = y[i]
                z[i] = y[i + 1]
            break
    return [(a ^ b) for a, b in zip(x, z)], [(a ^ b) for a, b in zip(y, z)]


def _symplectic(ks, bits, n):
    """Koenig-Smolin recursive construction; ks[0] and bits[0] drive the outer level."""
    nn = 2 * n
    k = int(ks[0])
    f1 = [(k >> j) & 1 for j in range(nn)]
    e1 = [1] + [0] * (nn - 1)
    t0, t1 = _find_transvection(e1, f1)
    b = [int(v) for v in bits[0][: nn - 1]]
    eprime = list(e1)
    for j in range(2, nn):
        eprime[j] = b[j - 1]
    h0 = _transvect(t1, _transvect(t0, eprime))
    if b[0]:
        f1 = [0] * nn
    if n == 1:
        g = [[1, 0], [0, 1]]
    else:
        inner = _symplectic(ks[1:], bits[1:], n - 1)
        g = [[1, 0] + [0] * (nn - 2), [0, 1] + [0] * (nn - 2)]
        g += [[0, 0] + row for row in inner]
    out = []
    for row in g:
        row = _transvect(t0, row)
        row = _transvect(t1, row)
        row = _transvect(h0, row)
        row = _transvect(f1, row)
        out.append(row)
    return out


def random_symplectic_batch(ks, bits):
    """Build symplectic matrices from pre-drawn choices.

    ``ks[s, m]`` is uniform in ``[1, 4**(n-m) - 1]`` and ``bits[s, m]`` holds
    ``2(n-m) - 1`` uniform bits (padded to ``2n``). Returns ``uint8[S, 2n, 2n]``.
    """
    ks = np.asarray(ks, dtype=np.int64)
    bits = np.asarray(bits, dtype=np.uint8)
    S, n = ks.shape
    out = np.empty((S, 2 * n, 2 * n), dtype=np.uint8)
    for s in range(S):
        out[s] = _symplectic(ks[s].tolist(), bits[s].tolist(), n)
    return out


def _pauli_apply(xmask, zmask, ph, vec, d):
    # hermitian P(x, z) = i^{|x&z|} X^x Z^z; ph adds a sign
    w = bin(xmask & zmask).count("1")
    phase = (1j) ** w * (-1 if ph else 1)
    out = np.empty_like(vec)
    for k in range(d):
        sgn = -1 if bin(zmask & k).count("1") & 1 else 1
        out[k ^ xmask] = phase * sgn * vec[k]
    return out


def _row_masks(row, n):
    xm = zm = 0
    for q in range(n):
        if row[2 * q]:
            xm |= 1 << q
        if row[2 * q + 1]:
            zm |= 1 << q
    return xm, zm


def tableau_to_unitary_batch(tab, signs):
    """Dense unitaries for a batch of tableaux, ``complex128[S, 2**n, 2**n]``.

    Column k is U|k> = prod_q U X_q^{k_q} U^dag applied to U|0>, where U|0> is
    projected out of a fixed generic vector by the images of the Z_q. Phase
    convention: first nonzero entry of column 0 is real positive.
    """
    tab = np.asarray(tab, dtype=np.uint8)
    signs = np.asarray(signs, dtype=np.uint8)
    S, nn, _ = tab.shape
    n = nn // 2
    d = 1 << n
    seed_vec = np.exp(1j * 0.6180339887 * np.arange(1, d + 1)) * (1.0 + 0.1 * np.arange(d))
    out = np.empty((S, d, d), dtype=np.complex128)
    for s in range(S):
        masks = [_row_masks(tab[s, r], n) for r in range(nn)]
        psi = seed_vec.copy()
        for q in range(n):
            xm, zm = masks[2 * q + 1]
            psi = 0.5 * (psi + _pauli_apply(xm, zm, signs[s, 2 * q + 1], psi, d))
        j = int(np.argmax(np.abs(psi) > 1e-9))
        psi = psi * (abs(psi[j]) / psi[j])
        psi /= np.linalg.norm(psi)
        U = out[s]
        U[:, 0] = psi
        for k in range(1, d):
            q = (k & -k).bit_length() - 1
            xm, zm = masks[2 * q]
            U[:, k] = _pauli_apply(xm, zm, signs[s, 2 * q], U[:, k & (k - 1)], d)
    return out
