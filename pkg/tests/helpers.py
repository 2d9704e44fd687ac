"""Independent constructions shared by the test modules.

Random operators are built here from numpy primitives rather than from the
package, so they can serve as oracles.
"""
import numpy as np


def haar_unitary(rng, n):
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def normal_from(rng, eigenvalues):
    u = haar_unitary(rng, len(eigenvalues))
    return u @ np.diag(np.asarray(eigenvalues, dtype=complex)) @ u.conj().T


def random_hermitian(rng, n, scale=1.0):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (z + z.conj().T) / 2


def rank_distinct_spectrum(rng, n, spread=4.0):
    """``n`` complex values whose ``Re + Im`` are pairwise at least 0.1 apart."""
    while True:
        vals = np.round(rng.uniform(-spread, spread, n), 1) + 1j * np.round(rng.uniform(-spread, spread, n), 1)
        ranks = np.sort(vals.real + vals.imag)
        if n == 1 or np.min(np.diff(ranks)) >= 0.1 - 1e-12:
            return vals


def unit_vector(rng, n):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def fro(m):
    return float(np.linalg.norm(m))

