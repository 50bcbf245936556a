"""Symmetric trace-free (STF) tensor algebra with the 3D trace convention.

The moment system is posed on a 2D domain that stands for a z-homogeneous 3D
gas column, so deviatoric parts must subtract one *third* of the trace even
when the arrays are 2x2.  Rank-2 tensors are lifted to trace-free 3x3 tensors
before any rank-3 calculus happens; gradients of lifted tensors get a zero
z-derivative slab.

Everything here is a pure function over plain float ndarrays, so the form
kernels can apply the operators to per-basis-function tensor fields.
"""

import numpy as np

__all__ = [
    "stf3d2",
    "gen3dTF2",
    "grad3d_of_2",
    "sym3d3",
    "stf3d3",
    "inner2",
    "inner3",
]


def stf3d2(a):
    """Symmetric trace-free part of a 2x2 tensor, trace taken as if 3D.

    Returns sym(a) - tr(a)/3 * I, i.e. the in-plane block of the STF part of
    the zero-padded 3D lift of ``a``.
    """
    a = np.asarray(a, dtype=float)
    sym = 0.5 * (a + a.T)
    return sym - (np.trace(sym) / 3.0) * np.eye(2)


def gen3dTF2(a):
    """Lift a 2x2 tensor to a trace-free 3x3 tensor.

    The input goes into the upper-left block, the off-plane entries are zero
    and the (3,3) entry is -(a_11 + a_22) so the 3D trace vanishes exactly.
    """
    a = np.asarray(a, dtype=float)
    out = np.zeros((3, 3))
    out[:2, :2] = a
    out[2, 2] = -(a[0, 0] + a[1, 1])
    return out


def grad3d_of_2(ddx, ddy):
    """3D gradient of a z-homogeneous 3x3 tensor field from its x/y derivatives.

    ``ddx`` and ``ddy`` are the partial derivatives of the (lifted) tensor.
    Convention: the result g[i, j, k] is the derivative of component (i, j)
    in direction k, with the z-derivative slab g[:, :, 2] identically zero.
    The placement of the derivative index is immaterial once the result is
    fully symmetrized, but this module fixes "derivative index last".
    """
    g = np.zeros((3, 3, 3))
    g[:, :, 0] = np.asarray(ddx, dtype=float)
    g[:, :, 1] = np.asarray(ddy, dtype=float)
    return g


def sym3d3(b):
    """Symmetric part of a 3x3x3 tensor: average over all six transpositions."""
    b = np.asarray(b, dtype=float)
    return (
        b
        + b.transpose(0, 2, 1)
        + b.transpose(1, 0, 2)
        + b.transpose(1, 2, 0)
        + b.transpose(2, 0, 1)
        + b.transpose(2, 1, 0)
    ) / 6.0


def stf3d3(b):
    """Symmetric trace-free part of a 3x3x3 tensor.

    Subtracts the 1/5-weighted trace corrections from the symmetrized tensor
    so that the contraction over every index pair vanishes.
    """
    s = sym3d3(b)
    eye = np.eye(3)
    traces = (
        np.einsum("ill,jk->ijk", s, eye)
        + np.einsum("ljl,ik->ijk", s, eye)
        + np.einsum("llk,ij->ijk", s, eye)
    )
    return s - traces / 5.0


def inner2(a, b):
    """Frobenius inner product of two 3x3 (or 2x2) tensors."""
    return float(np.tensordot(np.asarray(a, float), np.asarray(b, float), axes=2))


def inner3(a, b):
    """Full contraction of two 3x3x3 tensors over all three indices."""
    return float(np.tensordot(np.asarray(a, float), np.asarray(b, float), axes=3))
