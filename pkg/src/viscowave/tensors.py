"""Isotropic rank-4 elasticity tensor algebra on symmetric 2-tensors.

Symmetric tensors are stored packed (upper triangle, one entry per
independent component).  Component order is ``(xx, yy, xy)`` in 2-D and
``(xx, yy, zz, yz, xz, xy)`` in 3-D; packed arrays may carry arbitrary
leading axes (grid fields), the component axis is always last.

Every isotropic tensor acts diagonally on the volumetric/deviatoric
split of its argument, with eigenvalue ``d*lam + 2*mu`` on spherical
tensors and ``2*mu`` on trace-free ones.  All operations below exploit
that spectral form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Packed component -> (row, col) index pairs, per spatial dimension.
COMPONENT_PAIRS = {
    2: ((0, 0), (1, 1), (0, 1)),
    3: ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)),
}

# Frobenius weights: off-diagonal components appear twice in the full tensor.
FROBENIUS_WEIGHTS = {
    2: np.array([1.0, 1.0, 2.0]),
    3: np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0]),
}


def n_components(dim: int) -> int:
    """Number of independent components of a symmetric tensor."""
    return dim * (dim + 1) // 2


class DimensionMismatchError(ValueError):
    """Operands built for different spatial dimensions."""


@dataclass(frozen=True)
class IsotropicModuli:
    """Lame pair of one isotropic elasticity tensor.

    Parameters
    ----------
    lam : float
        First Lame modulus (Pa).  May be negative.
    mu : float
        Shear modulus (Pa), must be positive.
    dim : int
        Spatial dimension, 2 or 3.

    Strong convexity (``mu > 0`` and ``dim*lam + 2*mu > 0``) is enforced
    at construction; the moduli are immutable afterwards.
    """

    lam: float
    mu: float
    dim: int = 3

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        lam = np.asarray(self.lam, dtype=float)
        mu = np.asarray(self.mu, dtype=float)
        if not np.all(mu > 0.0):
            raise ValueError("shear modulus must be positive")
        if not np.all(self.dim * lam + 2.0 * mu > 0.0):
            raise ValueError(
                f"strong convexity violated: {self.dim}*lam + 2*mu must be positive"
            )

    @property
    def volumetric_eigenvalue(self):
        """Eigenvalue on spherical tensors, ``dim*lam + 2*mu``."""
        return self.dim * self.lam + 2.0 * self.mu

    @property
    def deviatoric_eigenvalue(self):
        """Eigenvalue on trace-free tensors, ``2*mu``."""
        return 2.0 * self.mu

    def operator_norm(self):
        """sup of |(C z):z| / |z|^2 over nonzero symmetric z.

        Equals ``max(dim*lam + 2*mu, 2*mu)`` for a strongly convex
        isotropic tensor (both eigenvalues are positive).
        """
        return np.maximum(self.volumetric_eigenvalue, self.deviatoric_eigenvalue)

    def convexity_margin(self):
        """Smallest eigenvalue, ``min(dim*lam + 2*mu, 2*mu)``.

        Positive exactly when the tensor is strongly convex.
        """
        return np.minimum(self.volumetric_eigenvalue, self.deviatoric_eigenvalue)


def convexity_margin(lam, mu, dim: int):
    """min(dim*lam + 2*mu, 2*mu) for an arbitrary Lame pair.

    Diagnostic form: positive exactly when (lam, mu) is strongly
    convex, so it also accepts pairs that `IsotropicModuli` rejects.
    """
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    return np.minimum(dim * lam + 2.0 * mu, 2.0 * mu)


def identity_packed(dim: int, like=None) -> np.ndarray:
    """Packed identity tensor, optionally broadcast to the shape of `like`."""
    comp = np.zeros(n_components(dim))
    comp[:dim] = 1.0
    if like is not None:
        out = np.zeros(np.shape(like)[:-1] + (n_components(dim),))
        out[...] = comp
        return out
    return comp


def pack(matrix: np.ndarray, dim: int | None = None) -> np.ndarray:
    """Pack a (..., d, d) symmetric matrix into (..., ncomp) components."""
    matrix = np.asarray(matrix, dtype=float)
    d = matrix.shape[-1] if dim is None else dim
    pairs = COMPONENT_PAIRS[d]
    return np.stack([matrix[..., p, q] for p, q in pairs], axis=-1)


def unpack(packed: np.ndarray, dim: int) -> np.ndarray:
    """Expand packed components back to a full (..., d, d) matrix."""
    packed = np.asarray(packed, dtype=float)
    out = np.zeros(packed.shape[:-1] + (dim, dim))
    for k, (p, q) in enumerate(COMPONENT_PAIRS[dim]):
        out[..., p, q] = packed[..., k]
        out[..., q, p] = packed[..., k]
    return out


def trace(packed: np.ndarray, dim: int) -> np.ndarray:
    """Trace of a packed symmetric tensor (sum of the diagonal block)."""
    return np.sum(np.asarray(packed)[..., :dim], axis=-1)


def frobenius(a: np.ndarray, b: np.ndarray, dim: int) -> np.ndarray:
    """Frobenius inner product a:b of packed tensors."""
    w = FROBENIUS_WEIGHTS[dim]
    return np.sum(np.asarray(a) * np.asarray(b) * w, axis=-1)


def vol_dev_split(packed: np.ndarray, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Split into spherical part (tr/d)*I and trace-free remainder.

    The parts are Frobenius-orthogonal and sum back to the input; the
    deviatoric part has zero trace by construction.
    """
    packed = np.asarray(packed, dtype=float)
    mean = trace(packed, dim)[..., None] / dim
    vol = identity_packed(dim, like=packed) * mean
    return vol, packed - vol


def apply_isotropic(moduli: IsotropicModuli, packed: np.ndarray) -> np.ndarray:
    """Apply the isotropic tensor: lam*tr(e)*I + 2*mu*e.

    `packed` may carry leading grid axes; `moduli.lam`/`mu` may be
    matching per-node arrays for heterogeneous media.
    """
    packed = np.asarray(packed, dtype=float)
    _check_components(packed, moduli.dim)
    lam = np.asarray(moduli.lam)[..., None]
    mu = np.asarray(moduli.mu)[..., None]
    tr = trace(packed, moduli.dim)[..., None]
    return lam * tr * identity_packed(moduli.dim, like=packed) + 2.0 * mu * packed


def exp_apply(moduli: IsotropicModuli, eta: float, t: float, packed: np.ndarray) -> np.ndarray:
    """Apply exp(-t * C / eta) to a packed symmetric tensor.

    The isotropic tensor is diagonal on the volumetric/deviatoric split,
    so the exponential acts by scalar factors exp(-kappa*t/eta) with
    kappa = dim*lam + 2*mu on the spherical part and 2*mu on the
    trace-free part.
    """
    eta = np.asarray(eta, dtype=float)
    if not np.all(eta > 0.0):
        raise ValueError("viscosity must be positive")
    if t < 0.0:
        raise ValueError("time must be nonnegative")
    packed = np.asarray(packed, dtype=float)
    _check_components(packed, moduli.dim)
    vol, dev = vol_dev_split(packed, moduli.dim)
    fac_v = np.exp(-np.asarray(moduli.volumetric_eigenvalue) * t / eta)[..., None]
    fac_d = np.exp(-np.asarray(moduli.deviatoric_eigenvalue) * t / eta)[..., None]
    return fac_v * vol + fac_d * dev


def _check_components(packed: np.ndarray, dim: int):
    if packed.shape[-1] != n_components(dim):
        raise DimensionMismatchError(
            f"expected {n_components(dim)} components for dim={dim}, "
            f"got {packed.shape[-1]}"
        )


class SymTensor:
    """Thin wrapper pairing packed components with their dimension.

    Symmetry is structural: only one copy of each off-diagonal entry is
    stored, so (p, q) and (q, p) agree exactly by construction.
    """

    __slots__ = ("data", "dim")

    def __init__(self, data: np.ndarray, dim: int):
        data = np.asarray(data, dtype=float)
        _check_components(data, dim)
        self.data = data
        self.dim = dim

    @classmethod
    def from_matrix(cls, matrix) -> "SymTensor":
        matrix = np.asarray(matrix, dtype=float)
        if not np.array_equal(matrix, np.swapaxes(matrix, -1, -2)):
            raise ValueError("matrix is not symmetric")
        return cls(pack(matrix), matrix.shape[-1])

    @classmethod
    def identity(cls, dim: int) -> "SymTensor":
        return cls(identity_packed(dim), dim)

    @classmethod
    def zeros(cls, dim: int) -> "SymTensor":
        return cls(np.zeros(n_components(dim)), dim)

    def to_matrix(self) -> np.ndarray:
        return unpack(self.data, self.dim)

    @property
    def trace(self):
        return trace(self.data, self.dim)

    def vol_dev(self) -> tuple["SymTensor", "SymTensor"]:
        vol, dev = vol_dev_split(self.data, self.dim)
        return SymTensor(vol, self.dim), SymTensor(dev, self.dim)

    def frobenius(self, other: "SymTensor"):
        self._check(other)
        return frobenius(self.data, other.data, self.dim)

    def norm(self):
        return np.sqrt(self.frobenius(self))

    def _check(self, other: "SymTensor"):
        if self.dim != other.dim:
            raise DimensionMismatchError(f"dim {self.dim} vs {other.dim}")

    def __add__(self, other: "SymTensor") -> "SymTensor":
        self._check(other)
        return SymTensor(self.data + other.data, self.dim)

    def __sub__(self, other: "SymTensor") -> "SymTensor":
        self._check(other)
        return SymTensor(self.data - other.data, self.dim)

    def __mul__(self, scalar) -> "SymTensor":
        return SymTensor(self.data * scalar, self.dim)

    __rmul__ = __mul__

    def __neg__(self) -> "SymTensor":
        return SymTensor(-self.data, self.dim)

    def __repr__(self):
        return f"SymTensor(dim={self.dim}, data={self.data!r})"
