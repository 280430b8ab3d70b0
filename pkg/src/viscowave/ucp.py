"""Curl-div reformulation identities and Carleman-weight probes.

The elliptic operator div(C e[u]) of an isotropic medium, augmented by
the auxiliary scalars p = div u and curl vector w = curl u, reduces to
a Laplacian principal part diag(mu, mu, mu, lam+2mu, mu, mu, mu) acting
on the 7-vector (u, p, w) plus first-order remainder terms.  This
module verifies the component identities of that reduction *exactly*
on polynomial fields, checks by exact linear algebra that the
remainder really is first order in the augmented field, and probes
the weighted integral inequalities used with the singular radial
weight exp(beta/2 (log|x - x0|)^2).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import logsumexp

from . import polycalc as pc
from .polycalc import Poly, PolyVec


# -- augmented field -------------------------------------------------------


@dataclass(frozen=True)
class AugmentedField:
    """(u, p, w) with p = div u and w = curl u, three dimensions only.

    p and w are always derived from u, never set independently.
    """

    u: object
    p: object
    w: object

    @classmethod
    def from_poly(cls, u: PolyVec) -> "AugmentedField":
        if u.dim != 3 or len(u) != 3:
            raise ValueError("augmented field requires a 3-D vector field")
        return cls(u=u, p=pc.div(u), w=pc.curl(u))

    @classmethod
    def from_grid(cls, u: np.ndarray, grid, order: int = 2) -> "AugmentedField":
        from .solver import curl_field, divergence
        if grid.dim != 3:
            raise ValueError("augmented field requires a 3-D grid")
        return cls(u=u, p=divergence(u, grid, order), w=curl_field(u, grid, order))


def _sym_grad2(u: PolyVec):
    """e[2u] = grad u + (grad u)^T as a nested tuple of polynomials."""
    d = u.dim
    return tuple(tuple(u[p].diff(q) + u[q].diff(p) for q in range(d))
                 for p in range(d))


def _stress_matrix(u: PolyVec, lam: Poly, mu: Poly):
    """C e[u] = lam * (div u) * I + mu * e[2u]."""
    p = pc.div(u)
    e2 = _sym_grad2(u)
    return tuple(tuple(mu * e2[i][j] + (lam * p if i == j else Poly({}, dim=3))
                       for j in range(3)) for i in range(3))


def elastic_divergence(u: PolyVec, lam: Poly, mu: Poly) -> PolyVec:
    """div(C e[u]) computed directly from the stress matrix."""
    return pc.div_matrix(_stress_matrix(u, lam, mu))


def reduction_residuals(u: PolyVec, lam: Poly, mu: Poly) -> dict:
    """Exact residuals of the three div/curl reduction identities.

    Checks, as polynomial identities,
      div(C e[u])        = mu Lap u + (lam+mu) grad p + (grad lam) p + e[2u] grad mu
      div(div(C e[u]))   = (lam+2mu) Lap p + 2 grad mu . (grad p - curl w)
                           + (Lap lam) p + 2 grad(lam+mu) . grad p
                           + sum_ij e[2u]_ij d2_ij mu
      curl(div(C e[u]))  = mu Lap w + grad mu x (grad p - curl w)
                           + grad(lam+mu) x grad p + grad p x grad lam
                           + sum_j (dj mu * dj w + grad(dj mu) x (dj u + grad u_j))
    and returns each left-minus-right side.  All three are the zero
    polynomial whenever the inputs stay within the degree cap.
    """
    aug = AugmentedField.from_poly(u)
    p, w = aug.p, aug.w
    e2 = _sym_grad2(u)
    lhs1 = elastic_divergence(u, lam, mu)

    grad_p = pc.grad(p)
    grad_lam = pc.grad(lam)
    grad_mu = pc.grad(mu)
    rhs1 = (pc.laplacian_vec(u) * mu + grad_p * (lam + mu) + grad_lam * p
            + pc.mat_vec(e2, grad_mu))
    res_vector = lhs1 - rhs1

    lhs2 = pc.div(lhs1)
    curl_w = pc.curl(w)
    hess_term = Poly({}, dim=3)
    for i in range(3):
        for j in range(3):
            hess_term = hess_term + e2[i][j] * mu.diff(i).diff(j)
    rhs2 = (pc.laplacian(p) * (lam + 2 * mu)
            + 2 * grad_mu.dot(grad_p - curl_w)
            + pc.laplacian(lam) * p
            + 2 * pc.grad(lam + mu).dot(grad_p)
            + hess_term)
    res_divergence = lhs2 - rhs2

    lhs3 = pc.curl(lhs1)
    rhs3 = (pc.laplacian_vec(w) * mu
            + pc.cross(grad_mu, grad_p - curl_w)
            + pc.cross(pc.grad(lam + mu), grad_p)
            + pc.cross(grad_p, grad_lam))
    for j in range(3):
        dj_w = PolyVec(tuple(w[i].diff(j) for i in range(3)))
        dj_u = PolyVec(tuple(u[i].diff(j) for i in range(3)))
        rhs3 = rhs3 + dj_w * mu.diff(j) \
            + pc.cross(pc.grad(mu.diff(j)), dj_u + pc.grad(u[j]))
    res_curl = lhs3 - rhs3

    return {"vector": res_vector, "divergence": res_divergence, "curl": res_curl}


def weighted_gradient_residuals(u: PolyVec, a: Poly) -> dict:
    """Exact residuals of the two multiplier identities.

    For a scalar field a, the second-derivative content of
    div(e[2u] grad a) is (2 grad p - curl w) . grad a and that of
    curl(e[2u] grad a) is (grad w) grad a; the latter is verified via
    the complete decomposition
      curl(e[2u] grad a) = (grad w) grad a
                           + sum_j grad(dj a) x (dj u + grad u_j),
    whose extra sum carries first derivatives of u only.
    """
    aug = AugmentedField.from_poly(u)
    p, w = aug.p, aug.w
    e2 = _sym_grad2(u)
    grad_a = pc.grad(a)
    grad_p = pc.grad(p)

    div_e2 = pc.div_matrix(e2)
    first = div_e2.dot(grad_a) - (pc.laplacian_vec(u) + grad_p).dot(grad_a)
    second = div_e2.dot(grad_a) - (2 * grad_p - pc.curl(w)).dot(grad_a)

    e2_grad_a = pc.mat_vec(e2, grad_a)
    lhs = pc.curl(e2_grad_a)
    grad_w_grad_a = PolyVec(tuple(
        sum((w[i].diff(j) * a.diff(j) for j in range(1, 3)),
            w[i].diff(0) * a.diff(0))
        for i in range(3)))
    rhs = grad_w_grad_a
    for j in range(3):
        dj_u = PolyVec(tuple(u[i].diff(j) for i in range(3)))
        rhs = rhs + pc.cross(pc.grad(a.diff(j)), dj_u + pc.grad(u[j]))
    return {"div_route": first, "div_route_curlfree": second,
            "curl_route": lhs - rhs}


def weighted_operator(u: PolyVec, a: Poly, lam: Poly, mu: Poly):
    """[div(a C e[u]); div(div(a C e[u])); curl(div(a C e[u]))] (7 rows)."""
    S = _stress_matrix(u, lam, mu)
    aS = tuple(tuple(a * S[i][j] for j in range(3)) for i in range(3))
    head = pc.div_matrix(aS)
    return tuple(head.components) + (pc.div(head),) + tuple(pc.curl(head).components)


def principal_part(u: PolyVec, a: Poly, lam: Poly, mu: Poly):
    """a * diag(mu, mu, mu, lam+2mu, mu, mu, mu) applied to Lap (u, p, w)."""
    aug = AugmentedField.from_poly(u)
    lap_u = pc.laplacian_vec(u)
    lap_p = pc.laplacian(aug.p)
    lap_w = pc.laplacian_vec(aug.w)
    am = a * mu
    return tuple(am * lap_u[i] for i in range(3)) \
        + (a * (lam + 2 * mu) * lap_p,) \
        + tuple(am * lap_w[i] for i in range(3))


def _jet_functionals(u: PolyVec, point) -> list:
    """The 28 first-order jet values of (u, p, w) at a point."""
    aug = AugmentedField.from_poly(u)
    vals = []
    for i in range(3):
        vals.append(u[i].evaluate(point))
    for i in range(3):
        for j in range(3):
            vals.append(u[i].diff(j).evaluate(point))
    vals.append(aug.p.evaluate(point))
    for j in range(3):
        vals.append(aug.p.diff(j).evaluate(point))
    for i in range(3):
        vals.append(aug.w[i].evaluate(point))
    for i in range(3):
        for j in range(3):
            vals.append(aug.w[i].diff(j).evaluate(point))
    return vals


def exact_nullspace(rows: list[list[Fraction]], n_cols: int) -> list[list[Fraction]]:
    """Nullspace basis of a rational matrix by fraction-free elimination."""
    mat = [list(map(Fraction, row)) for row in rows]
    m = len(mat)
    pivots = []
    r = 0
    for c in range(n_cols):
        pivot = next((i for i in range(r, m) if mat[i][c] != 0), None)
        if pivot is None:
            continue
        mat[r], mat[pivot] = mat[pivot], mat[r]
        inv = Fraction(1, 1) / mat[r][c]
        mat[r] = [x * inv for x in mat[r]]
        for i in range(m):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [x - f * y for x, y in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    free = [c for c in range(n_cols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * n_cols
        vec[fc] = Fraction(1)
        for row_i, pc_ in enumerate(pivots):
            vec[pc_] = -mat[row_i][fc]
        basis.append(vec)
    return basis


def _cubic_basis():
    """Vector monomial basis of all cubic fields in three variables."""
    monos = [e for e in pc._exponents_up_to(3, 3)]
    basis = []
    for comp in range(3):
        for expo in monos:
            comps = [Poly({}, dim=3)] * 3
            comps[comp] = Poly({expo: Fraction(1)}, dim=3)
            basis.append(PolyVec(tuple(comps)))
    return basis


def first_order_span_check(a: Poly, lam: Poly, mu: Poly, point,
                           principal=principal_part) -> dict:
    """Verify the remainder of the weighted reduction is first order.

    Builds every cubic field whose full first-order (u, p, w)-jet
    vanishes at `point` and evaluates
    [div; div div; curl div](a C e[u]) - a D Lap(u, p, w) there: if the
    remainder is a first-order operator in the augmented field, all
    seven components must vanish exactly on that kernel.  Exact
    rational arithmetic throughout, so zero means zero.
    """
    basis = _cubic_basis()
    rows = [[] for _ in range(28)]
    for b in basis:
        jet = _jet_functionals(b, point)
        for k in range(28):
            rows[k].append(Fraction(jet[k]))
    kernel = exact_nullspace(rows, len(basis))

    worst = Fraction(0)
    checked = 0
    for coeffs in kernel:
        comps = [Poly({}, dim=3), Poly({}, dim=3), Poly({}, dim=3)]
        for c, b in zip(coeffs, basis):
            if c != 0:
                for i in range(3):
                    comps[i] = comps[i] + b[i] * c
        u = PolyVec(tuple(comps))
        full = weighted_operator(u, a, lam, mu)
        prin = principal(u, a, lam, mu)
        for x_full, x_prin in zip(full, prin):
            val = (x_full - x_prin).evaluate(point)
            worst = max(worst, abs(Fraction(val)))
        checked += 1
    return {"kernel_dim": checked, "max_residual": worst,
            "passed": worst == 0}


# -- Carleman weight and integral probes ------------------------------------


@dataclass(frozen=True)
class CarlemanConfig:
    """Weight center/strength plus the memory-kernel bound constants.

    `r0` must satisfy 0 < r0 < 1/e; `b0`, `b1` bound the convolution
    kernels as |d(t)| <= b0 exp(b1 t), giving the admissible horizon
    T0 = min(1 / (4 e b0), ln 2 / b1).
    """

    x0: tuple[float, float, float]
    beta: float
    r0: float
    b0: float = 1.0
    b1: float = 1.0

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if not 0.0 < self.r0 < float(np.exp(-1.0)):
            raise ValueError("r0 must lie in (0, 1/e)")
        if self.b0 <= 0 or self.b1 <= 0:
            raise ValueError("b0 and b1 must be positive")

    @property
    def horizon(self) -> float:
        """T0 = min(1/(4 e b0), ln 2 / b1)."""
        return min(1.0 / (4.0 * np.e * self.b0), np.log(2.0) / self.b1)


def carleman_weight(x, cfg: CarlemanConfig) -> np.ndarray:
    """h_beta(x) = exp(beta/2 (log|x - x0|)^2); singular at the center."""
    x = np.asarray(x, dtype=float)
    r = np.sqrt(np.sum((x - np.asarray(cfg.x0)) ** 2, axis=-1))
    if np.any(r == 0.0):
        raise ValueError("weight is singular at the center point")
    return np.exp(0.5 * cfg.beta * np.log(r) ** 2)


def log_weight_sq(r, beta: float) -> np.ndarray:
    """log h_beta^2 at radius r: beta (log r)^2 (log-domain evaluation)."""
    return beta * np.log(np.asarray(r, dtype=float)) ** 2


@dataclass(frozen=True)
class RadialBump:
    """Compactly supported C^3 bump ((1 - |x-c|^2/s^2)_+)^4."""

    center: tuple[float, float, float]
    radius: float

    def _q(self, x):
        rel = np.asarray(x, dtype=float) - np.asarray(self.center)
        return 1.0 - np.sum(rel ** 2, axis=-1) / self.radius ** 2, rel

    def value(self, x):
        q, _ = self._q(x)
        return np.where(q > 0.0, np.maximum(q, 0.0) ** 4, 0.0)

    def grad_sq(self, x):
        """|grad z|^2 = 64 q^6 |x-c|^2 / s^4 on the support."""
        q, rel = self._q(x)
        qp = np.maximum(q, 0.0)
        return 64.0 * qp ** 6 * np.sum(rel ** 2, axis=-1) / self.radius ** 4

    def laplacian(self, x):
        """Lap z = 48 q^2 |x-c|^2/s^4 - 24 q^3/s^2 on the support."""
        q, rel = self._q(x)
        qp = np.maximum(q, 0.0)
        s2 = self.radius ** 2
        return (48.0 * qp ** 2 * np.sum(rel ** 2, axis=-1) / s2 ** 2
                - 24.0 * qp ** 3 / s2)


def radial_quadrature(x0, r_inner: float, r_outer: float,
                      n_r: int = 96, n_theta: int = 48, n_phi: int = 96):
    """Midpoint product rule in spherical coordinates about x0.

    Radial nodes are uniform in log r, concentrating points toward the
    center where the weight varies fastest.  Returns (points, weights,
    radii) with points of shape (N, 3).
    """
    if not 0.0 < r_inner < r_outer:
        raise ValueError("need 0 < r_inner < r_outer")
    lo, hi = np.log(r_inner), np.log(r_outer)
    edges = np.linspace(lo, hi, n_r + 1)
    r_mid = np.exp(0.5 * (edges[1:] + edges[:-1]))
    dr = np.diff(np.exp(edges))
    th_edges = np.linspace(0.0, np.pi, n_theta + 1)
    th = 0.5 * (th_edges[1:] + th_edges[:-1])
    dth = np.diff(th_edges)
    ph_edges = np.linspace(0.0, 2.0 * np.pi, n_phi + 1)
    ph = 0.5 * (ph_edges[1:] + ph_edges[:-1])
    dph = np.diff(ph_edges)

    R, T, P = np.meshgrid(r_mid, th, ph, indexing="ij")
    WR, WT, WP = np.meshgrid(dr, dth, dph, indexing="ij")
    x = np.stack([
        R * np.sin(T) * np.cos(P),
        R * np.sin(T) * np.sin(P),
        R * np.cos(T),
    ], axis=-1) + np.asarray(x0)
    w = (R ** 2 * np.sin(T) * WR * WT * WP).ravel()
    return x.reshape(-1, 3), w, R.ravel()


def weighted_ratio(bump: RadialBump, x0, beta: float, quad=None) -> float:
    """beta Int h^2 (|grad z|^2 + z^2) / Int h^2 |Lap z|^2, log-domain."""
    if quad is None:
        dist = np.linalg.norm(np.asarray(bump.center) - np.asarray(x0))
        quad = radial_quadrature(x0, max(dist - bump.radius, 1e-6),
                                 dist + bump.radius)
    pts, w, r = quad
    logw2 = log_weight_sq(r, beta)
    num_field = bump.grad_sq(pts) + bump.value(pts) ** 2
    den_field = bump.laplacian(pts) ** 2
    log_num = _log_integral(logw2, num_field, w)
    log_den = _log_integral(logw2, den_field, w)
    return float(np.exp(np.log(beta) + log_num - log_den))


def _log_integral(log_weight, field, quad_w):
    mask = field > 0.0
    if not np.any(mask):
        return -np.inf
    return logsumexp(log_weight[mask] + np.log(field[mask])
                     + np.log(quad_w[mask]))


def probe_weight_ratio(cfg: CarlemanConfig, bumps, betas) -> list[dict]:
    """(f-ratio table) rows: bump index, beta, ratio; one quadrature per bump."""
    rows = []
    for i, bump in enumerate(bumps):
        dist = np.linalg.norm(np.asarray(bump.center) - np.asarray(cfg.x0))
        if dist - bump.radius <= 0:
            raise ValueError(f"bump {i} support touches the weight center")
        if dist + bump.radius >= cfg.r0:
            raise ValueError(f"bump {i} support leaves the ball of radius r0")
        quad = radial_quadrature(cfg.x0, dist - bump.radius, dist + bump.radius)
        for beta in betas:
            rows.append({"bump": i, "beta": float(beta),
                         "ratio": weighted_ratio(bump, cfg.x0, beta, quad)})
    return rows


def empirical_ratio_bound(rows) -> float:
    """Largest observed ratio: an empirical stand-in for the estimate's
    constant, reported but never asserted to be the analytic one."""
    return max(r["ratio"] for r in rows)


KERNEL_FAMILIES = {
    "constant": lambda t, b0, b1: np.full_like(np.asarray(t, dtype=float), b0),
    "extremal": lambda t, b0, b1: b0 * np.exp(b1 * np.asarray(t, dtype=float)),
    "negative": lambda t, b0, b1: -b0 * np.exp(b1 * np.asarray(t, dtype=float)),
    "oscillating": lambda t, b0, b1: (b0 * np.cos(7.0 * np.asarray(t, dtype=float))
                                      * np.exp(b1 * np.asarray(t, dtype=float))),
}


def probe_kernel_inequalities(cfg: CarlemanConfig, parts, t_samples=None,
                              kernels=("constant", "extremal", "negative",
                                       "oscillating"),
                              n_time: int = 256) -> list[dict]:
    """Probe the two convolution-kernel inequalities on separable fields.

    `parts` is a list of (RadialBump, time_profile) pairs defining
    z(x, s) = sum_k z_k(x) q_k(s).  For each synthetic kernel with
    |d(t)| <= b0 exp(b1 t) and each sample time t <= T0 the probe
    evaluates both sides of

      Int h^2 |Int_0^s d Lap z|^2            <= b0^2 t^2 e^{2 b1 t} Int h^2 |Lap z|^2
      1/2 Int h^2 |Lap z|^2                  <= Int h^2 |Lap z - Int_0^s d Lap z|^2

    (space-time integrals over (0, t) x Omega).  The weighted spatial
    Gram matrix of the Lap z_k factors reduces everything to small time
    quadratures; a common positive rescaling of the weight keeps the
    numbers finite for any beta without changing either inequality.
    """
    if t_samples is None:
        t_samples = np.linspace(0.2, 1.0, 5) * cfg.horizon
    bumps = [b for b, _ in parts]
    profiles = [q for _, q in parts]
    gram = _weighted_gram(cfg, bumps)

    t_grid = np.linspace(0.0, float(np.max(t_samples)), n_time + 1)
    q_vals = np.stack([np.asarray(q(t_grid), dtype=float) for q in profiles])

    rows = []
    for name in kernels:
        d_fn = KERNEL_FAMILIES[name]
        i_vals = _convolutions(d_fn, q_vals, t_grid, cfg.b0, cfg.b1)
        for t in np.atleast_1d(t_samples):
            if t > cfg.horizon + 1e-12:
                raise ValueError("sample time exceeds the admissible horizon")
            sel = t_grid <= t + 1e-15
            tg = t_grid[sel]
            qq = _time_gram(q_vals[:, sel], q_vals[:, sel], tg, gram)
            ii = _time_gram(i_vals[:, sel], i_vals[:, sel], tg, gram)
            rr = q_vals[:, sel] - i_vals[:, sel]
            dd = _time_gram(rr, rr, tg, gram)
            bound = cfg.b0 ** 2 * t ** 2 * np.exp(2.0 * cfg.b1 * t) * qq
            rows.append({
                "kernel": name, "t": float(t),
                "convolution_lhs": ii, "convolution_rhs": bound,
                "convolution_ok": bool(ii <= bound * (1 + 1e-9)),
                "coercivity_lhs": 0.5 * qq, "coercivity_rhs": dd,
                "coercivity_ok": bool(0.5 * qq <= dd * (1 + 1e-9)),
            })
    return rows


def _weighted_gram(cfg: CarlemanConfig, bumps) -> np.ndarray:
    """G_jk = Int h^2 Lap z_j Lap z_k dx under a common weight rescaling."""
    inner = min(np.linalg.norm(np.asarray(b.center) - np.asarray(cfg.x0))
                - b.radius for b in bumps)
    outer = max(np.linalg.norm(np.asarray(b.center) - np.asarray(cfg.x0))
                + b.radius for b in bumps)
    if inner <= 0 or outer >= cfg.r0:
        raise ValueError("bump supports must stay inside the punctured ball")
    pts, w, r = radial_quadrature(cfg.x0, inner, outer)
    logw2 = log_weight_sq(r, cfg.beta)
    scale = np.exp(logw2 - np.max(logw2))
    laps = [b.laplacian(pts) for b in bumps]
    k = len(bumps)
    gram = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            gram[i, j] = gram[j, i] = np.sum(w * scale * laps[i] * laps[j])
    return gram


def _convolutions(d_fn, q_vals, t_grid, b0, b1) -> np.ndarray:
    """I_k(s) = Int_0^s d(s - tau) q_k(tau) dtau by trapezoid, per profile."""
    n = len(t_grid)
    out = np.zeros_like(q_vals)
    for si in range(1, n):
        tau = t_grid[: si + 1]
        dvals = d_fn(t_grid[si] - tau, b0, b1)
        out[:, si] = np.trapezoid(dvals[None, :] * q_vals[:, : si + 1],
                                  x=tau, axis=1)
    return out


def _time_gram(a_vals, b_vals, t_grid, gram) -> float:
    """Int_0^t sum_jk G_jk a_j(s) b_k(s) ds by trapezoid."""
    mix = np.einsum("jk,js,ks->s", gram, a_vals, b_vals)
    return float(np.trapezoid(mix, x=t_grid))
