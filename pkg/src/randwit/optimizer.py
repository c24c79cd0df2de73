"""Worst-case separable witness bounds by alternating convex search.

The bilinear problem min over (product state, infidelity-constrained
measurements) is nonconvex overall; each restart alternates exact convex
substeps and the best local minimum over restarts is reported together with
the restart spread as the confidence signal.
"""

from __future__ import annotations

import math
import string
import warnings
from dataclasses import dataclass

import numpy as np

from .linalg import PAULI, check_hermitian, dagger, identity, min_eig_vector
from .measurements import Povm, TargetMeasurement
from .witnesses import (
    MeasurementAssignment,
    ProductTermWitness,
    assemble_observable,
    expectation,
)

# Residual targets for the alternating feasibility projection; well inside the
# POVM validation tolerances so accepted iterates always validate.
_PROJECTION_TOL = 1e-11
_MAX_PROJECTION_CYCLES = 10**4
# Slack allowed when asserting the objective never increases across a step.
_MONOTONE_SLACK = 1e-9


@dataclass(frozen=True)
class SearchConfig:
    """Knobs of the alternating search; defaults favor reproducibility."""

    restarts: int = 50
    max_outer_iters: int = 500
    convergence_tol: float = 1e-9
    seed: int = 0
    inner_step_tol: float = 1e-7

    def __post_init__(self):
        if self.restarts < 1 or self.max_outer_iters < 1:
            raise ValueError("restarts and max_outer_iters must be positive")
        if self.convergence_tol <= 0 or self.inner_step_tol <= 0:
            raise ValueError("tolerances must be positive")


class ProductState:
    """Pure product state, one unit vector per party."""

    __slots__ = ("vectors",)

    def __init__(self, vectors):
        vecs = tuple(np.asarray(v, dtype=complex).copy() for v in vectors)
        for v in vecs:
            if v.ndim != 1:
                raise ValueError("party states must be vectors")
            if abs(np.linalg.norm(v) - 1.0) > 1e-10:
                raise ValueError("party states must be unit vectors")
            v.setflags(write=False)
        self.vectors = vecs

    @property
    def party_dims(self) -> tuple[int, ...]:
        return tuple(len(v) for v in self.vectors)

    def density(self) -> np.ndarray:
        rho = np.array([[1.0 + 0.0j]])
        for v in self.vectors:
            rho = np.kron(rho, np.outer(v, v.conj()))
        return rho

    def bloch(self, party: int) -> tuple[float, float, float]:
        v = self.vectors[party]
        if len(v) != 2:
            raise ValueError("Bloch components are defined for qubit parties")
        return tuple(float(np.real(np.vdot(v, s @ v))) for s in PAULI)


@dataclass
class BoundEstimate:
    value: float
    argmin_state: ProductState
    argmin_measurements: MeasurementAssignment
    converged: bool
    iterations: int
    restart_spread: float


def _haar_vector(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def _effective_operator(op_tensor: np.ndarray, vectors, party: int) -> np.ndarray:
    """Contract every party except one with its state vector."""
    n = len(vectors)
    rows, cols = string.ascii_lowercase[:n], string.ascii_lowercase[n:2 * n]
    subs = [rows + cols]
    operands = [op_tensor]
    for m, v in enumerate(vectors):
        if m == party:
            continue
        subs.append(rows[m])
        operands.append(v.conj())
        subs.append(cols[m])
        operands.append(v)
    spec = ",".join(subs) + "->" + rows[party] + cols[party]
    return np.einsum(spec, *operands)


def _seesaw_state(op, dims, vectors, max_sweeps, tol):
    """Cycle parties, replacing each vector by the minimal eigenvector of its
    effective operator. Monotone nonincreasing; warm-startable."""
    op_tensor = op.reshape(*dims, *dims)
    heff0 = _effective_operator(op_tensor, vectors, 0)
    obj = float(np.real(np.vdot(vectors[0], heff0 @ vectors[0])))
    for _ in range(max_sweeps):
        value = obj
        for n in range(len(dims)):
            heff = _effective_operator(op_tensor, vectors, n)
            value, vec = min_eig_vector(heff)
            vectors[n] = vec
        if obj - value < tol:
            return value, vectors
        obj = value
    return obj, vectors


def min_product_expectation(op, dims, cfg: SearchConfig) -> tuple[float, ProductState]:
    """Minimize <psi_1 ... psi_N| op |psi_1 ... psi_N> over product states.

    See-saw from Haar-random restarts; ties between restarts resolve to the
    lowest restart index.
    """
    op = check_hermitian(op)
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims)) != op.shape[0]:
        raise ValueError(f"party dimensions {dims} do not multiply to {op.shape[0]}")
    best_value, best_vectors = np.inf, None
    for k in range(cfg.restarts):
        rng = np.random.default_rng(cfg.seed + k)
        vectors = [_haar_vector(rng, d) for d in dims]
        value, vectors = _seesaw_state(op, dims, vectors, cfg.max_outer_iters,
                                       cfg.convergence_tol)
        if value < best_value:
            best_value, best_vectors = value, vectors
    return float(best_value), ProductState(best_vectors)


# -- internal assignment representation: per party, {target: (d, d, d) stack} --

def _init_stacks(w: ProductTermWitness, eps: float):
    out = []
    for n in range(w.n_parties):
        table = {}
        for t in w.party_measurements(n):
            d = t.dim
            eye = identity(d)
            table[t] = np.stack(
                [(1.0 - eps) * t.projector(i) + eps * eye / d for i in range(d)]
            )
        out.append(table)
    return out


def _stacks_from_assignment(w: ProductTermWitness, a: MeasurementAssignment):
    out = []
    for n in range(w.n_parties):
        out.append({t: a.povm_for(n, t).as_stack() for t in w.party_measurements(n)})
    return out


def _party_factors(w, vectors, stacks):
    out = []
    for n in range(w.n_parties):
        psi = vectors[n]
        out.append({
            t: np.real(np.einsum("a,iab,b->i", psi.conj(), stack, psi))
            for t, stack in stacks[n].items()
        })
    return out


def _objective(w, factors) -> float:
    total = 0.0
    for weight, refs in w.terms:
        prod = weight
        for n, ref in enumerate(refs):
            prod *= factors[n][ref.measurement][ref.outcome]
        total += prod
    return total


def _linear_coeffs(w, factors, party, target) -> np.ndarray:
    """Coefficients g with objective = sum_i g_i <psi|M_i|psi> + const for one
    (party, measurement) block."""
    g = np.zeros(target.dim)
    for weight, refs in w.terms:
        ref = refs[party]
        if ref.measurement is not target:
            continue
        prod = weight
        for m, r in enumerate(refs):
            if m != party:
                prod *= factors[m][r.measurement][r.outcome]
        g[ref.outcome] += prod
    return g


def _assemble_from_stacks(w, stacks) -> np.ndarray:
    dim = int(np.prod(w.party_dims))
    total = np.zeros((dim, dim), dtype=complex)
    for weight, refs in w.terms:
        mat = stacks[0][refs[0].measurement][refs[0].outcome]
        for n in range(1, w.n_parties):
            mat = np.kron(mat, stacks[n][refs[n].measurement][refs[n].outcome])
        total += weight * mat
    return total


def _tuned_solve(g: np.ndarray, target: TargetMeasurement, psi: np.ndarray,
                 eps: float) -> np.ndarray:
    """Exact solution of the diagonal-POVM linear program.

    Variables a[i, k] in [0, 1] with column sums 1 and on-target mass
    sum_k a[k, k] >= d (1 - eps); the objective decouples into a fractional
    knapsack over how much on-target mass each basis vector gives up.
    """
    d = target.dim
    v = target.basis
    q = np.abs(dagger(v) @ psi) ** 2
    order = np.argsort(g, kind="stable")
    i0, i1 = int(order[0]), int(order[1])
    best_off = np.array([i0 if k != i0 else i1 for k in range(d)])
    savings = q * (g - g[best_off])
    t = np.zeros(d)
    budget = d * eps
    for k in np.argsort(-savings, kind="stable"):
        if savings[k] <= 0.0 or budget <= 0.0:
            break
        take = min(1.0, budget)
        t[k] = take
        budget -= take
    a = np.zeros((d, d))
    a[np.arange(d), np.arange(d)] = 1.0 - t
    for k in range(d):
        if t[k] > 0.0:
            a[best_off[k], k] += t[k]
    return np.stack([(v * a[i]) @ dagger(v) for i in range(d)])


def _psd_project_stack(ms: np.ndarray) -> np.ndarray:
    if ms.shape[-1] == 2:
        # closed-form spectral clip, avoiding per-element LAPACK calls
        a = ms[..., 0, 0].real
        c = ms[..., 1, 1].real
        b = (ms[..., 0, 1] + ms[..., 1, 0].conj()) / 2.0
        mean = (a + c) / 2.0
        r = np.sqrt(((a - c) / 2.0) ** 2 + np.abs(b) ** 2)
        lp, lm = mean + r, mean - r
        safe = r > 1e-14 * np.maximum(1.0, np.abs(mean))
        rs = np.where(safe, r, 1.0)
        clp, clm = np.clip(lp, 0.0, None), np.clip(lm, 0.0, None)
        # H+ = clip(l+) (H - l- I)/(2r) + clip(l-) (l+ I - H)/(2r)
        f_h = (clp - clm) / (2.0 * rs)
        f_i = (clp * (-lm) + clm * lp) / (2.0 * rs)
        herm = np.empty_like(ms)
        herm[..., 0, 0] = a
        herm[..., 1, 1] = c
        herm[..., 0, 1] = b
        herm[..., 1, 0] = b.conj()
        out = f_h[..., None, None] * herm
        out[..., 0, 0] += f_i
        out[..., 1, 1] += f_i
        scalar = np.clip(mean, 0.0, None)
        eye = np.eye(2)
        out = np.where(safe[..., None, None], out, scalar[..., None, None] * eye)
        return out
    values, vectors = np.linalg.eigh(ms)
    values = np.clip(values, 0.0, None)
    return np.einsum("...ik,...k,...jk->...ij", vectors, values, vectors.conj())


def _snap_feasible(ms, projectors, bound):
    """Feasible stack near a feasibility-violating one (general d).

    Cycles exact repairs: affine completeness, the infidelity half-space,
    eigenvalue clipping, and a congruence renormalization
    M_i -> S^{-1/2} M_i S^{-1/2} with S the element sum, which restores
    completeness without leaving the PSD cone. Violations contract by a
    dimension factor per round, independent of how tangent the sets are.
    """
    n = ms.shape[0]
    eye = identity(ms.shape[-1])
    m = ms
    for _ in range(60):
        m = m - (m.sum(axis=0) - eye)[None] / n
        c = float(np.real(np.einsum("iab,iba->", projectors, m)))
        if c < bound:
            m = m + (bound - c) / (n - 1) * (projectors - eye[None] / n)
        m = _psd_project_stack(m)
        s = m.sum(axis=0)
        w, v = np.linalg.eigh((s + dagger(s)) / 2)
        inv_sqrt = (v / np.sqrt(np.clip(w, 1e-12, None))) @ dagger(v)
        m = inv_sqrt @ m @ inv_sqrt
        c = float(np.real(np.einsum("iab,iba->", projectors, m)))
        if c > bound - 1e-14:
            return m
    return m


def _project_feasible(ms, projectors, bound, snap_after=64):
    """Alternate PSD clipping with the closed-form projection onto
    {completeness} intersected with the infidelity half-space; snap onto the
    feasible set once the alternation budget is spent."""
    n = ms.shape[0]
    eye = identity(ms.shape[-1])
    m = ms
    for cycle in range(_MAX_PROJECTION_CYCLES):
        if cycle == snap_after:
            return _snap_feasible(m, projectors, bound), True
        m = m - (m.sum(axis=0) - eye)[None] / n
        c = float(np.real(np.einsum("iab,iba->", projectors, m)))
        if c < bound:
            eta = (bound - c) / (n - 1)
            m = m + eta * (projectors - eye[None] / n)
        m = _psd_project_stack(m)
        resid = np.linalg.norm(m.sum(axis=0) - eye)
        c = float(np.real(np.einsum("iab,iba->", projectors, m)))
        if resid < _PROJECTION_TOL and c > bound - _PROJECTION_TOL:
            return m, True
    return m, False


def _soc_project(p0, px, py, pz):
    """Euclidean projection onto the cone x0 >= ||(xx, xy, xz)||."""
    r = math.sqrt(px * px + py * py + pz * pz)
    if p0 >= r:
        return (p0, px, py, pz)
    if r <= -p0:
        return (0.0, 0.0, 0.0, 0.0)
    s = (p0 + r) / 2.0
    scale = s / r
    return (s, px * scale, py * scale, pz * scale)


def _cone_plane_candidates(p0, px, py, pz, z0):
    """Stationary points on {x0 = ||x||} cut by the plane x_z = z0."""
    q = math.sqrt(px * px + py * py)
    if q < 1e-14:
        return [(abs(z0), 0.0, 0.0, z0)]
    # transverse components stay parallel to (px, py); the radius x0 solves
    # (x0^2 - z0^2) (2 x0 - p0)^2 = q^2 x0^2
    poly = np.array([
        4.0,
        -4.0 * p0,
        p0 * p0 - 4.0 * z0 * z0 - q * q,
        4.0 * p0 * z0 * z0,
        -(p0 * p0) * (z0 * z0),
    ])
    out = []
    for root in np.roots(poly):
        if abs(root.imag) > 1e-9:
            continue
        u = float(root.real)
        if u < abs(z0) - 1e-9 or 2.0 * u - p0 <= 1e-14:
            continue
        k = u / (2.0 * u - p0)
        out.append((u, k * px, k * py, z0))
    return out


def _exact_project_qubit(coords, bound):
    """Exact Euclidean projection onto {PSD pair, completeness, infidelity}.

    After eliminating completeness the feasible set in the Bloch coordinates
    x of the first element is {||x|| <= x0} ∩ {||x|| <= 1 - x0} ∩
    {x_z >= z0}; the projection is the closest feasible KKT candidate.
    """
    a0, ax, ay, az, b0, bx, by, bz = coords
    s0 = (a0 + b0 - 1.0) / 2.0
    sx, sy, sz = (ax + bx) / 2.0, (ay + by) / 2.0, (az + bz) / 2.0
    p0, px, py, pz = a0 - s0, ax - sx, ay - sy, az - sz
    z0 = (bound - 1.0) / 2.0

    candidates = [(p0, px, py, pz), (p0, px, py, z0), _soc_project(p0, px, py, pz)]
    u0, ux, uy, uz = _soc_project(1.0 - p0, px, py, pz)
    candidates.append((1.0 - u0, ux, uy, uz))
    candidates.extend(_cone_plane_candidates(p0, px, py, pz, z0))
    candidates.extend(
        (1.0 - c0, cx, cy, cz)
        for c0, cx, cy, cz in _cone_plane_candidates(1.0 - p0, px, py, pz, z0)
    )
    r3 = math.sqrt(px * px + py * py + pz * pz)
    if r3 > 1e-14:
        scale = 0.5 / r3
        candidates.append((0.5, px * scale, py * scale, pz * scale))
    else:
        candidates.append((0.5, 0.0, 0.0, 0.5))
    rho = math.sqrt(max(0.0, 0.25 - z0 * z0))
    q = math.sqrt(px * px + py * py)
    if q > 1e-14:
        candidates.append((0.5, rho * px / q, rho * py / q, z0))
    else:
        candidates.append((0.5, rho, 0.0, z0))

    ftol = 1e-11
    best, best_dist = None, np.inf
    for x0, xx, xy, xz in candidates:
        r = math.sqrt(xx * xx + xy * xy + xz * xz)
        if r > x0 + ftol or r > 1.0 - x0 + ftol or xz < z0 - ftol:
            continue
        dist = (x0 - p0) ** 2 + (xx - px) ** 2 + (xy - py) ** 2 + (xz - pz) ** 2
        if dist < best_dist:
            best, best_dist = (x0, xx, xy, xz), dist
    x0, xx, xy, xz = best
    # repair the ftol-level slack exactly: the cone curvature would otherwise
    # leak sqrt(ftol) into the objective
    xz = min(max(xz, z0), 0.5)
    x0 = min(max(x0, abs(xz)), 1.0 - abs(xz))
    cap = min(x0, 1.0 - x0) ** 2 - xz * xz
    perp2 = xx * xx + xy * xy
    if perp2 > cap:
        scale = math.sqrt(max(cap, 0.0) / perp2)
        xx *= scale
        xy *= scale
    return (x0, xx, xy, xz, 1.0 - x0, -xx, -xy, -xz)


def _project_feasible_qubit(coords, bound, max_cycles=_MAX_PROJECTION_CYCLES,
                            pocs_cycles=24):
    """Qubit POCS in Bloch coordinates (t0, tx, ty, tz) per element.

    Same alternation as the matrix version: {completeness + infidelity
    half-space} then the PSD cone t0 >= ||t||; plain floats keep the 2x2 case
    out of numpy overhead. Near tangent corners the alternation rate
    degrades to 1 - O(eps), so after a short alternation budget the point is
    projected exactly via the reduced KKT system.
    """
    original = tuple(float(x) for x in coords)
    a0, ax, ay, az, b0, bx, by, bz = original
    # cone curvature turns any feasibility slack delta into a sqrt(delta)
    # objective leak, so success demands machine-exact feasibility; corner
    # cases fall through to the exact reduced projection instead
    tol2 = 1e-28
    for cycle in range(max_cycles):
        if cycle == pocs_cycles:
            return _exact_project_qubit(original, bound), True
        # completeness: sum of elements equals the identity
        s0 = (a0 + b0 - 1.0) / 2.0
        sx, sy, sz = (ax + bx) / 2.0, (ay + by) / 2.0, (az + bz) / 2.0
        a0 -= s0
        ax -= sx
        ay -= sy
        az -= sz
        b0 -= s0
        bx -= sx
        by -= sy
        bz -= sz
        # infidelity half-space: <0|M0|0> + <1|M1|1> >= bound
        c = a0 + az + b0 - bz
        if c < bound:
            eta = (bound - c) / 2.0
            az += eta
            bz -= eta
        # PSD cone per element
        n = math.sqrt(ax * ax + ay * ay + az * az)
        if a0 < n:
            if a0 + n <= 0.0:
                a0 = ax = ay = az = 0.0
            else:
                s = (a0 + n) / 2.0
                scale = s / n
                a0, ax, ay, az = s, ax * scale, ay * scale, az * scale
        n = math.sqrt(bx * bx + by * by + bz * bz)
        if b0 < n:
            if b0 + n <= 0.0:
                b0 = bx = by = bz = 0.0
            else:
                s = (b0 + n) / 2.0
                scale = s / n
                b0, bx, by, bz = s, bx * scale, by * scale, bz * scale
        r0 = a0 + b0 - 1.0
        rx, ry, rz = ax + bx, ay + by, az + bz
        resid2 = r0 * r0 + rx * rx + ry * ry + rz * rz
        c = a0 + az + b0 - bz
        if resid2 < tol2 and c > bound - 1e-15:
            return (a0, ax, ay, az, b0, bx, by, bz), True
    return (a0, ax, ay, az, b0, bx, by, bz), False


def _bloch_coords(mt: np.ndarray) -> tuple[float, float, float, float]:
    return (
        float(np.real(mt[0, 0] + mt[1, 1])) / 2.0,
        float(np.real(mt[0, 1])),
        float(-np.imag(mt[0, 1])),
        float(np.real(mt[0, 0] - mt[1, 1])) / 2.0,
    )


def _lab_solve_pgd_qubit(g, target, psi, eps, init, inner_tol):
    """Qubit specialization of the projected-gradient inner step; identical
    algorithm to the matrix path, run in Bloch coordinates."""
    v = target.basis
    psit = dagger(v) @ psi
    a, b = psit[0], psit[1]
    over = np.conj(a) * b
    rx, ry, rz = 2.0 * over.real, 2.0 * over.imag, float(abs(a) ** 2 - abs(b) ** 2)
    bound = 2.0 * (1.0 - eps)
    g0, g1 = float(g[0]), float(g[1])
    coords = _bloch_coords(dagger(v) @ init[0] @ v) + _bloch_coords(dagger(v) @ init[1] @ v)

    def objective(c):
        return (g0 * (c[0] + c[1] * rx + c[2] * ry + c[3] * rz)
                + g1 * (c[4] + c[5] * rx + c[6] * ry + c[7] * rz))

    f = objective(coords)
    projection_ok = True
    # the base step is 0.1; a successful step carries over (doubled, capped)
    # so capped projection failures are not re-paid every iteration
    working_step = 0.1
    for _ in range(10**4):
        step = working_step
        accepted = None
        for _ in range(21):
            h0, h1 = step * g0 / 2.0, step * g1 / 2.0
            trial = (
                coords[0] - h0, coords[1] - h0 * rx, coords[2] - h0 * ry,
                coords[3] - h0 * rz,
                coords[4] - h1, coords[5] - h1 * rx, coords[6] - h1 * ry,
                coords[7] - h1 * rz,
            )
            candidate, ok = _project_feasible_qubit(trial, bound)
            if not ok:
                projection_ok = False
                step /= 2.0
                continue
            fc = objective(candidate)
            if fc < f:
                accepted = (candidate, fc)
                break
            step /= 2.0
        if accepted is None:
            break
        working_step = min(0.1, 2.0 * step)
        coords, f_new = accepted
        improvement = f - f_new
        f = f_new
        if improvement < inner_tol:
            break
    a0, ax, ay, az, b0, bx, by, bz = coords
    m0 = np.array([[a0 + az, ax - 1j * ay], [ax + 1j * ay, a0 - az]])
    m1 = np.array([[b0 + bz, bx - 1j * by], [bx + 1j * by, b0 - bz]])
    stack = np.stack([v @ m0 @ dagger(v), v @ m1 @ dagger(v)])
    return stack, f, projection_ok


def _lab_solve_pgd(g, target, psi, eps, init, inner_tol):
    """Projected-gradient descent of the affine objective over POVMs with
    infidelity at most eps, warm-started at ``init``. The objective never
    increases; a failed feasibility projection keeps the previous iterate."""
    if target.dim == 2 and len(init) == 2:
        return _lab_solve_pgd_qubit(g, target, psi, eps, init, inner_tol)
    projectors = np.stack(target.projectors())
    bound = target.dim * (1.0 - eps)
    rho = np.outer(psi, psi.conj())
    grad = g[:, None, None] * rho[None]

    def objective(stack):
        return float(np.real(np.einsum("i,a,iab,b->", g, psi.conj(), stack, psi)))

    current = init.copy()
    f = objective(current)
    projection_ok = True
    working_step = 0.1
    for _ in range(10**4):
        step = working_step
        accepted = None
        for _ in range(21):
            candidate, ok = _project_feasible(current - step * grad, projectors, bound)
            if not ok:
                projection_ok = False
                step /= 2.0
                continue
            fc = objective(candidate)
            if fc < f:
                accepted = (candidate, fc)
                break
            step /= 2.0
        if accepted is None:
            break
        working_step = min(0.1, 2.0 * step)
        current, f_new = accepted
        improvement = f - f_new
        f = f_new
        if improvement < inner_tol:
            break
    return current, f, projection_ok


def tuned_measurement_step(
    w: ProductTermWitness,
    state: ProductState,
    party: int,
    eps: float,
    assignment: MeasurementAssignment,
) -> dict[TargetMeasurement, Povm]:
    """Optimal diagonal POVMs for one party with everything else fixed."""
    stacks = _stacks_from_assignment(w, assignment)
    factors = _party_factors(w, list(state.vectors), stacks)
    psi = state.vectors[party]
    out = {}
    for t in w.party_measurements(party):
        g = _linear_coeffs(w, factors, party, t)
        out[t] = Povm(list(_tuned_solve(g, t, psi, eps)))
    return out


def lab_measurement_step(
    w: ProductTermWitness,
    state: ProductState,
    party: int,
    eps: float,
    assignment: MeasurementAssignment,
    inner_step_tol: float = 1e-7,
) -> dict[TargetMeasurement, Povm]:
    """Projected-gradient minimization over one party's full POVMs."""
    stacks = _stacks_from_assignment(w, assignment)
    factors = _party_factors(w, list(state.vectors), stacks)
    psi = state.vectors[party]
    out = {}
    for t in w.party_measurements(party):
        g = _linear_coeffs(w, factors, party, t)
        stack, _, ok = _lab_solve_pgd(g, t, psi, eps, stacks[party][t], inner_step_tol)
        if not ok:
            warnings.warn(
                f"feasibility projection did not converge for party {party}, "
                f"measurement {t!r}; keeping the last feasible iterate",
                stacklevel=2,
            )
        out[t] = Povm(list(stack))
    return out


def worst_case_bound(
    w: ProductTermWitness, eps: float, mode: str, cfg: SearchConfig
) -> BoundEstimate:
    """Minimize the measured witness over product states and measurements.

    Alternates (a) per-party measurement steps (exact LP in tuned mode,
    projected gradient in lab mode) with (b) a warm-started product-state
    see-saw, restarted from Haar-random product states.
    """
    if mode not in ("lab", "tuned"):
        raise ValueError(f"mode must be 'lab' or 'tuned', got {mode!r}")
    eps = float(eps)
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"infidelity must lie in [0, 1), got {eps}")
    dims = w.party_dims
    results = []
    for k in range(cfg.restarts):
        rng = np.random.default_rng(cfg.seed + k)
        vectors = [_haar_vector(rng, d) for d in dims]
        stacks = _init_stacks(w, eps)
        factors = _party_factors(w, vectors, stacks)
        obj = _objective(w, factors)
        converged = False
        iterations = 0
        gain = np.inf
        for iterations in range(1, cfg.max_outer_iters + 1):
            prev = obj

            def measurement_sweep(inner_tol):
                for n in range(w.n_parties):
                    psi = vectors[n]
                    for t in w.party_measurements(n):
                        g = _linear_coeffs(w, factors, n, t)
                        if mode == "tuned":
                            stacks[n][t] = _tuned_solve(g, t, psi, eps)
                        else:
                            stacks[n][t], _, _ = _lab_solve_pgd(
                                g, t, psi, eps, stacks[n][t], inner_tol
                            )
                        factors[n][t] = np.real(
                            np.einsum("a,iab,b->i", psi.conj(), stacks[n][t], psi)
                        )

            # loose inner solves early on: block descent stays monotone, the
            # final tight pass below guards against false convergence
            measurement_sweep(max(cfg.inner_step_tol, 0.02 * gain))
            after_meas = _objective(w, factors)
            if after_meas > prev + _MONOTONE_SLACK:
                raise RuntimeError(
                    f"measurement step increased the objective: {prev} -> {after_meas}"
                )
            op = _assemble_from_stacks(w, stacks)
            _, vectors = _seesaw_state(op, dims, vectors, cfg.max_outer_iters,
                                       cfg.convergence_tol)
            factors = _party_factors(w, vectors, stacks)
            obj = _objective(w, factors)
            if obj > after_meas + _MONOTONE_SLACK:
                raise RuntimeError(
                    f"state step increased the objective: {after_meas} -> {obj}"
                )
            gain = prev - obj
            if gain < cfg.convergence_tol:
                measurement_sweep(cfg.inner_step_tol)
                after_meas = _objective(w, factors)
                op = _assemble_from_stacks(w, stacks)
                _, vectors = _seesaw_state(op, dims, vectors, cfg.max_outer_iters,
                                           cfg.convergence_tol)
                factors = _party_factors(w, vectors, stacks)
                obj = _objective(w, factors)
                gain = prev - obj
                if gain < cfg.convergence_tol:
                    converged = True
                    break
        results.append((obj, k, [v.copy() for v in vectors],
                        [{t: s.copy() for t, s in table.items()} for table in stacks],
                        iterations, converged))
    values = [r[0] for r in results]
    best = min(results, key=lambda r: (r[0], r[1]))
    _, _, vectors, stacks, iterations, converged = best
    state = ProductState(vectors)
    assignment = MeasurementAssignment(
        [{t: Povm(list(s)) for t, s in table.items()} for table in stacks]
    )
    value = expectation(assemble_observable(w, assignment), state.density())
    return BoundEstimate(
        value=value,
        argmin_state=state,
        argmin_measurements=assignment,
        converged=converged,
        iterations=iterations,
        restart_spread=float(max(values) - min(values)),
    )
