"""HDG discretization of the mixed Poisson problem with projected-jump stabilization.

Unknowns per element K: flux ``q_h`` in [P^k(K)]^d, scalar ``u_h`` in P^{k+1}(K);
per face F: trace ``uhat_h`` in P^k(F), zero on boundary faces.  The numerical
flux is ``q_h.n + (1/h_K) (Pi_k u_h - uhat_h)`` where ``Pi_k`` is the L2
projection onto P^k(F).

Local blocks are ordered ``[q (component-major), u, uhat (face by face)]`` and
realize the bilinear form ``B(q, u, uhat; v, w, what)`` tested by the element
and face basis functions, so ``B(sol; test) = -(f, w)`` becomes ``A x = b``
with ``b_u = -(f, psi)``.

Element interiors are eliminated by block Gaussian elimination.  The flux mass
matrix ``M`` is SPD and ``H = D + C^T M^-1 C`` is SPD as soon as the
stabilization sees ``Pi_k u``, so both are Cholesky-checked before use.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import linsolve
from .basis import (
    dim_poly,
    element_basis,
    eval_monomial_gradients,
    eval_monomials,
    face_basis,
    face_diameter,
    face_frame,
    quadrature,
)
from .projections import projection_matrix_face

log = logging.getLogger(__name__)

PIVOT_RTOL = 1e-12


class SingularLocalBlockError(np.linalg.LinAlgError):
    def __init__(self, element, msg="singular local interior block"):
        super().__init__(f"{msg} on element {element}")
        self.element = element


def default_qdeg(k: int) -> int:
    return 2 * (k + 1) + 2


@dataclass
class LocalSystem:
    """Per-element HDG blocks; trace columns follow ``faces``."""

    element: int
    k: int
    tau: float
    faces: np.ndarray
    signs: np.ndarray
    A_qq: np.ndarray
    A_qu: np.ndarray
    A_qlam: np.ndarray
    A_uu: np.ndarray
    A_ulam: np.ndarray
    A_lamlam: np.ndarray
    load_u: np.ndarray

    @property
    def n_q(self):
        return self.A_qq.shape[0]

    @property
    def n_u(self):
        return self.A_uu.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return np.block([
            [self.A_qq, self.A_qu, self.A_qlam],
            [self.A_qu.T, self.A_uu, self.A_ulam],
            [self.A_qlam.T, self.A_ulam.T, self.A_lamlam],
        ])

    @property
    def rhs(self) -> np.ndarray:
        return np.concatenate([np.zeros(self.n_q), self.load_u, np.zeros(self.A_lamlam.shape[0])])


@dataclass
class CondensedSystem:
    """Schur complement on the traces and the maps recovering ``(q, u)``.

    ``q = r_q + R_q @ lam``, ``u = r_u + R_u @ lam``.
    """

    K_lamlam: np.ndarray
    load: np.ndarray
    R_q: np.ndarray
    R_u: np.ndarray
    r_q: np.ndarray
    r_u: np.ndarray


def _check_cholesky(H, elems, what):
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        bad = [int(e) for e, Hi in zip(elems, H) if np.any(np.linalg.eigvalsh(Hi) <= 0)]
        raise SingularLocalBlockError(bad[0] if bad else int(elems[0]), f"{what} not positive definite")
    piv = np.diagonal(L, axis1=-2, axis2=-1) ** 2
    scale = np.abs(H).max(axis=(-1, -2))
    small = piv.min(axis=-1) <= PIVOT_RTOL * scale
    if np.any(small):
        raise SingularLocalBlockError(int(np.asarray(elems)[small][0]), f"{what} pivot below threshold")


def _element_tables(mesh, k, elems, qdeg):
    c = mesh.centroids[elems]
    h = mesh.diameters[elems]
    ref = quadrature(mesh.reference_shape, qdeg)
    J = mesh.jacobians[elems]
    X = mesh.origins[elems][:, None, :] + np.einsum("qj,eij->eqi", ref.points, J)
    W = ref.weights[None, :] * np.abs(np.linalg.det(J))[:, None]
    xi = (X - c[:, None, :]) / h[:, None, None]
    return dict(X=X, W=W, h=h, xi=xi)


def _group_tables(mesh, k, elems, qdeg):
    d = mesh.dim
    faces = np.stack([mesh.element_faces[e] for e in elems])
    signs = np.stack([mesh.element_face_signs[e] for e in elems])
    t = _element_tables(mesh, k, elems, qdeg)
    c, h, xi = mesh.centroids[elems], t["h"], t.pop("xi")

    fref = quadrature("segment" if d == 2 else "triangle", qdeg)
    P = mesh.vertices[mesh.face_vertices[faces]]
    Jf = P[..., 1:, :] - P[..., :1, :]
    Y = P[..., 0, None, :] + np.einsum("qj,efjd->efqd", fref.points, Jf)
    if d == 2:
        meas = np.linalg.norm(Jf[..., 0, :], axis=-1)
    else:
        meas = np.linalg.norm(np.cross(Jf[..., 0, :], Jf[..., 1, :]), axis=-1)
    eta = np.einsum("efqd,efad->efqa", Y - mesh.face_centroid[faces][:, :, None, :], face_frame(P))
    eta = eta / face_diameter(P)[..., None, None]
    xif = (Y - c[:, None, None, :]) / h[:, None, None, None]
    t.update(
        Y=Y, Wf=fref.weights * meas[..., None],
        phi=eval_monomials(xi, k),
        dphi=eval_monomial_gradients(xi, k, h[:, None]),
        psi=eval_monomials(xi, k + 1),
        mu=eval_monomials(eta, k),
        phif=eval_monomials(xif, k),
        psif=eval_monomials(xif, k + 1),
        normals=signs[..., None] * mesh.face_normal[faces],
    )
    return faces, signs, t


def _group_blocks(t):
    ne, nF = t["mu"].shape[:2]
    tau = 1.0 / t["h"]
    Mk = np.einsum("eqi,eq,eqj->eij", t["phi"], t["W"], t["phi"])
    C = -np.einsum("eqia,eq,eqj->eaij", t["dphi"], t["W"], t["psi"])
    G = np.einsum("efqi,efq,efqj->efij", t["mu"], t["Wf"], t["mu"])
    Bf = np.einsum("efqi,efq,efqj->efij", t["mu"], t["Wf"], t["psif"])
    Pf = np.linalg.solve(G, Bf)
    D = tau[:, None, None] * np.einsum("efji,efjl->eil", Bf, Pf)
    Eface = np.einsum("efqi,efq,efqj->efij", t["phif"], t["Wf"], t["mu"])
    d = t["normals"].shape[-1]
    mk, nb, mu = Mk.shape[1], G.shape[-1], D.shape[1]
    E = np.einsum("efa,efij->eaifj", t["normals"], Eface).reshape(ne, d, mk, nF * nb)
    F = tau[:, None, None] * Bf.transpose(0, 3, 1, 2).reshape(ne, mu, nF * nb)
    Alam = np.zeros((ne, nF * nb, nF * nb))
    for f in range(nF):
        Alam[:, f * nb:(f + 1) * nb, f * nb:(f + 1) * nb] = -tau[:, None, None] * G[:, f]
    return dict(
        tau=tau, Mk=Mk, C=C, G=G, Bf=Bf, D=D, Eface=Eface, E=E, F=F, Alam=Alam,
        normals=t["normals"],
    )


def _condense_group(b, elems):
    """Batched elimination of (q, u): trace Schur complement and recovery maps."""
    Mk, C, D, E, F = b["Mk"], b["C"], b["D"], b["E"], b["F"]
    _check_cholesky(Mk, elems, "flux mass matrix")
    MinvC = np.linalg.solve(Mk[:, None], C)
    MinvE = np.linalg.solve(Mk[:, None], E)
    H = D + np.einsum("eaij,eaik->ejk", C, MinvC)
    H = 0.5 * (H + H.transpose(0, 2, 1))
    _check_cholesky(H, elems, "interior scalar block")
    Hinv = np.linalg.inv(H)
    zu = Hinv @ (np.einsum("eaij,eail->ejl", C, MinvE) - F)
    zq = MinvE - np.einsum("eaij,ejl->eail", MinvC, zu)
    K = -b["Alam"] + np.einsum("eail,eaim->elm", E, zq) + np.einsum("ejl,ejm->elm", F, zu)
    K = 0.5 * (K + K.transpose(0, 2, 1))
    # source moments fm -> u_b = Hinv fm, q_b = -MinvC u_b, trace load E^T q_b + F^T u_b
    src_q = -np.einsum("eaij,ejl->eail", MinvC, Hinv)
    load_map = F.transpose(0, 2, 1) @ Hinv + np.einsum("eail,eaij->elj", E, src_q)
    return dict(K=K, zq=zq, zu=zu, src_u=Hinv, src_q=src_q, load_map=load_map)


@dataclass
class ElementGroup:
    """A batch of elements with the same number of faces.

    Only the operators needed after condensation are kept: the Schur block,
    the recovery maps and the face matrices used by the conservation check.
    """

    elems: np.ndarray
    faces: np.ndarray
    signs: np.ndarray
    ops: dict = field(repr=False)


@dataclass
class TraceSystem:
    """Condensed SPD system on interior-face trace dofs."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    face_dofs: np.ndarray
    disc: "Discretization" = field(repr=False)
    particular: list = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


class Discretization:
    """Batched HDG operators for one mesh and degree ``k``."""

    _KEEP = ("tau", "G", "Bf", "Eface", "normals", "K", "zq", "zu", "src_u", "src_q", "load_map")

    def __init__(self, mesh, k: int, qdeg: int | None = None, chunk: int = 2048):
        if k < 0:
            raise ValueError("k must be >= 0")
        self.mesh, self.k = mesh, k
        self.d = mesh.dim
        self.qdeg = default_qdeg(k) if qdeg is None else qdeg
        self.n_q = dim_poly(k, self.d)
        self.n_u = dim_poly(k + 1, self.d)
        self.n_face = dim_poly(k, self.d - 1)
        counts = np.array([len(f) for f in mesh.element_faces])
        self.groups = []
        for nF in np.unique(counts):
            same = np.flatnonzero(counts == nF)
            for start in range(0, len(same), chunk):
                elems = same[start:start + chunk]
                faces, signs, tables = _group_tables(mesh, k, elems, self.qdeg)
                blocks = _group_blocks(tables)
                del tables
                blocks.update(_condense_group(blocks, elems))
                ops = {key: blocks[key] for key in self._KEEP}
                self.groups.append(ElementGroup(elems, faces, signs, ops))
        interior = mesh.face_elements[:, 1] >= 0
        self.face_dofs = np.full((mesh.n_faces, self.n_face), -1, dtype=int)
        nint = int(interior.sum())
        self.face_dofs[interior] = np.arange(nint * self.n_face).reshape(nint, self.n_face)
        self.n_dofs = nint * self.n_face

    def source_moments(self, g, f):
        """``(f, psi_j)_K`` for every element of the group."""
        t = _element_tables(self.mesh, self.k, g.elems, self.qdeg)
        ne, nq, d = t["X"].shape
        fx = np.asarray(f(t["X"].reshape(-1, d)), dtype=float).reshape(ne, nq)
        psi = eval_monomials(t["xi"], self.k + 1)
        return np.einsum("eq,eq,eqj->ej", fx, t["W"], psi)

    def assemble(self, f) -> TraceSystem:
        rows, cols, vals = [], [], []
        rhs = np.zeros(self.n_dofs)
        particular = []
        for g in self.groups:
            ops = g.ops
            dofs = self.face_dofs[g.faces].reshape(len(g.elems), -1)
            fm = self.source_moments(g, f)
            particular.append((
                np.einsum("eail,el->eai", ops["src_q"], fm),
                np.einsum("ejl,el->ej", ops["src_u"], fm),
            ))
            load = np.einsum("elj,ej->el", ops["load_map"], fm)
            mask = dofs >= 0
            np.add.at(rhs, dofs[mask], load[mask])
            r = np.broadcast_to(dofs[:, :, None], ops["K"].shape)
            c = np.broadcast_to(dofs[:, None, :], ops["K"].shape)
            keep = (r >= 0) & (c >= 0)
            rows.append(r[keep])
            cols.append(c[keep])
            vals.append(ops["K"][keep])
        A = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_dofs, self.n_dofs),
        ).tocsr()
        A.sum_duplicates()
        return TraceSystem(A, rhs, self.face_dofs, self, particular)

    def recover(self, system: TraceSystem, lam) -> "SolutionFields":
        lam = np.asarray(lam, dtype=float)
        if lam.shape != (self.n_dofs,):
            raise ValueError(f"trace vector has shape {lam.shape}, expected ({self.n_dofs},)")
        mesh = self.mesh
        uhat = np.zeros((mesh.n_faces, self.n_face))
        inner = self.face_dofs[:, 0] >= 0
        uhat[inner] = lam[self.face_dofs[inner]]
        q = np.zeros((mesh.n_elements, self.d, self.n_q))
        u = np.zeros((mesh.n_elements, self.n_u))
        for g, (qb, ub) in zip(self.groups, system.particular):
            lk = uhat[g.faces].reshape(len(g.elems), -1)
            u[g.elems] = ub - np.einsum("ejl,el->ej", g.ops["zu"], lk)
            q[g.elems] = qb - np.einsum("eail,el->eai", g.ops["zq"], lk)
        return SolutionFields(mesh, self.k, q, u, uhat, disc=self)


def local_assemble(mesh, K: int, k: int, f=None, qdeg: int | None = None) -> LocalSystem:
    """HDG blocks of element ``K`` (a one-element batch of the global kernel)."""
    faces, signs, tables = _group_tables(mesh, k, np.array([K]), default_qdeg(k) if qdeg is None else qdeg)
    b = _group_blocks(tables)
    d, mk = mesh.dim, dim_poly(k, mesh.dim)
    if f is None:
        load = np.zeros(dim_poly(k + 1, d))
    else:
        fx = np.asarray(f(tables["X"][0]), dtype=float)
        load = -np.einsum("q,q,qj->j", fx, tables["W"][0], tables["psi"][0])
    return LocalSystem(
        element=int(K), k=k, tau=float(b["tau"][0]), faces=faces[0], signs=signs[0],
        A_qq=np.kron(np.eye(d), b["Mk"][0]), A_qu=b["C"][0].reshape(d * mk, -1),
        A_qlam=b["E"][0].reshape(d * mk, -1), A_uu=-b["D"][0], A_ulam=b["F"][0],
        A_lamlam=b["Alam"][0], load_u=load,
    )


def local_condense(ls: LocalSystem) -> CondensedSystem:
    """Eliminate ``(q, u)`` from one element's system."""
    nq, n_I = ls.n_q, ls.n_q + ls.n_u
    A = ls.matrix
    A_II, A_Il, A_ll = A[:n_I, :n_I], A[:n_I, n_I:], A[n_I:, n_I:]
    _check_cholesky(ls.A_qq[None], [ls.element], "flux mass matrix")
    H = -ls.A_uu + ls.A_qu.T @ np.linalg.solve(ls.A_qq, ls.A_qu)
    _check_cholesky(0.5 * (H + H.T)[None], [ls.element], "interior scalar block")
    sol = np.linalg.solve(A_II, np.column_stack([A_Il, ls.rhs[:n_I]]))
    Z, xb = sol[:, :-1], sol[:, -1]
    S = A_ll - A_Il.T @ Z
    return CondensedSystem(
        K_lamlam=-0.5 * (S + S.T), load=A_Il.T @ xb,
        R_q=-Z[:nq], R_u=-Z[nq:], r_q=xb[:nq], r_u=xb[nq:],
    )


def assemble_global(mesh, k: int, f, qdeg: int | None = None) -> TraceSystem:
    return Discretization(mesh, k, qdeg).assemble(f)


def recover_fields(system: TraceSystem, lam) -> "SolutionFields":
    return system.disc.recover(system, lam)


def solve_poisson(mesh, k: int, f, solver: str = "auto", tol: float = 1e-11, **kw) -> "SolutionFields":
    """Assemble, solve and recover in one call."""
    system = assemble_global(mesh, k, f)
    lam = linsolve.solve(system.matrix, system.rhs, method=solver, tol=tol, **kw)
    log.debug("k=%d: %d trace dofs solved with %s", k, system.size, solver)
    return recover_fields(system, lam)


# ---------------------------------------------------------------------------
# fields


@dataclass
class SolutionFields:
    """Coefficients of ``q_h`` (ne, d, n_q), ``u_h`` (ne, n_u), ``uhat_h`` (nf, n_face)."""

    mesh: object
    k: int
    q: np.ndarray
    u: np.ndarray
    uhat: np.ndarray
    disc: Discretization = field(default=None, repr=False)

    def _xi(self, elems, pts):
        m = self.mesh
        return (pts - m.centroids[elems][..., None, :]) / m.diameters[elems][..., None, None]

    def u_at(self, elems, pts) -> np.ndarray:
        """``u_h`` of element ``elems[i]`` at ``pts[i, p]`` (shape (N, P, d)) -> (N, P)."""
        V = eval_monomials(self._xi(elems, pts), self.k + 1)
        return np.einsum("npj,nj->np", V, self.u[elems])

    def q_at(self, elems, pts) -> np.ndarray:
        V = eval_monomials(self._xi(elems, pts), self.k)
        return np.einsum("npj,naj->npa", V, self.q[elems])

    def uhat_at(self, F: int, pts) -> np.ndarray:
        return face_basis(self.mesh.face(F), self.k)(pts) @ self.uhat[F]

    def locate(self, points) -> np.ndarray:
        """Index of an element containing each point."""
        from scipy.spatial import cKDTree

        m = self.mesh
        points = np.atleast_2d(np.asarray(points, dtype=float))
        tree = getattr(m, "_centroid_tree", None)
        if tree is None:
            tree = m._centroid_tree = cKDTree(m.centroids)
        nn = min(m.n_elements, 12)
        _, cand = tree.query(points, k=nn)
        cand = cand.reshape(len(points), nn)
        Jinv = np.linalg.inv(m.jacobians[cand])
        xi = np.einsum("pcij,pcj->pci", Jinv, points[:, None, :] - m.origins[cand])
        tol = 1e-10
        if m.shape == "rectangle":
            inside = np.all((xi >= -tol) & (xi <= 1 + tol), axis=-1)
        else:
            inside = np.all(xi >= -tol, axis=-1) & (xi.sum(-1) <= 1 + tol)
        if not np.all(inside.any(axis=1)):
            raise ValueError("point outside the mesh")
        return cand[np.arange(len(points)), inside.argmax(axis=1)]

    def eval_u(self, points) -> np.ndarray:
        points = np.atleast_2d(points)
        return self.u_at(self.locate(points), points[:, None, :])[:, 0]

    def eval_q(self, points) -> np.ndarray:
        points = np.atleast_2d(points)
        return self.q_at(self.locate(points), points[:, None, :])[:, 0]


def random_fields(mesh, k: int, rng, boundary_zero: bool = False) -> SolutionFields:
    d = mesh.dim
    q = rng.standard_normal((mesh.n_elements, d, dim_poly(k, d)))
    u = rng.standard_normal((mesh.n_elements, dim_poly(k + 1, d)))
    uhat = rng.standard_normal((mesh.n_faces, dim_poly(k, d - 1)))
    if boundary_zero:
        uhat[mesh.boundary_faces] = 0.0
    return SolutionFields(mesh, k, q, u, uhat)


def conservation_residual(fields: SolutionFields) -> np.ndarray:
    """Per interior face, max over face basis functions of ``<qhat.n, mu>`` summed over both sides."""
    disc = fields.disc or Discretization(fields.mesh, fields.k)
    res = np.zeros((fields.mesh.n_faces, disc.n_face))
    for g in disc.groups:
        b = g.ops
        n = b["normals"]
        flux = np.einsum("efa,efij,eai->efj", n, b["Eface"], fields.q[g.elems])
        jump = np.einsum("efji,ei->efj", b["Bf"], fields.u[g.elems])
        jump = jump - np.einsum("efij,efj->efi", b["G"], fields.uhat[g.faces])
        contrib = flux + b["tau"][:, None, None] * jump
        np.add.at(res, g.faces.ravel(), contrib.reshape(-1, disc.n_face))
    return np.abs(res[fields.mesh.interior_faces]).max(axis=1)


@lru_cache(maxsize=8)
def _quadrature_tables(mesh, k: int, qdeg: int):
    """Per-element basis values at quadrature points, built from the generic
    basis/projection modules rather than the batched kernels above."""
    tables = []
    for K in range(mesh.n_elements):
        el = mesh.element(K)
        bq, bu = element_basis(el, k), element_basis(el, k + 1)
        rule = el.quadrature(qdeg)
        sides = []
        for F, s in zip(mesh.element_faces[K], mesh.element_face_signs[K]):
            face = mesh.face(F)
            fr = face.quadrature(qdeg)
            sides.append(dict(
                F=F, n=s * face.normal, w=fr.weights, phi=bq(fr.points),
                mu=face_basis(face, k)(fr.points),
                P=projection_matrix_face(el, face, k + 1, k),
            ))
        tables.append(dict(
            tau=1.0 / el.diameter, w=rule.weights, phi=bq(rule.points),
            dphi=bq.grad(rule.points), psi=bu(rule.points), sides=sides,
        ))
    return tables


def apply_bilinear_B(a: SolutionFields, b: SolutionFields, qdeg: int | None = None) -> float:
    """``B(a; b)`` evaluated term by term with quadrature on each element and face."""
    mesh = a.mesh
    if b.mesh is not mesh or a.k != b.k:
        raise ValueError("bundles live on different discretizations")
    k = a.k
    total = 0.0
    for K, t in enumerate(_quadrature_tables(mesh, k, default_qdeg(k) if qdeg is None else qdeg)):
        qa, vb = t["phi"] @ a.q[K].T, t["phi"] @ b.q[K].T
        div_qa = np.einsum("pia,ai->p", t["dphi"], a.q[K])
        div_vb = np.einsum("pia,ai->p", t["dphi"], b.q[K])
        ua, wb = t["psi"] @ a.u[K], t["psi"] @ b.u[K]
        total += t["w"] @ ((qa * vb).sum(-1) - ua * div_vb - div_qa * wb)
        for sd in t["sides"]:
            F, mu = sd["F"], sd["mu"]
            uh, wh = mu @ a.uhat[F], mu @ b.uhat[F]
            qn = sd["phi"] @ a.q[K].T @ sd["n"]
            vn = sd["phi"] @ b.q[K].T @ sd["n"]
            Pu, Pw = mu @ (sd["P"] @ a.u[K]), mu @ (sd["P"] @ b.u[K])
            total += sd["w"] @ (uh * vn + qn * wh - t["tau"] * (Pu - uh) * (Pw - wh))
    return float(total)


def energy_norm_sq(a: SolutionFields, qdeg: int | None = None) -> float:
    """``||q||^2 + ||h_K^{-1/2} (Pi_k u - uhat)||^2_{dT}`` by quadrature."""
    k = a.k
    total = 0.0
    for K, t in enumerate(_quadrature_tables(a.mesh, k, default_qdeg(k) if qdeg is None else qdeg)):
        qv = t["phi"] @ a.q[K].T
        total += t["w"] @ (qv**2).sum(-1)
        for sd in t["sides"]:
            jump = sd["mu"] @ (sd["P"] @ a.u[K] - a.uhat[sd["F"]])
            total += t["tau"] * (sd["w"] @ jump**2)
    return float(total)


def flip(a: SolutionFields) -> SolutionFields:
    """``(q, -u, -uhat)``."""
    return SolutionFields(a.mesh, a.k, a.q, -a.u, -a.uhat, a.disc)


# ---------------------------------------------------------------------------
# brute-force reference


def assemble_monolithic(mesh, k: int, f):
    """Full saddle-point system over all (q, u) element dofs and interior traces.

    Returns ``(A, b, trace_slice)``; intended as a dense oracle on small meshes.
    """
    disc = Discretization(mesh, k)
    n_I = mesh.dim * disc.n_q + disc.n_u
    N = mesh.n_elements * n_I + disc.n_dofs
    A = np.zeros((N, N))
    b = np.zeros(N)
    for K in range(mesh.n_elements):
        ls = local_assemble(mesh, K, k, f)
        traces = disc.face_dofs[ls.faces].ravel()
        idx = np.concatenate([
            K * n_I + np.arange(n_I),
            np.where(traces >= 0, traces + mesh.n_elements * n_I, -1),
        ])
        keep = idx >= 0
        A[np.ix_(idx[keep], idx[keep])] += ls.matrix[np.ix_(keep, keep)]
        b[idx[keep]] += ls.rhs[keep]
    return A, b, slice(mesh.n_elements * n_I, N)
