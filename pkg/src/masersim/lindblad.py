"""Liouvillian construction, steady states, and spectral-gap linewidths.

Vectorization convention (used everywhere): density matrices are
flattened row-major, ``vec(rho) = rho.reshape(-1)``, so the generator of
``rho_dot = -i[H, rho] + sum_k chi_k D[A_k] rho`` is

    L = -i (H (x) I - I (x) H^T)
        + sum_k chi_k [ A (x) conj(A) - 1/2 (A^H A (x) I + I (x) (A^H A)^T) ]

with ``(x)`` the Kronecker product. Trace preservation is equivalent to
``vec(I)`` being a left null vector of L.

Three solver backends are provided:

``dense``
    Full non-symmetric eigendecomposition; default up to vectorized
    dimension 4096.
``sparse``
    Shift-invert Arnoldi with deterministic start vectors; probes the
    neighborhood of zero and of +/- i * omega_cavity (where the slow
    cavity-coherence modes live in this frame).
``sector``
    Exact block-diagonalization over the conserved excitation charge
    q = n_transmon + n_cavity - n_snail. Under the strict pump rule
    every retained Hamiltonian term except the far-off-resonant
    transmon-cavity two-photon pieces conserves q; those pieces are
    dropped (their norm is recorded) and each charge block is solved
    densely. This is the fast path for parameter sweeps.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from masersim.errors import ConfigError, MultipleSteadyStates, SolverError

_DENSE_LIMIT_DEFAULT = 4096
_ZERO_REL = 1e-6        # an eigenvalue this close to 0 counts as the null mode
_DEGENERATE_REL = 1e-9  # two eigenvalues this close to 0 mean multistability
_GAP_RESIDUAL_REL = 1e-6


@dataclass(frozen=True)
class JumpInventory:
    """Jump operators of the master equation on the full product space.

    SNAIL and transmon losses are uncorrelated: one rank-one lowering
    operator per labeled state pair differing by one photon in that
    component (amplitude sqrt(n) of the departing photon number). The
    cavity has a single collective truncated annihilation operator.
    """

    snail_jumps: tuple
    transmon_jumps: tuple
    cavity_jump: np.ndarray
    chi_s: float
    chi_t: float
    chi_c: float

    def rate_op_pairs(self):
        """All (rate, operator) dissipator pairs in deterministic order."""
        pairs = [(self.chi_s, op) for op in self.snail_jumps]
        pairs += [(self.chi_t, op) for op in self.transmon_jumps]
        pairs.append((self.chi_c, self.cavity_jump))
        return pairs


def annihilation(dim):
    """Truncated annihilation operator with sqrt(n) on the subdiagonal."""
    return np.diag(np.sqrt(np.arange(1.0, dim)), k=1)


def build_jump_inventory(atom, cavity_cutoff, rates):
    """Per-pair SNAIL/transmon lowering operators plus the cavity jump.

    Parameters
    ----------
    atom : AtomBasis
        Labeled artificial-atom basis.
    cavity_cutoff : int
        Number of retained cavity Fock states.
    rates : (chi_s, chi_t, chi_c)
        Decay rates in rad/ns; all must be non-negative.
    """
    chi_s, chi_t, chi_c = rates
    if min(chi_s, chi_t, chi_c) < 0:
        raise ConfigError("decay rates must be non-negative")
    d = atom.dim
    eye_c = np.eye(cavity_cutoff)

    def atom_pair_ops(component):
        ops = []
        for upper in range(d):
            n_s, n_t = atom.labels[upper]
            if component == "snail":
                if n_s < 1:
                    continue
                target, amp = (n_s - 1, n_t), np.sqrt(n_s)
            else:
                if n_t < 1:
                    continue
                target, amp = (n_s, n_t - 1), np.sqrt(n_t)
            lower = atom.label_index(*target)
            op = np.zeros((d, d))
            op[lower, upper] = amp
            ops.append(np.kron(op, eye_c))
        return tuple(ops)

    return JumpInventory(
        snail_jumps=atom_pair_ops("snail"),
        transmon_jumps=atom_pair_ops("transmon"),
        cavity_jump=np.kron(np.eye(d), annihilation(cavity_cutoff)),
        chi_s=chi_s,
        chi_t=chi_t,
        chi_c=chi_c,
    )


# ---------------------------------------------------------------------------
# Liouvillian
# ---------------------------------------------------------------------------


@dataclass
class Liouvillian:
    """Vectorized master-equation generator.

    ``generator`` is a sparse (d^2, d^2) complex matrix for Hilbert
    dimension ``hilbert_dim`` = d. ``metadata`` records cutoffs and
    frame parameters. The Hamiltonian and jump list are retained so the
    sector backend can rebuild charge blocks without re-deriving them.
    """

    generator: sp.csc_matrix
    hilbert_dim: int
    metadata: dict
    hamiltonian: np.ndarray | None = None
    jumps: JumpInventory | None = None
    charges: np.ndarray | None = None
    _norm_bound: float | None = field(default=None, repr=False)

    @property
    def vector_dim(self):
        return self.generator.shape[0]

    def norm_bound(self):
        """Cheap upper-bound proxy for the spectral radius (1-norm estimate)."""
        if self._norm_bound is None:
            self._norm_bound = float(spla.onenormest(self.generator))
        return self._norm_bound

    def trace_residual(self):
        """Norm of vec(I)^H L (zero for a trace-preserving generator)."""
        d = self.hilbert_dim
        left = np.eye(d).reshape(-1) @ self.generator
        return float(np.linalg.norm(left))


def liouvillian_matrix(hamiltonian, rate_op_pairs):
    """Sparse vectorized generator from a Hamiltonian and dissipators."""
    h = sp.csr_matrix(hamiltonian.astype(complex))
    d = h.shape[0]
    eye = sp.identity(d, format="csr", dtype=complex)
    gen = -1j * (sp.kron(h, eye, format="csr") - sp.kron(eye, h.T, format="csr"))
    for rate, op in rate_op_pairs:
        if rate == 0.0:
            continue
        a = sp.csr_matrix(op.astype(complex))
        adag_a = (a.conj().T @ a).tocsr()
        gen = gen + rate * (
            sp.kron(a, a.conj(), format="csr")
            - 0.5 * sp.kron(adag_a, eye, format="csr")
            - 0.5 * sp.kron(eye, adag_a.T, format="csr")
        )
    gen = gen.tocsc()
    gen.eliminate_zeros()
    return gen


def _charge_vector(model):
    """Conserved excitation charge per basis state (strict pump rule)."""
    n_c = model.cavity_dim
    labels = model.atom.labels
    atom_charge = labels[:, 1] - labels[:, 0]  # n_transmon - n_snail
    return (np.repeat(atom_charge, n_c) + np.tile(np.arange(n_c), model.atom.dim)).astype(
        int
    )


def build_liouvillian(model, jumps):
    """Assemble the rotating-frame Liouvillian of the maser model.

    Parameters
    ----------
    model : RotatingFrameModel
    jumps : JumpInventory

    Returns
    -------
    Liouvillian
        With trace-preserving generator; the conserved-charge vector is
        attached when the strict pump rule makes sectorization valid.
    """
    dim = model.hilbert_dim
    h = model.hamiltonian
    for _, op in jumps.rate_op_pairs():
        if op.shape != (dim, dim):
            raise ConfigError(
                f"jump operator shape {op.shape} does not match dimension {dim}"
            )
    gen = liouvillian_matrix(h, jumps.rate_op_pairs())
    charges = _charge_vector(model) if model.pump_rule == "strict" else None
    metadata = {
        "atom_dim": model.atom.dim,
        "cavity_dim": model.cavity_dim,
        "labels": model.atom.labels.copy(),
        "omega_cavity": model.omega_cavity,
        "omega_p": model.omega_p,
        "pump_rule": model.pump_rule,
        "pump_amplitude": model.pump_amplitude,
        "rates": (jumps.chi_s, jumps.chi_t, jumps.chi_c),
        "dropped_terms_norm": model.dropped_terms_norm,
    }
    return Liouvillian(
        generator=gen,
        hilbert_dim=dim,
        metadata=metadata,
        hamiltonian=h,
        jumps=jumps,
        charges=charges,
    )


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class SteadyStateReport:
    """Steady state and derived quantities at one operating point."""

    rho_ss: np.ndarray
    cavity_occupation: float
    null_residual: float
    diagnostics: dict
    linewidth: float | None = None
    emission_offset: float | None = None
    cavity_sector_linewidth: float | None = None
    method: str = "dense"

    def to_record(self):
        """JSON-compatible summary (density matrix omitted)."""
        rec = {
            "cavity_occupation": self.cavity_occupation,
            "null_residual": self.null_residual,
            "linewidth_rad_ns": self.linewidth,
            "emission_offset_rad_ns": self.emission_offset,
            "cavity_sector_linewidth_rad_ns": self.cavity_sector_linewidth,
            "method": self.method,
        }
        rec.update(
            {f"population_{k}": v for k, v in self.diagnostics.get("atom_populations", {}).items()}
        )
        cav = self.diagnostics.get("cavity_populations")
        if cav is not None:
            rec.update({f"cavity_population_{n}": p for n, p in enumerate(cav)})
        return rec


@dataclass(frozen=True)
class GapResult:
    """Spectral-gap eigenvalue of the Liouvillian."""

    gap: float
    imag: float
    cavity_sector_gap: float | None
    residual: float
    method: str
    candidates: np.ndarray


# ---------------------------------------------------------------------------
# Eigenvalue machinery per backend
# ---------------------------------------------------------------------------


def _resolve_method(liou, method, dense_limit):
    if method != "auto":
        if method == "sector" and liou.charges is None:
            raise ConfigError(
                "sector backend requires the strict pump rule (conserved charge)"
            )
        return method
    if liou.vector_dim <= dense_limit:
        return "dense"
    return "sector" if liou.charges is not None else "sparse"


def _dense_decomposition(liou):
    values, vectors = sla.eig(liou.generator.toarray())
    return values, vectors


def _sector_indices(liou, sigma):
    q = liou.charges
    sig = (q[:, None] - q[None, :]).reshape(-1)
    return np.nonzero(sig == sigma)[0]


def _sector_generator(liou):
    """Generator with charge-non-conserving Hamiltonian entries removed.

    The removed part (far-off-resonant transmon-cavity two-photon terms)
    has its Frobenius norm returned alongside.
    """
    q = liou.charges
    h = liou.hamiltonian
    keep = q[:, None] == q[None, :]
    h_kept = np.where(keep, h, 0.0)
    violated = float(np.linalg.norm(h - h_kept))
    for rate, op in liou.jumps.rate_op_pairs():
        if rate == 0.0:
            continue
        rows, cols = np.nonzero(op)
        shifts = np.unique(q[rows] - q[cols])
        if shifts.size > 1:
            raise SolverError("jump operator without definite charge shift")
    gen = liouvillian_matrix(h_kept, liou.jumps.rate_op_pairs())
    return gen, violated


def _sector_eigensystem(liou, sectors):
    """Eigenpairs of the charge-sector blocks, embedded in the full space.

    Returns (values, vectors, meta) where vectors columns are
    full-dimension right eigenvectors. Negative sectors are implied by
    conjugation symmetry and not solved separately.
    """
    gen, violated = _sector_generator(liou)
    all_values = []
    all_vectors = []
    for sigma in sectors:
        idx = _sector_indices(liou, sigma)
        if idx.size == 0:
            continue
        block = gen[np.ix_(idx, idx)].toarray()
        values, vectors = sla.eig(block)
        full = np.zeros((liou.vector_dim, values.size), dtype=complex)
        full[idx, :] = vectors
        all_values.append(values)
        all_vectors.append(full)
    values = np.concatenate(all_values)
    vectors = np.concatenate(all_vectors, axis=1)
    return values, vectors, {"charge_violating_norm": violated, "generator": gen}


def _sparse_candidates(liou, k, probes):
    """Shift-invert eigenpairs of the sparse generator near each probe."""
    n = liou.vector_dim
    k = int(min(k, n - 2))
    v0 = np.ones(n, dtype=complex)
    values = []
    vectors = []
    for sigma in probes:
        try:
            w, v = spla.eigs(
                liou.generator, k=k, sigma=sigma, which="LM", v0=v0, tol=1e-12
            )
        except spla.ArpackNoConvergence as exc:
            w = np.asarray(exc.eigenvalues)
            v = np.asarray(exc.eigenvectors)
            if w.size == 0:
                raise SolverError(f"Arnoldi did not converge at probe {sigma}") from exc
        values.append(w)
        vectors.append(v)
    return np.concatenate(values), np.concatenate(vectors, axis=1)


def _zero_mode_checks(values, radius):
    """Locate the null eigenvalue and detect degenerate null spaces."""
    dist = np.abs(values)
    zero_idx = int(np.argmin(dist))
    if dist[zero_idx] > _ZERO_REL * radius:
        raise SolverError(
            f"no eigenvalue within {_ZERO_REL:.0e} * spectral radius of zero "
            f"(closest {dist[zero_idx]:.3e} vs radius {radius:.3e})"
        )
    near_zero = np.sum(dist <= _DEGENERATE_REL * radius)
    if near_zero > 1:
        raise MultipleSteadyStates(
            f"{near_zero} eigenvalues within {_DEGENERATE_REL:.0e} * radius of zero"
        )
    return zero_idx


def _cavity_coherence_weight(liou, vector):
    """Fraction of a vectorized mode living in |delta n_cavity| = 1 blocks."""
    d = liou.hilbert_dim
    n_c = liou.metadata["cavity_dim"]
    rho = vector.reshape(d, d)
    cav = np.tile(np.arange(n_c), d // n_c)
    delta = np.abs(cav[:, None] - cav[None, :])
    total = float(np.sum(np.abs(rho) ** 2))
    if total == 0.0:
        return 0.0
    return float(np.sum(np.abs(rho[delta == 1]) ** 2) / total)


def _report_from_vector(liou, vector, residual, method):
    d = liou.hilbert_dim
    rho = vector.reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    trace = np.trace(rho).real
    if abs(trace) < 1e-12 * np.linalg.norm(rho):
        raise SolverError("candidate steady state is traceless")
    rho = rho / trace

    eigenvalues = np.linalg.eigvalsh(rho)
    if eigenvalues.min() < -1e-8:
        raise SolverError(
            f"steady state not positive (min eigenvalue {eigenvalues.min():.3e})"
        )

    n_c = liou.metadata["cavity_dim"]
    d_atom = liou.metadata["atom_dim"]
    populations = np.clip(np.real(np.diag(rho)), a_min=None, a_max=None)
    grid = populations.reshape(d_atom, n_c)
    labels = liou.metadata["labels"]
    atom_pops = {
        f"{int(ns)}_{int(nt)}": float(p)
        for (ns, nt), p in zip(labels, grid.sum(axis=1))
    }
    cavity_pops = grid.sum(axis=0)
    occupation = float(np.dot(np.arange(n_c), cavity_pops))

    return SteadyStateReport(
        rho_ss=rho,
        cavity_occupation=occupation,
        null_residual=residual,
        diagnostics={
            "atom_populations": atom_pops,
            "cavity_populations": [float(p) for p in cavity_pops],
            "min_rho_eigenvalue": float(eigenvalues.min()),
        },
        method=method,
    )


def steady_state(liou, method="auto", dense_limit=_DENSE_LIMIT_DEFAULT):
    """Steady state of the Liouvillian (the eigenmode at eigenvalue zero).

    The numerically obtained null vector is Hermitized, trace-normalized
    and checked for positivity; the reported residual ``||L v||`` is the
    pre-correction one (unit-norm eigenvector). Degenerate null spaces
    raise :class:`MultipleSteadyStates` rather than silently picking one.

    Notes
    -----
    The ``sector`` backend solves the charge-conserving part of the
    generator (the dropped two-photon coupling norm is available through
    :func:`spectral_gap` candidates metadata); its residual is measured
    against that reduced generator.
    """
    method = _resolve_method(liou, method, dense_limit)

    if method == "dense":
        values, vectors = _dense_decomposition(liou)
        radius = float(np.max(np.abs(values)))
        zero_idx = _zero_mode_checks(values, radius)
        v = vectors[:, zero_idx]
        residual = float(np.linalg.norm(liou.generator @ v))
        return _report_from_vector(liou, v, residual, "dense")

    if method == "sector":
        values, vectors, meta = _sector_eigensystem(liou, sectors=(0,))
        radius = max(float(np.max(np.abs(values))), liou.norm_bound() * 1e-6)
        zero_idx = _zero_mode_checks(values, radius)
        v = vectors[:, zero_idx]
        residual = float(np.linalg.norm(meta["generator"] @ v))
        return _report_from_vector(liou, v, residual, "sector")

    if method == "sparse":
        bound = liou.norm_bound()
        values, vectors = _sparse_candidates(
            liou, k=6, probes=(_DEGENERATE_REL * bound,)
        )
        zero_idx = _zero_mode_checks(values, bound)
        v = vectors[:, zero_idx]
        residual = float(np.linalg.norm(liou.generator @ v))
        return _report_from_vector(liou, v, residual, "sparse")

    raise ConfigError(f"unknown steady-state method {method!r}")


def spectral_gap(
    liou,
    method="auto",
    dense_limit=_DENSE_LIMIT_DEFAULT,
    k=12,
    sectors=(0, 1, 2),
):
    """Linewidth eigenvalue: the nonzero mode with smallest |Re|.

    Returns the gap |Re lambda| together with the mode's imaginary part
    (its oscillation frequency in this rotating frame) and, separately,
    the smallest |Re| among modes dominated by single-photon cavity
    coherences (the emission sector).

    The sparse backend probes shift-invert Arnoldi around 0 and around
    +i * omega_cavity, where the slow population and cavity-coherence
    modes sit; conjugate partners are implied. The sector backend solves
    the listed charge blocks exactly.
    """
    method = _resolve_method(liou, method, dense_limit)

    if method == "dense":
        values, vectors = _dense_decomposition(liou)
        radius = float(np.max(np.abs(values)))
        zero_idx = _zero_mode_checks(values, radius)
        mask = np.ones(values.size, dtype=bool)
        mask[zero_idx] = False
        candidates, cand_vectors = values[mask], vectors[:, mask]
    elif method == "sector":
        values, vectors, _ = _sector_eigensystem(liou, sectors=tuple(sectors))
        radius = float(np.max(np.abs(values)))
        zero_sector = np.abs(values) <= _ZERO_REL * radius
        if not np.any(zero_sector):
            raise SolverError("sector backend found no null mode")
        zero_idx = int(np.argmin(np.abs(values)))
        mask = np.ones(values.size, dtype=bool)
        mask[zero_idx] = False
        candidates, cand_vectors = values[mask], vectors[:, mask]
    elif method == "sparse":
        bound = liou.norm_bound()
        omega_c = liou.metadata.get("omega_cavity", 0.0)
        probes = [_DEGENERATE_REL * bound]
        if omega_c:
            probes.append(1j * omega_c)
        values, vectors = _sparse_candidates(liou, k=k, probes=probes)
        radius = bound
        zero_idx = _zero_mode_checks(values, radius)
        mask = np.abs(values) > _DEGENERATE_REL * radius
        candidates, cand_vectors = values[mask], vectors[:, mask]
        if candidates.size == 0:
            raise SolverError("no nonzero eigenvalue candidates found")
    else:
        raise ConfigError(f"unknown spectral-gap method {method!r}")

    order = np.argsort(np.abs(candidates.real), kind="stable")
    best = order[0]
    lam = candidates[best]
    vec = cand_vectors[:, best]
    vec = vec / np.linalg.norm(vec)
    residual = float(np.linalg.norm(liou.generator @ vec - lam * vec))
    scale = radius if method != "sector" else liou.norm_bound()
    if method != "sector" and residual > _GAP_RESIDUAL_REL * scale:
        raise SolverError(
            f"gap eigenpair residual {residual:.3e} exceeds "
            f"{_GAP_RESIDUAL_REL:.0e} * {scale:.3e}"
        )

    cavity_gap = None
    for idx in order:
        if _cavity_coherence_weight(liou, cand_vectors[:, idx]) > 0.5:
            cavity_gap = float(abs(candidates[idx].real))
            break

    return GapResult(
        gap=float(abs(lam.real)),
        imag=float(abs(lam.imag)),
        cavity_sector_gap=cavity_gap,
        residual=residual,
        method=method,
        candidates=np.sort_complex(candidates[order[: min(len(order), 20)]]),
    )


def solve_operating_point(
    liou, method="auto", dense_limit=_DENSE_LIMIT_DEFAULT, gap_sectors=(0, 1, 2)
):
    """Steady state plus spectral gap; fills the linewidth fields."""
    report = steady_state(liou, method=method, dense_limit=dense_limit)
    gap = spectral_gap(
        liou, method=method, dense_limit=dense_limit, sectors=gap_sectors
    )
    report.linewidth = gap.gap
    report.cavity_sector_linewidth = gap.cavity_sector_gap
    omega_c = liou.metadata.get("omega_cavity", 0.0)
    if gap.cavity_sector_gap is not None and abs(gap.gap - gap.cavity_sector_gap) <= max(
        1e-9, 1e-6 * gap.gap
    ):
        report.emission_offset = gap.imag - omega_c
    else:
        report.emission_offset = gap.imag
    report.method = gap.method
    return report


# ---------------------------------------------------------------------------
# Time integration (independent verification route)
# ---------------------------------------------------------------------------


def evolve_rk4(generator, rho0, t_final, dt):
    """Fixed-step RK4 integration of rho_dot = L rho.

    Deliberately independent of the eigensolvers: only matrix-vector
    products with the generator are used. Returns rho(t_final).
    """
    gen = sp.csr_matrix(generator) if sp.issparse(generator) else np.asarray(generator)
    v = np.asarray(rho0, dtype=complex).reshape(-1)
    steps = int(np.ceil(t_final / dt))
    h = t_final / steps
    for _ in range(steps):
        k1 = gen @ v
        k2 = gen @ (v + 0.5 * h * k1)
        k3 = gen @ (v + 0.5 * h * k2)
        k4 = gen @ (v + h * k3)
        v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    d = int(round(np.sqrt(v.size)))
    return v.reshape(d, d)


def trace_distance(rho_a, rho_b):
    """1/2 * trace norm of the difference of two density matrices."""
    diff = rho_a - rho_b
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))
