"""Assembly of the coupled SNAIL-transmon-cavity system.

The capacitive couplings enter in two places: the first-order-corrected
inverse capacitance matrix renormalizes each component's kinetic term,
and the off-diagonal entries produce derivative-derivative coupling
operators between components. The SNAIL and transmon are diagonalized
together into the artificial-atom basis, whose eigenstates are labeled
by their dominant product state (SNAIL photons, transmon photons). The
parametric pump is reduced to its photon-number-selective part and the
whole problem is rotated frame-wise by the pump frequency per SNAIL
photon, leaving a stationary Hamiltonian.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from masersim import constants
from masersim.errors import ConfigError, LabelAssignmentError
from masersim.components import ComponentSpectrum

logger = logging.getLogger(__name__)

_COUPLING_RATIO_WARN = 0.1
_OVERLAP_WARN = 0.5
_OVERLAP_STRICT = 1.0 / np.sqrt(2.0)
_OVERLAP_FAIL = 0.25


@dataclass(frozen=True)
class CouplingParams:
    """Coupling capacitances between SNAIL-transmon and transmon-cavity."""

    C_st: float
    C_tc: float

    def __post_init__(self):
        if self.C_st < 0 or self.C_tc < 0:
            raise ConfigError("coupling capacitances must be non-negative")


def full_capacitance_matrix(C_s, C_t, C_c, coupling):
    """The 3x3 capacitance matrix of the coupled circuit (fF)."""
    c_st, c_tc = coupling.C_st, coupling.C_tc
    return np.array(
        [
            [C_s + c_st, c_st, 0.0],
            [c_st, C_t + c_st + c_tc, c_tc],
            [0.0, c_tc, C_c + c_tc],
        ]
    )


def inverse_capacitance_first_order(C_s, C_t, C_c, coupling):
    """Inverse capacitance matrix to first order in the couplings (1/fF).

    Diagonal entries are 1/C_j minus the adjacent couplings over C_j^2;
    off-diagonals are -C_st/(C_s C_t) and -C_tc/(C_t C_c); the
    SNAIL-cavity corner is exactly zero at this order.
    """
    for name, value in (("C_s", C_s), ("C_t", C_t), ("C_c", C_c)):
        if not value > 0:
            raise ConfigError(f"{name} must be positive, got {value}")
    c_st, c_tc = coupling.C_st, coupling.C_tc
    ratios = (c_st / C_s, c_st / C_t, c_tc / C_t, c_tc / C_c)
    if max(ratios) >= _COUPLING_RATIO_WARN:
        warnings.warn(
            "coupling/diagonal capacitance ratio "
            f"{max(ratios):.3f} >= {_COUPLING_RATIO_WARN}; first-order "
            "inverse may be inaccurate",
            stacklevel=2,
        )
    return np.array(
        [
            [1.0 / C_s - c_st / C_s**2, -c_st / (C_s * C_t), 0.0],
            [
                -c_st / (C_s * C_t),
                1.0 / C_t - (c_st + c_tc) / C_t**2,
                -c_tc / (C_t * C_c),
            ],
            [0.0, -c_tc / (C_t * C_c), 1.0 / C_c - c_tc / C_c**2],
        ]
    )


def kinetic_scales(C_s, C_t, C_c, coupling):
    """First-order-corrected kinetic coefficients (rad/ns) per component."""
    inv = inverse_capacitance_first_order(C_s, C_t, C_c, coupling)
    diag = np.diag(inv)
    return tuple(constants.INV_CAP_RAD_NS_FF * d for d in diag)


def coupling_prefactor(C_a, C_b, C_ab):
    """Energy prefactor (rad/ns) of a derivative-derivative coupling term."""
    return constants.INV_CAP_RAD_NS_FF * C_ab / (C_a * C_b)


def coupling_matrix_element_tables(spec_a, spec_b, prefactor):
    """Kinetic cross-coupling operator on the product space of two components.

    Returns ``prefactor * kron(d1_a, d1_b)`` built from the components'
    derivative matrix-element tables. Both quantized momenta carry -i,
    so the two sign factors cancel and the prefactor enters with the
    sign printed in the kinetic cross terms; the antisymmetry of each
    d1 table makes the assembled operator symmetric (Hermitian).
    """
    for spec in (spec_a, spec_b):
        if not isinstance(spec, ComponentSpectrum):
            raise ConfigError("coupling tables need ComponentSpectrum inputs")
    return prefactor * np.kron(spec_a.d1_elements, spec_b.d1_elements)


# ---------------------------------------------------------------------------
# Artificial atom
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AtomBasis:
    """Eigenbasis of the hybridized SNAIL + transmon Hamiltonian.

    ``states`` holds one eigenvector per column in the product basis
    with index ``p = n_snail * n_transmon_cutoff + n_transmon``.
    ``labels[k]`` is the (n_snail, n_transmon) product assignment of
    eigenstate k (a bijection onto the retained product grid) and
    ``overlaps[k]`` the magnitude of that dominant product amplitude.
    """

    energies: np.ndarray
    states: np.ndarray
    labels: np.ndarray
    overlaps: np.ndarray
    cutoffs: tuple
    meta: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.energies.shape[0]

    @property
    def n_snail_labels(self):
        return self.labels[:, 0]

    @property
    def n_transmon_labels(self):
        return self.labels[:, 1]

    def label_index(self, n_snail, n_transmon):
        """Index of the eigenstate labeled (n_snail, n_transmon)."""
        hits = np.nonzero(
            (self.labels[:, 0] == n_snail) & (self.labels[:, 1] == n_transmon)
        )[0]
        if hits.size != 1:
            raise KeyError(f"no unique state labeled ({n_snail}, {n_transmon})")
        return int(hits[0])

    def transform(self, product_operator):
        """Express an operator given in the product basis in this eigenbasis."""
        return self.states.T @ product_operator @ self.states

    def transition(self, label_from, label_to):
        """Transition angular frequency between two labeled states (rad/ns)."""
        return float(
            self.energies[self.label_index(*label_to)]
            - self.energies[self.label_index(*label_from)]
        )


def _greedy_labels(amplitudes):
    """Bijective eigenstate -> product-state assignment by descending overlap.

    Pairs are visited in order of decreasing |amplitude| with
    deterministic (state, product) index tie-breaking; each state and
    each product slot is used once, which guarantees a bijection.
    """
    d = amplitudes.shape[0]
    order = np.argsort(-amplitudes, axis=None, kind="stable")
    assignment = np.full(d, -1)
    product_taken = np.zeros(d, dtype=bool)
    state_taken = np.zeros(d, dtype=bool)
    assigned = 0
    for flat in order:
        state, product = divmod(int(flat), d)
        if state_taken[state] or product_taken[product]:
            continue
        assignment[state] = product
        state_taken[state] = True
        product_taken[product] = True
        assigned += 1
        if assigned == d:
            break
    return assignment


def build_artificial_atom(snail, transmon, coupling, cutoffs, strict=False):
    """Diagonalize the SNAIL + transmon Hamiltonian on a truncated product space.

    Parameters
    ----------
    snail, transmon : ComponentSpectrum
        Component spectra with at least the cutoff number of levels and
        capacitances recorded in their ``meta``.
    coupling : CouplingParams
        Only C_st enters here.
    cutoffs : (int, int)
        Retained (SNAIL, transmon) photon numbers.
    strict : bool
        Fail (instead of warn) when any label overlap drops below
        1/sqrt(2).

    Returns
    -------
    AtomBasis
        Labeled eigenbasis; label assignment is greedy maximum-overlap
        with deterministic tie-breaking and fails below overlap 0.25.
    """
    n_s, n_t = cutoffs
    if n_s < 1 or n_t < 1:
        raise ConfigError("cutoffs must be at least 1")
    snail_t = snail.truncated(n_s)
    transmon_t = transmon.truncated(n_t)

    try:
        c_s = snail.meta["capacitance_fF"]
        c_t = transmon.meta["capacitance_fF"]
    except KeyError as exc:
        raise ConfigError("component spectra must carry capacitance_fF meta") from exc

    prefactor = coupling_prefactor(c_s, c_t, coupling.C_st)
    h_aa = (
        np.kron(np.diag(snail_t.energies), np.eye(n_t))
        + np.kron(np.eye(n_s), np.diag(transmon_t.energies))
        + coupling_matrix_element_tables(snail_t, transmon_t, prefactor)
    )

    energies, states = sla.eigh(h_aa)
    idx = np.argmax(np.abs(states), axis=0)
    signs = np.sign(states[idx, np.arange(states.shape[1])])
    signs[signs == 0] = 1.0
    states = states * signs

    amplitudes = np.abs(states).T  # amplitudes[state, product]
    assignment = _greedy_labels(amplitudes)
    labels = np.column_stack(divmod(assignment, n_t))
    overlaps = amplitudes[np.arange(amplitudes.shape[0]), assignment]

    worst = float(np.min(overlaps))
    if worst < _OVERLAP_FAIL:
        raise LabelAssignmentError(
            f"product-state labeling degenerate: smallest overlap {worst:.3f}"
        )
    if strict and worst < _OVERLAP_STRICT:
        raise LabelAssignmentError(
            f"smallest label overlap {worst:.3f} below strict threshold "
            f"{_OVERLAP_STRICT:.3f}"
        )
    if worst < _OVERLAP_WARN:
        warnings.warn(
            f"hybridized states are far from product states "
            f"(smallest overlap {worst:.3f})",
            stacklevel=2,
        )

    return AtomBasis(
        energies=energies,
        states=states,
        labels=labels,
        overlaps=overlaps,
        cutoffs=(n_s, n_t),
        meta={
            "prefactor_st": prefactor,
            "snail_d1": snail_t.d1_elements,
            "transmon_d1": transmon_t.d1_elements,
            "snail_energies": snail_t.energies,
            "transmon_energies": transmon_t.energies,
        },
    )


def snail_d1_in_atom_basis(atom):
    """SNAIL derivative operator transformed into the atom eigenbasis."""
    n_s, n_t = atom.cutoffs
    return atom.transform(np.kron(atom.meta["snail_d1"], np.eye(n_t)))


def transmon_d1_in_atom_basis(atom):
    """Transmon derivative operator transformed into the atom eigenbasis."""
    n_s, n_t = atom.cutoffs
    return atom.transform(np.kron(np.eye(n_s), atom.meta["transmon_d1"]))


# ---------------------------------------------------------------------------
# Reduced pump
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReducedPump:
    """Photon-number-selective parametric pump.

    ``raising`` holds the stationary amplitudes of the SNAIL-photon
    raising part (each entry tagged with an implicit exp(-i omega_p t)
    in the lab frame); the Hermitian pump contribution to a Hamiltonian
    is ``raising + raising.T``. Amplitudes are the magnitudes of the
    full t = 0 pump matrix elements.
    """

    raising: np.ndarray
    amplitude: float
    omega_p: float
    rule: str


def build_reduced_pump(atom, snail_d1_atom, amplitude, omega_p, rule="strict"):
    """Reduce the pump to transitions changing both photon numbers by one.

    Parameters
    ----------
    atom : AtomBasis
    snail_d1_atom : ndarray
        SNAIL derivative operator in the atom eigenbasis.
    amplitude : float
        Pump amplitude (rad/ns); multiplies the dimensionless derivative
        matrix elements.
    omega_p : float
        Pump angular frequency (rad/ns).
    rule : {"strict", "loose"}
        "strict" keeps only co-incrementing pairs (SNAIL and transmon
        photon numbers both raised), matching the pump's energy
        direction; "loose" keeps any pair with both numbers changing by
        one.
    """
    if rule not in ("strict", "loose"):
        raise ConfigError(f"unknown pump rule {rule!r}")
    d = atom.dim
    ns = atom.n_snail_labels
    nt = atom.n_transmon_labels
    d_ns = ns[:, None] - ns[None, :]
    d_nt = nt[:, None] - nt[None, :]
    keep = (d_ns == 1) & ((d_nt == 1) if rule == "strict" else (np.abs(d_nt) == 1))
    raising = np.where(keep, np.abs(snail_d1_atom), 0.0) * amplitude
    return ReducedPump(raising=raising, amplitude=amplitude, omega_p=omega_p, rule=rule)


# ---------------------------------------------------------------------------
# Rotating frame
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RotatingFrameModel:
    """Stationary model in the SNAIL-photon-number rotating frame.

    Every basis state is rotated by exp(i * n_snail * omega_p * t),
    which shifts each diagonal energy down by n_snail * omega_p, makes
    the reduced pump stationary, and turns the transmon-cavity coupling
    elements that change the SNAIL label into rotating terms; those are
    dropped and their aggregate Frobenius norm recorded.
    """

    h_static: np.ndarray
    pump_static: np.ndarray
    dropped_terms_norm: float
    retained_tc_norm: float
    omega_p: float
    pump_amplitude: float
    atom: AtomBasis
    cavity_energies: np.ndarray
    omega_cavity: float
    pump_rule: str
    meta: dict = field(default_factory=dict)

    @property
    def cavity_dim(self):
        return self.cavity_energies.shape[0]

    @property
    def hilbert_dim(self):
        return self.h_static.shape[0]

    @property
    def hamiltonian(self):
        """Full stationary Hamiltonian including the Hermitian pump pair."""
        return self.h_static + self.pump_static + self.pump_static.conj().T


def transmon_cavity_coupling(atom, cavity, C_t, C_c, C_tc):
    """Transmon-cavity coupling operator on the (atom x cavity) space."""
    prefactor = coupling_prefactor(C_t, C_c, C_tc)
    return prefactor * np.kron(transmon_d1_in_atom_basis(atom), cavity.d1_elements)


def apply_rotating_frame(atom, cavity, h_tc, pump, omega_p):
    """Rotate by the SNAIL photon number and drop the rotating terms.

    Parameters
    ----------
    atom : AtomBasis
        Every eigenstate must carry a (SNAIL, transmon) label.
    cavity : ComponentSpectrum
        Truncated cavity mode appended as the second tensor factor.
    h_tc : ndarray
        Transmon-cavity coupling on the (atom x cavity) product space.
    pump : ReducedPump
        Reduced pump whose frequency tags cancel in this frame.
    omega_p : float
        Pump angular frequency (rad/ns); must match the pump's own tag.

    Returns
    -------
    RotatingFrameModel
        With diagonal energies shifted by -n_snail * omega_p, the
        SNAIL-label-preserving part of ``h_tc`` kept bit-exact, and the
        dropped rotating part's norm recorded.
    """
    if abs(omega_p - pump.omega_p) > 1e-12 * max(abs(omega_p), 1.0):
        raise ConfigError("pump frequency disagrees with the reduced pump tag")
    d_atom = atom.dim
    n_c = cavity.n_levels
    dim = d_atom * n_c
    if h_tc.shape != (dim, dim):
        raise ConfigError(f"h_tc must be {dim}x{dim}, got {h_tc.shape}")

    ns = atom.n_snail_labels
    same_snail = ns[:, None] == ns[None, :]
    mask = np.kron(same_snail, np.ones((n_c, n_c), dtype=bool))
    kept = np.where(mask, h_tc, 0.0)
    dropped_norm = float(np.linalg.norm(np.where(mask, 0.0, h_tc)))
    retained_norm = float(np.linalg.norm(kept))

    shifted_atom = atom.energies - ns * omega_p
    h_static = (
        np.kron(np.diag(shifted_atom), np.eye(n_c))
        + np.kron(np.eye(d_atom), np.diag(cavity.energies))
        + kept
    )
    pump_static = np.kron(pump.raising, np.eye(n_c))

    ratio = dropped_norm / retained_norm if retained_norm > 0 else np.inf
    logger.info(
        "rotating frame: dropped t-c norm %.3e, retained %.3e (ratio %.3f)",
        dropped_norm,
        retained_norm,
        ratio,
    )

    omega_cavity = float(np.mean(np.diff(cavity.energies))) if n_c > 1 else 0.0
    return RotatingFrameModel(
        h_static=h_static,
        pump_static=pump_static,
        dropped_terms_norm=dropped_norm,
        retained_tc_norm=retained_norm,
        omega_p=omega_p,
        pump_amplitude=pump.amplitude,
        atom=atom,
        cavity_energies=cavity.energies.copy(),
        omega_cavity=omega_cavity,
        pump_rule=pump.rule,
        meta={"dropped_over_retained": ratio},
    )
