"""Staged assembly from a ModelConfig to solved operating points.

The stages mirror the physics and are cached independently so sweeps
recompute only what an axis actually changes:

1. component spectra (SNAIL, transmon, cavity eigensolves) keyed by the
   component parameters and grid;
2. the artificial atom (SNAIL + transmon hybridization) keyed by the
   pair of component stages;
3. the rotating-frame model and Liouvillian, cheap to rebuild per point
   (pump frequency and amplitude live here).
"""

from dataclasses import dataclass

import numpy as np
import scipy.optimize as sopt

from masersim import composite, lindblad
from masersim.components import (
    PhaseGrid,
    solve_cavity,
    solve_snail,
    solve_transmon,
)
from masersim.errors import ConfigError, SolverError
from masersim.grids import PhaseGrid as _PhaseGrid  # re-export convenience

TWO_PI = 2.0 * np.pi


class ComponentCache:
    """Memoizes component spectra and atom bases by their inputs."""

    def __init__(self):
        self._spectra = {}
        self._atoms = {}

    def clear(self):
        self._spectra.clear()
        self._atoms.clear()

    def spectrum(self, kind, params, grid_key, n_levels, kinetic_scale, solve):
        key = (kind, params, grid_key, n_levels, round(kinetic_scale, 15))
        if key not in self._spectra:
            self._spectra[key] = solve()
        return self._spectra[key], key

    def atom(self, key, build):
        if key not in self._atoms:
            self._atoms[key] = build()
        return self._atoms[key]


def _kinetic_scales(config):
    return composite.kinetic_scales(
        config.snail.C_s, config.transmon.C_t, config.cavity.C_c, config.coupling
    )


def solve_components(config, cache=None):
    """Eigensolve the three components with corrected kinetic terms.

    Returns ((snail, transmon, cavity) spectra, stage keys) where the
    keys identify the cached stages for reuse bookkeeping.
    """
    k_s, k_t, k_c = _kinetic_scales(config)
    cache = cache if cache is not None else ComponentCache()

    snail_grid = PhaseGrid.periodic(config.snail_points, 2.0 * TWO_PI)
    transmon_grid = PhaseGrid.periodic(config.transmon_points, TWO_PI)
    cavity_grid = PhaseGrid.open_centered(config.cavity_points, config.cavity_spacing)

    snail, snail_key = cache.spectrum(
        "snail",
        config.snail,
        (config.snail_points,),
        config.n_snail,
        k_s,
        lambda: solve_snail(config.snail, snail_grid, config.n_snail, k_s),
    )
    transmon, transmon_key = cache.spectrum(
        "transmon",
        config.transmon,
        (config.transmon_points,),
        config.n_transmon,
        k_t,
        lambda: solve_transmon(config.transmon, transmon_grid, config.n_transmon, k_t),
    )
    cavity, cavity_key = cache.spectrum(
        "cavity",
        config.cavity,
        (config.cavity_points, config.cavity_spacing),
        config.n_cavity,
        k_c,
        lambda: solve_cavity(config.cavity, cavity_grid, config.n_cavity, k_c),
    )
    return (snail, transmon, cavity), (snail_key, transmon_key, cavity_key)


def build_atom(config, snail, transmon, cache=None, stage_keys=None):
    """Hybridized artificial atom for the configured cutoffs."""

    def build():
        return composite.build_artificial_atom(
            snail,
            transmon,
            config.coupling,
            (config.n_snail, config.n_transmon),
            strict=config.solver.strict_labels,
        )

    if cache is None:
        return build()
    key = (stage_keys, config.coupling, (config.n_snail, config.n_transmon),
           config.solver.strict_labels)
    return cache.atom(key, build)


def build_frame_model(config, atom, cavity):
    """Reduced pump plus rotating-frame reduction for one operating point."""
    pump = composite.build_reduced_pump(
        atom,
        composite.snail_d1_in_atom_basis(atom),
        config.pump_amplitude,
        config.omega_p,
        rule=config.pump_rule,
    )
    h_tc = composite.transmon_cavity_coupling(
        atom, cavity, config.transmon.C_t, config.cavity.C_c, config.coupling.C_tc
    )
    return composite.apply_rotating_frame(atom, cavity, h_tc, pump, config.omega_p)


def build_liouvillian(config, cache=None):
    """Full chain: components -> atom -> frame -> Liouvillian."""
    (snail, transmon, cavity), keys = solve_components(config, cache)
    atom = build_atom(config, snail, transmon, cache, stage_keys=keys[:2])
    model = build_frame_model(config, atom, cavity)
    jumps = lindblad.build_jump_inventory(
        atom, config.n_cavity, (config.chi_s, config.chi_t, config.chi_c)
    )
    return lindblad.build_liouvillian(model, jumps)


def solve_point(config, cache=None, method=None):
    """Steady state and linewidth at one operating point."""
    liou = build_liouvillian(config, cache)
    return lindblad.solve_operating_point(
        liou,
        method=method if method is not None else config.solver.method,
        dense_limit=config.solver.dense_limit,
    )


# ---------------------------------------------------------------------------
# Avoided crossings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CrossingResult:
    """Half the minimum branch splitting and where it occurs."""

    coupling_rate: float
    flux_at_minimum: float
    minimum_splitting: float
    scan_splittings: np.ndarray


def minimum_splitting(splitting_fn, scan_values, refine_tol=1e-10):
    """Locate the minimum of a branch-splitting curve over a scan.

    The scan must bracket the minimum (it may not occur at either
    endpoint); the bracketing interval is then refined by bounded
    scalar minimization of the continuous splitting function.
    """
    scan_values = np.asarray(scan_values, dtype=float)
    if scan_values.size < 3:
        raise ConfigError("scan needs at least 3 points")
    splits = np.array([splitting_fn(v) for v in scan_values])
    k = int(np.argmin(splits))
    if k == 0 or k == splits.size - 1:
        raise SolverError("resonance not bracketed by the scan")
    res = sopt.minimize_scalar(
        splitting_fn,
        bounds=(scan_values[k - 1], scan_values[k + 1]),
        method="bounded",
        options={"xatol": refine_tol * max(abs(scan_values[-1] - scan_values[0]), 1.0)},
    )
    return float(res.x), float(res.fun), splits


def _static_transitions(config, cache):
    """Eigen-transitions of the coupled atom + cavity system, no pump."""
    (snail, transmon, cavity), keys = solve_components(config, cache)
    atom = build_atom(config, snail, transmon, cache, stage_keys=keys[:2])
    h_tc = composite.transmon_cavity_coupling(
        atom, cavity, config.transmon.C_t, config.cavity.C_c, config.coupling.C_tc
    )
    n_c = cavity.n_levels
    h_full = (
        np.kron(np.diag(atom.energies), np.eye(n_c))
        + np.kron(np.eye(atom.dim), np.diag(cavity.energies))
        + h_tc
    )
    energies = np.linalg.eigvalsh(h_full)
    omega_c = float(np.mean(np.diff(cavity.energies)))
    # indices of the product states (atom eigenstate k, cavity n)
    e_index = atom.label_index(0, 1) * n_c  # |0, e> with empty cavity
    return energies, omega_c, atom, e_index


def _branch_splitting(config, cache, transition):
    energies, omega_c, atom, _ = _static_transitions(config, cache)
    transitions = energies - energies[0]
    if transition == "ge":
        target = omega_c
    elif transition == "gf_half":
        target = 2.0 * omega_c
    elif transition == "ef":
        e_state = atom.transition((0, 0), (0, 1))
        target = e_state + omega_c
        transitions = energies - energies[0]
    else:
        raise ConfigError(f"unknown transition {transition!r}")
    nearest = np.argsort(np.abs(transitions - target))[:2]
    pair = np.sort(transitions[nearest])
    return float(pair[1] - pair[0])


def avoided_crossing_splitting(config, flux_scan, transition):
    """Coupling rate from the minimum splitting of an avoided crossing.

    Scans the transmon flux through the resonance between a dressed
    transmon transition (``"ge"``, two-photon ``"gf_half"``, or
    ``"ef"``) and the cavity, tracking the two hybridized branches, and
    returns half of the minimum splitting.

    The cavity grid can be coarse here; only its low levels enter. For
    ``gf_half`` the transmon cutoff must retain the f state and the
    cavity cutoff two photons.
    """
    if transition in ("gf_half", "ef") and config.n_transmon < 3:
        raise ConfigError("transition needs the transmon f state (cutoff >= 3)")
    if transition == "gf_half" and config.n_cavity < 3:
        raise ConfigError("two-photon crossing needs cavity cutoff >= 3")
    cache = ComponentCache()

    def splitting(flux):
        return _branch_splitting(
            config.with_value("transmon.flux_ext_rad", float(flux)),
            cache,
            transition,
        )

    flux_min, split_min, scan = minimum_splitting(splitting, flux_scan)
    return CrossingResult(
        coupling_rate=0.5 * split_min,
        flux_at_minimum=flux_min,
        minimum_splitting=split_min,
        scan_splittings=scan,
    )
