"""Single-component quantum problems: SNAIL, transmon, and cavity.

Builds the phase-basis Hamiltonian of each circuit component on a
:class:`~masersim.grids.PhaseGrid`, solves for its low-lying spectrum,
and fits SNAIL circuit parameters to measured transition frequencies.

The SNAIL is special: a stray linear inductance splits its node phase
``phi_s`` from the junction-loop phase ``phi_s1``, and the potential seen
by ``phi_s`` is obtained by minimizing over ``phi_s1`` at every grid
point (see :func:`snail_internal_phase`).
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla
import scipy.optimize as sopt
import scipy.sparse.linalg as spla

from masersim import constants
from masersim.errors import ConfigError, FitError, SolverError
from masersim.grids import (
    BandedOperator,
    Open,
    Periodic,
    PhaseGrid,
    build_first_derivative,
    build_second_derivative,
)

TWO_PI = constants.TWO_PI
_DENSE_EIG_LIMIT = 2000
_ALPHA_RTOL = 1e-6


def _require_positive(**kwargs):
    for name, value in kwargs.items():
        if not value > 0:
            raise ConfigError(f"{name} must be positive, got {value}")


@dataclass(frozen=True)
class SnailParams:
    """SNAIL circuit parameters.

    ``i_s1`` is the small-junction critical current, ``i_s2`` the critical
    current of each of the two large junctions (microamperes), ``L_lin``
    the stray linear inductance (nH), ``C_s`` the effective capacitance
    (fF), and ``flux_ext`` the external flux through the loop as a
    dimensionless phase offset (2*pi per flux quantum). ``alpha`` is the
    junction energy ratio i_s1/i_s2; if given it must be consistent with
    the currents.
    """

    i_s1: float
    i_s2: float
    L_lin: float
    C_s: float
    flux_ext: float = 0.0
    alpha: float | None = None

    def __post_init__(self):
        _require_positive(i_s1=self.i_s1, i_s2=self.i_s2, L_lin=self.L_lin, C_s=self.C_s)
        if self.alpha is not None:
            ratio = self.i_s1 / self.i_s2
            if abs(self.alpha - ratio) > _ALPHA_RTOL * max(abs(ratio), 1e-30):
                raise ConfigError(
                    f"alpha={self.alpha} inconsistent with i_s1/i_s2={ratio}"
                )

    @property
    def junction_ratio(self):
        return self.i_s1 / self.i_s2


@dataclass(frozen=True)
class TransmonParams:
    """Flux-tunable transmon (two-junction SQUID) parameters."""

    i_t1: float
    i_t2: float
    C_t: float
    flux_ext: float = 0.0

    def __post_init__(self):
        _require_positive(i_t1=self.i_t1, i_t2=self.i_t2, C_t=self.C_t)


@dataclass(frozen=True)
class CavityParams:
    """Harmonic maser-cavity parameters."""

    C_c: float
    L_c: float

    def __post_init__(self):
        _require_positive(C_c=self.C_c, L_c=self.L_c)

    @property
    def bare_omega(self):
        """Bare LC angular frequency in rad/ns."""
        return 1000.0 / math.sqrt(self.L_c * self.C_c)


@dataclass(frozen=True)
class ComponentSpectrum:
    """Low-lying eigensolution of one component.

    ``energies`` are angular frequencies (rad/ns, hbar = 1), sorted
    ascending. ``wavefunctions`` has one eigenfunction per column,
    orthonormal under the grid quadrature ``sum(psi_n psi_m) * h``.
    ``d1_elements[n, m]`` is the matrix element of d/dphi between
    eigenfunctions n and m (real antisymmetric for the real
    eigenfunctions produced here).
    """

    energies: np.ndarray
    wavefunctions: np.ndarray
    d1_elements: np.ndarray
    grid: PhaseGrid
    meta: dict = field(default_factory=dict)

    @property
    def n_levels(self):
        return self.energies.shape[0]

    def transition(self, lower, upper):
        """Transition angular frequency between two levels (rad/ns)."""
        return float(self.energies[upper] - self.energies[lower])

    def truncated(self, n_levels):
        if n_levels > self.n_levels:
            raise ConfigError(
                f"spectrum has {self.n_levels} levels, need {n_levels}"
            )
        return replace(
            self,
            energies=self.energies[:n_levels],
            wavefunctions=self.wavefunctions[:, :n_levels],
            d1_elements=self.d1_elements[:n_levels, :n_levels],
        )


# ---------------------------------------------------------------------------
# SNAIL internal phase
# ---------------------------------------------------------------------------


def _snail_energy_scales(params):
    ej1 = constants.JOSEPHSON_RAD_NS_PER_UA * params.i_s1
    ej2 = constants.JOSEPHSON_RAD_NS_PER_UA * params.i_s2
    el = constants.INDUCTIVE_RAD_NS_NH / params.L_lin
    return ej1, ej2, el


def snail_loop_potential(params, phi_s, phi_s1):
    """SNAIL potential (rad/ns) at node phase phi_s and loop phase phi_s1."""
    ej1, ej2, el = _snail_energy_scales(params)
    return (
        -ej1 * np.cos(phi_s1 + params.flux_ext)
        - 2.0 * ej2 * np.cos(phi_s1 / 2.0)
        + 0.5 * el * (phi_s - phi_s1) ** 2
    )


def _loop_grad(params, phi_s, phi_s1):
    ej1, ej2, el = _snail_energy_scales(params)
    return (
        ej1 * math.sin(phi_s1 + params.flux_ext)
        + ej2 * math.sin(phi_s1 / 2.0)
        - el * (phi_s - phi_s1)
    )


def _loop_curvature(params, phi_s1):
    ej1, ej2, el = _snail_energy_scales(params)
    return (
        ej1 * math.cos(phi_s1 + params.flux_ext)
        + 0.5 * ej2 * math.cos(phi_s1 / 2.0)
        + el
    )


_GRAD_RTOL = 1e-10
_MAX_NEWTON_STEP = 0.5


def _newton_polish(params, phi_s, x0):
    """Damped Newton on the gradient; returns None if it fails to settle."""
    x = x0
    for _ in range(100):
        grad = _loop_grad(params, phi_s, x)
        curv = _loop_curvature(params, x)
        scale = max(abs(curv), _snail_energy_scales(params)[2] * 1e-6)
        if abs(grad) < _GRAD_RTOL * scale and curv > 0:
            return x
        if curv <= 0:
            return None
        step = grad / curv
        x -= max(-_MAX_NEWTON_STEP, min(_MAX_NEWTON_STEP, step))
    return None


def _global_internal_phase(params, phi_s):
    """Coarse scan over phi_s1 in phi_s + [-2pi, 2pi], then refine."""
    offsets = np.linspace(-TWO_PI, TWO_PI, 241)
    candidates = phi_s + offsets
    values = snail_loop_potential(params, phi_s, candidates)
    best = int(np.argmin(values))
    lo = candidates[max(best - 1, 0)]
    hi = candidates[min(best + 1, candidates.size - 1)]
    res = sopt.minimize_scalar(
        lambda x: snail_loop_potential(params, phi_s, x),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    x = _newton_polish(params, phi_s, float(res.x))
    if x is None:
        raise SolverError(
            f"SNAIL internal-phase minimization failed at phi_s={phi_s}"
        )
    return x


def snail_internal_phase(params, phi_s, initial=None):
    """Loop phase phi_s1 minimizing the SNAIL potential at node phase phi_s.

    With no ``initial`` guess the minimum is located by a global scan over
    phi_s1 in [phi_s - 2pi, phi_s + 2pi] followed by bounded refinement;
    this selects the branch continuously connected to phi_s1 = phi_s in
    the stiff-inductance limit. A warm start from ``initial`` switches to
    damped Newton, used for branch-continuous grid scans.
    """
    if initial is not None:
        x = _newton_polish(params, phi_s, initial)
        if x is not None:
            return x
    return _global_internal_phase(params, phi_s)


def snail_internal_phase_profile(params, phi_values):
    """Branch-continuous internal phase along an ordered array of phi_s.

    The first point is solved globally; each subsequent point warm-starts
    from its neighbor's solution to avoid branch jumps near potential
    degeneracies.
    """
    phi_values = np.asarray(phi_values, dtype=float)
    out = np.empty_like(phi_values)
    prev = None
    for k, phi in enumerate(phi_values):
        out[k] = snail_internal_phase(params, float(phi), initial=prev)
        prev = out[k]
    return out


def snail_effective_potential(params, phi_values):
    """Minimized SNAIL potential evaluated along phi_s grid values."""
    phi_values = np.asarray(phi_values, dtype=float)
    phi1 = snail_internal_phase_profile(params, phi_values)
    return snail_loop_potential(params, phi_values, phi1)


# ---------------------------------------------------------------------------
# Hamiltonian builders
# ---------------------------------------------------------------------------


def _check_periodic(grid, period, component):
    if not grid.is_periodic or abs(grid.boundary.period - period) > 1e-9 * period:
        raise ConfigError(
            f"{component} grid must be periodic with period {period:.6f}"
        )


def _kinetic(grid, kinetic_scale):
    """-(kinetic_scale / 2) * d^2/dphi^2 as a banded operator."""
    return build_second_derivative(grid).scaled(-0.5 * kinetic_scale)


def build_snail_hamiltonian(params, grid, kinetic_scale=None):
    """SNAIL Hamiltonian on a 4*pi-periodic phase grid.

    ``kinetic_scale`` is the inverse-capacitance energy coefficient in
    rad/ns; when None the bare value for ``params.C_s`` is used. The
    composite assembly passes the first-order coupling-corrected value.
    """
    _check_periodic(grid, 2.0 * TWO_PI, "SNAIL")
    if kinetic_scale is None:
        kinetic_scale = constants.INV_CAP_RAD_NS_FF / params.C_s
    potential = snail_effective_potential(params, grid.points)
    return _kinetic(grid, kinetic_scale).add_diagonal(potential)


def build_transmon_hamiltonian(params, grid, kinetic_scale=None):
    """Flux-tunable transmon Hamiltonian on a 2*pi-periodic phase grid."""
    _check_periodic(grid, TWO_PI, "transmon")
    if kinetic_scale is None:
        kinetic_scale = constants.INV_CAP_RAD_NS_FF / params.C_t
    ej1 = constants.JOSEPHSON_RAD_NS_PER_UA * params.i_t1
    ej2 = constants.JOSEPHSON_RAD_NS_PER_UA * params.i_t2
    phi = grid.points
    potential = -ej1 * np.cos(phi + params.flux_ext) - ej2 * np.cos(phi)
    return _kinetic(grid, kinetic_scale).add_diagonal(potential)


def build_cavity_hamiltonian(params, grid, kinetic_scale=None):
    """Harmonic cavity Hamiltonian on an open phase grid."""
    if grid.is_periodic:
        raise ConfigError("cavity grid must be open")
    if kinetic_scale is None:
        kinetic_scale = constants.INV_CAP_RAD_NS_FF / params.C_c
    el = constants.INDUCTIVE_RAD_NS_NH / params.L_c
    potential = 0.5 * el * grid.points**2
    return _kinetic(grid, kinetic_scale).add_diagonal(potential)


# ---------------------------------------------------------------------------
# Eigensolver
# ---------------------------------------------------------------------------


def _canonical_sign(vectors):
    """Flip each column so its largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def solve_spectrum(hamiltonian, grid, n_levels, meta=None):
    """Lowest eigenpairs of a banded component Hamiltonian.

    Dense symmetric solve up to 2000 points; above that, the open
    (strictly tridiagonal) case uses a LAPACK tridiagonal subset solver
    and the periodic case shift-invert Lanczos. Eigenfunction signs are
    canonicalized (largest-magnitude sample positive) so downstream
    matrix-element tables are reproducible.
    """
    if not isinstance(hamiltonian, BandedOperator):
        raise ConfigError("solve_spectrum expects a BandedOperator")
    n = hamiltonian.dimension
    if n != grid.n_points:
        raise ConfigError("Hamiltonian dimension does not match the grid")
    if not (
        np.array_equal(hamiltonian.lower, hamiltonian.upper)
        and hamiltonian.corner_tr == hamiltonian.corner_bl
    ):
        raise ConfigError("component Hamiltonian must be symmetric")
    if n_levels < 1 or n_levels > n - 2:
        raise ConfigError(f"n_levels={n_levels} out of range for n={n}")

    if n <= _DENSE_EIG_LIMIT:
        energies, vectors = sla.eigh(
            hamiltonian.to_dense(), subset_by_index=(0, n_levels - 1)
        )
    elif not grid.is_periodic:
        energies, vectors = sla.eigh_tridiagonal(
            hamiltonian.diag,
            hamiltonian.upper,
            select="i",
            select_range=(0, n_levels - 1),
        )
    else:
        # Gershgorin lower bound puts the shift strictly below the spectrum,
        # so shift-invert magnitude ordering returns the lowest levels.
        bound = float(
            np.min(hamiltonian.diag)
            - 2.0 * np.max(np.abs(hamiltonian.lower))
            - abs(hamiltonian.corner_tr)
        )
        try:
            energies, vectors = spla.eigsh(
                hamiltonian.to_sparse(),
                k=n_levels,
                sigma=bound - 1.0,
                which="LM",
                v0=np.ones(n),
            )
        except spla.ArpackNoConvergence as exc:
            raise SolverError(f"eigensolver did not converge: {exc}") from exc

    order = np.argsort(energies)
    energies = np.asarray(energies, dtype=float)[order]
    vectors = _canonical_sign(np.asarray(vectors, dtype=float)[:, order])

    gram = vectors.T @ vectors
    residual = np.max(np.abs(gram - np.eye(n_levels)))
    if residual > 1e-8:
        raise SolverError(f"eigenvectors not orthonormal (residual {residual:.2e})")

    d1 = build_first_derivative(grid)
    d1_elements = vectors.T @ d1.apply(vectors)

    spectrum_meta = dict(meta or {})
    spectrum_meta.setdefault("grid_width", grid.width)
    return ComponentSpectrum(
        energies=energies,
        wavefunctions=vectors / math.sqrt(grid.spacing),
        d1_elements=d1_elements,
        grid=grid,
        meta=spectrum_meta,
    )


def solve_snail(params, grid, n_levels, kinetic_scale=None):
    spectrum = solve_spectrum(
        build_snail_hamiltonian(params, grid, kinetic_scale),
        grid,
        n_levels,
        meta={"component": "snail", "capacitance_fF": params.C_s, "params": params},
    )
    return spectrum


def solve_transmon(params, grid, n_levels, kinetic_scale=None):
    return solve_spectrum(
        build_transmon_hamiltonian(params, grid, kinetic_scale),
        grid,
        n_levels,
        meta={"component": "transmon", "capacitance_fF": params.C_t, "params": params},
    )


def solve_cavity(params, grid, n_levels, kinetic_scale=None):
    return solve_spectrum(
        build_cavity_hamiltonian(params, grid, kinetic_scale),
        grid,
        n_levels,
        meta={"component": "cavity", "capacitance_fF": params.C_c, "params": params},
    )


def default_snail_grid(n_points=1000):
    return PhaseGrid.periodic(n_points, 2.0 * TWO_PI)


def default_transmon_grid(n_points=1000):
    return PhaseGrid.periodic(n_points, TWO_PI)


def default_cavity_grid(n_points=14000, spacing=0.0003):
    return PhaseGrid.open_centered(n_points, spacing)


# ---------------------------------------------------------------------------
# SNAIL parameter fit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SnailFitReport:
    """Outcome of :func:`fit_snail_parameters`."""

    params: SnailParams
    residuals_ghz: np.ndarray
    rms_ghz: float
    n_evaluations: int
    message: str


def snail_ge_frequency_ghz(params, grid, kinetic_scale=None):
    """Ground-to-first-excited transition of the SNAIL in GHz."""
    spectrum = solve_spectrum(
        build_snail_hamiltonian(params, grid, kinetic_scale), grid, 2
    )
    return constants.ghz_from_omega(spectrum.transition(0, 1))


def load_snail_fit_data(path):
    """Read (flux, frequency) pairs from a two-column delimited text file.

    Column 1 is external flux in units of the flux quantum, column 2 the
    ge transition frequency in GHz; a non-numeric header line is allowed.
    Returns an array of (flux_ext in radians, frequency in GHz) rows.
    """
    rows = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.replace(",", " ").split()
            try:
                values = [float(p) for p in parts]
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise ConfigError(f"{path}:{lineno}: not a data row: {text!r}")
            if len(values) != 2:
                raise ConfigError(f"{path}:{lineno}: expected two columns")
            rows.append((values[0] * TWO_PI, values[1]))
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float)


def fit_snail_parameters(
    data,
    initial,
    fixed_C_s,
    grid_points=1000,
    max_evaluations=400,
):
    """Least-squares fit of (i_s1, i_s2, L_lin) to ge-transition data.

    Parameters
    ----------
    data : array-like of shape (n, 2)
        Rows of (flux_ext in radians, ge frequency in GHz); at least 3.
    initial : SnailParams
        Starting point; its C_s is ignored in favor of ``fixed_C_s``.
    fixed_C_s : float
        Capacitance (fF) held fixed during the fit.
    grid_points : int
        SNAIL grid size used for the model transition.
    max_evaluations : int
        Residual-evaluation budget for the optimizer.

    Returns
    -------
    SnailFitReport
        Fitted parameters with per-point residuals and their RMS.

    Notes
    -----
    Levenberg-Marquardt with a numerically differenced Jacobian, run in
    log-parameter space so all three parameters stay positive.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ConfigError("fit data must be an (n, 2) array")
    if data.shape[0] < 3:
        raise ConfigError("fit needs at least 3 data points (3 parameters)")
    fluxes = data[:, 0]
    freqs = data[:, 1]
    if np.ptp(fluxes) <= 0:
        raise FitError("degenerate fit data: all points at the same flux")

    grid = default_snail_grid(grid_points)
    evaluations = 0

    def residuals(log_params):
        nonlocal evaluations
        evaluations += 1
        i_s1, i_s2, l_lin = np.exp(log_params)
        model = []
        for flux in fluxes:
            params = SnailParams(i_s1, i_s2, l_lin, fixed_C_s, flux_ext=flux)
            model.append(snail_ge_frequency_ghz(params, grid))
        return np.asarray(model) - freqs

    x0 = np.log([initial.i_s1, initial.i_s2, initial.L_lin])
    try:
        result = sopt.least_squares(
            residuals, x0, method="lm", max_nfev=max_evaluations
        )
    except np.linalg.LinAlgError as exc:
        raise FitError(f"singular Jacobian in SNAIL fit: {exc}") from exc
    if not result.success:
        raise FitError(f"SNAIL fit did not converge: {result.message}")

    i_s1, i_s2, l_lin = np.exp(result.x)
    fitted = SnailParams(i_s1, i_s2, l_lin, fixed_C_s, flux_ext=float(fluxes[0]))
    rms = float(np.sqrt(np.mean(result.fun**2)))
    return SnailFitReport(
        params=fitted,
        residuals_ghz=result.fun.copy(),
        rms_ghz=rms,
        n_evaluations=evaluations,
        message=result.message,
    )
