"""Unit system and reference constants.

Internal unit conventions, used consistently by every module:

* energies are angular frequencies with hbar = 1, in rad/ns;
* currents in microamperes, capacitances in femtofarads, inductances in
  nanohenries;
* phases are dimensionless node phases (node flux divided by the reduced
  flux quantum phi0 = hbar/2e); external fluxes are likewise dimensionless
  phase offsets (2*pi corresponds to one full flux quantum through a loop).

With these choices the three circuit energy scales become simple
multiplicative constants:

* Josephson energy of a junction with critical current i:
  ``JOSEPHSON_RAD_NS_PER_UA * i``
* kinetic (charging) scale of a capacitance C entering ``-(1/2C) d^2/dphi^2``:
  ``INV_CAP_RAD_NS_FF / C``
* inductive scale of an inductance L entering ``(1/2L) phi^2``:
  ``INDUCTIVE_RAD_NS_NH / L``

Sanity identity: a bare LC mode has angular frequency exactly
``1000 / sqrt(L * C)`` rad/ns, i.e. ``159.155 / sqrt(L*C)`` GHz.
"""

import math

# CODATA / SI
ELEMENTARY_CHARGE = 1.602176634e-19  # C (exact)
HBAR = 1.054571817e-34  # J s
PHI0 = HBAR / (2.0 * ELEMENTARY_CHARGE)  # reduced flux quantum, Wb

# Energy-scale conversion factors (rad/ns per unit of the named quantity).
JOSEPHSON_RAD_NS_PER_UA = 1e-15 / (2.0 * ELEMENTARY_CHARGE)
INV_CAP_RAD_NS_FF = HBAR * 1e-9 / (PHI0**2 * 1e-15)
INDUCTIVE_RAD_NS_NH = PHI0**2 / HBAR

TWO_PI = 2.0 * math.pi


def omega_from_ghz(f_ghz):
    """Ordinary frequency in GHz -> angular frequency in rad/ns."""
    return TWO_PI * f_ghz


def ghz_from_omega(omega):
    """Angular frequency in rad/ns -> ordinary frequency in GHz."""
    return omega / TWO_PI


def rate_from_mhz(rate_over_2pi_mhz):
    """Decay rate quoted as chi/2pi in MHz -> chi in rad/ns."""
    return TWO_PI * rate_over_2pi_mhz * 1e-3


def hz_from_omega(omega):
    """Angular frequency in rad/ns -> ordinary frequency in Hz."""
    return omega / TWO_PI * 1e9


# ---------------------------------------------------------------------------
# Reference values reported for the fabricated device. These are
# documentation anchors used in docs and loose-tolerance checks; none of
# them is a calibration input to the simulator.
# ---------------------------------------------------------------------------

REF_SNAIL_FREQ_GHZ = 5.76            # operating point of the lossy SNAIL mode
REF_SNAIL_KAPPA_MHZ = 24.5           # kappa_s / 2pi
REF_SNAIL_ALPHA = 0.3                # small/large junction energy ratio
REF_SNAIL_CAPACITANCE_QUOTED_PF = 341.0  # fitted value as quoted (see docs)

REF_CAVITY_FREQ_GHZ = 6.971          # bare maser-cavity frequency
REF_CAVITY_LINEWIDTH_KHZ = 19.7      # bare cavity linewidth, Gamma_c / 2pi

REF_G_TC_MHZ = 0.44                  # transmon-cavity coupling, ge crossing
REF_G_GF_HALF_KHZ = 15.12            # two-photon gf/2 crossing splitting / 2

REF_BEST_MASER_LINEWIDTH_HZ = 54.0
REF_AMPLITUDE_SWEEP_LINEWIDTH_HZ = 53.028
REF_NARROWING_RATIO = 365.0          # bare linewidth / best maser linewidth

REF_PHASE_CORRELATION_TIME_S = 0.026
REF_TIME_DOMAIN_LINEWIDTH_HZ = 38.0

REF_PUMP_UP_RATE_MHZ = 4.67          # Gamma^p_ge / 2pi at a reference bias
REF_MAP_PUMP_UP_RATES_MHZ = (0.178, 0.475, 1.19, 2.81)  # the four map powers
