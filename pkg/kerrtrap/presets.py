"""Built-in parameter presets.

``paper-sec3`` is the quantum-dot design point: a 1 mm doped photonic
crystal with a 1 μm² beam. It is the single source of those numbers;
scenarios and tests refer to it by name.

Four inputs are not part of that design point and are chosen here:

* ``Omega_dA_prime``, the storage drive, is ten times weaker than the trapping
  drive.
* ``T_in`` and ``T_p`` are the input and probe durations.
* ``sigma_abs_A`` is the radiative-limit cross-section ``6π/k²`` of the
  signal transition.
* ``p_s`` is the structure period, placed at the Bragg condition of the
  signal carrier.
"""

import math

from .params import SPEED_OF_LIGHT, PhysicalParams
from .utils import ConfigError

_OMEGA = 3e15
_K = _OMEGA / SPEED_OF_LIGHT


PAPER_SEC3 = PhysicalParams(
    L=0.1,
    S=1e-8,
    rho_A=1e12,
    rho_B=1e12,
    omega_p=_OMEGA,
    omega_signal=_OMEGA,
    Omega_dA=5e8,
    Omega_dA_prime=5e7,
    Omega_dB=2e7,
    Delta_B=1e8,
    gamma_a=1e7,
    gamma_d=1e7,
    gamma_bc=1e4,
    delta_omega_PBG=1e14,
    p_s=math.pi / _K,
    T_in=1e-7,
    T_p=2e-6,
    sigma_abs_A=6 * math.pi / _K ** 2,
    c=SPEED_OF_LIGHT,
)


PRESETS = {"paper-sec3": PAPER_SEC3}


def get_preset(name):
    """Return the :class:`PhysicalParams` registered under ``name``."""
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"Unknown preset '{name}'; available: {', '.join(sorted(PRESETS))}"
        ) from None
