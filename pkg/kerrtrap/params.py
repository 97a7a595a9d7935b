"""Parameter engine.

Maps raw experimental inputs (:class:`PhysicalParams`) to every coefficient
of the polariton equations of motion (:class:`DerivedRates`), the
conditional phase, the gate fidelity, and the validity constraints of the
trapping scheme (:class:`ConstraintReport`).

Units are CGS throughout: cm, s, rad/s.
"""

import math
import warnings
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional, Tuple

from giving import give

from .utils import ConfigError, NumericalError, PhysicsWarning, require_positive

SPEED_OF_LIGHT = 2.99792458e10

DEFAULT_RATIO_THRESHOLD = 10.0
DEFAULT_BRAGG_TOLERANCE = 1e-2

CONSTRAINT_NAMES = (
    "optically_thick",
    "signal_fits_medium",
    "long_probe",
    "interaction_time",
    "trapping_bandwidth",
    "signal_bandwidth_eit",
    "probe_bandwidth",
    "adiabatic_storage",
    "pulse_compression",
    "cross_absorption",
    "bragg_condition",
)


class DomainError(ConfigError, ValueError):
    """An input lies outside the domain of a formula."""


class DegenerateDriveError(ConfigError, ValueError):
    """A drive Rabi frequency vanishes, so the polariton is purely atomic."""


class ValidationError(ConfigError, ValueError):
    """Physical invariants are violated.

    Attributes:
        failed: Names of the offending quantities.
    """

    def __init__(self, failed, message=None):
        self.failed = list(failed)
        super().__init__(
            message or f"Invalid physical parameters: {', '.join(self.failed)}"
        )


class CrossAbsorptionWarning(PhysicsWarning):
    """The detuning does not dominate the decay of the cross-coupling level."""


class BraggMismatchWarning(PhysicsWarning):
    """The signal carrier is far from the Bragg wavevector of the structure."""


@dataclass(frozen=True)
class PhysicalParams:
    """Raw experimental inputs.

    Attributes:
        L: Medium length [cm].
        S: Beam cross-section [cm²].
        rho_A: Density of the trapping dopants [cm⁻³].
        rho_B: Density of the cross-coupling dopants [cm⁻³].
        omega_p: Probe carrier angular frequency [rad/s].
        omega_signal: Signal carrier angular frequency, inside the gap [rad/s].
        Omega_dA: Drive Rabi frequency on species A while trapping [rad/s].
        Omega_dA_prime: Drive Rabi frequency on species A while the signal
            enters [rad/s].
        Omega_dB: Drive Rabi frequency on species B [rad/s].
        Delta_B: Signal detuning on the cross-coupling transition [rad/s].
        gamma_a: Excited-state decay rate, both species [s⁻¹].
        gamma_d: Decay rate of the cross-coupling level [s⁻¹].
        gamma_bc: Raman coherence decay rate, both species [s⁻¹].
        delta_omega_PBG: Photonic bandgap width [rad/s].
        p_s: Structure period [cm].
        T_in: Input signal pulse duration [s].
        T_p: Probe pulse duration [s].
        sigma_abs_A: Resonant absorption cross-section of species A [cm²].
        c: Vacuum light speed [cm/s].
    """

    L: float
    S: float
    rho_A: float
    rho_B: float
    omega_p: float
    omega_signal: float
    Omega_dA: float
    Omega_dA_prime: float
    Omega_dB: float
    Delta_B: float
    gamma_a: float
    gamma_d: float
    gamma_bc: float
    delta_omega_PBG: float
    p_s: float
    T_in: float
    T_p: float
    sigma_abs_A: float
    c: float = SPEED_OF_LIGHT

    @property
    def k_p(self):
        """Probe carrier wavevector [cm⁻¹]."""
        return self.omega_p / self.c

    @property
    def k_signal(self):
        """Signal carrier wavevector [cm⁻¹]."""
        return self.omega_signal / self.c

    @property
    def bragg_mismatch(self):
        """Relative distance of the signal carrier from ``π/p_s``."""
        k_bragg = math.pi / self.p_s
        return abs(self.k_signal - k_bragg) / k_bragg

    def invalid_fields(self):
        """Return the names of fields violating the physical invariants."""
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        delta = values.pop("Delta_B")
        failed = require_positive(**values)
        if not math.isfinite(delta) or delta == 0:
            failed.append("Delta_B")
        return failed

    def validate(self):
        """Raise :class:`ValidationError` if any invariant is violated."""
        failed = self.invalid_fields()
        if failed:
            raise ValidationError(failed)
        return self

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class PolaritonRates:
    """Coefficients of the polariton equations of motion.

    This is what the numerical modules consume. It can be expressed in
    physical units (:attr:`DerivedRates.equations`) or in desk units
    (:meth:`DerivedRates.desk_rates`).

    Attributes:
        v_s: Signal group velocity.
        v_p: Probe group velocity.
        eta: Complex cross-coupling rate.
        beta: Bragg reflection rate.
        kappa_s: Signal absorption rate.
        kappa_p: Probe absorption rate.
        L: Medium length, used to normalize excitation numbers.
    """

    v_s: float
    v_p: float
    eta: complex
    beta: float
    kappa_s: float = 0.0
    kappa_p: float = 0.0
    L: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "eta", complex(self.eta))
        numbers = [self.v_s, self.v_p, self.beta, self.kappa_s, self.kappa_p]
        numbers += [self.L, self.eta.real, self.eta.imag]
        if not all(math.isfinite(x) for x in numbers):
            raise ConfigError(f"Non-finite polariton rates: {self}")
        negative = [
            name
            for name in ("v_s", "v_p", "beta", "kappa_s", "kappa_p")
            if getattr(self, name) < 0
        ]
        if negative or self.L <= 0:
            raise ConfigError(
                f"Polariton rates must be nonnegative with L > 0: {self}"
            )

    @property
    def phi(self):
        """Conditional phase ``Re(η)·L/v_p``."""
        return self.eta.real * self.L / self.v_p

    @property
    def lossless(self):
        """Whether excitation numbers are conserved by these rates."""
        return (
            self.kappa_s == 0 and self.kappa_p == 0 and self.eta.imag == 0
        )

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class DerivedRates:
    """Every derived coefficient, phase and fidelity for a parameter set."""

    L: float
    g_A: float
    g_B: float
    g_B_prime: float
    N_A: float
    N_B: float
    theta_A: float
    theta_B: float
    theta_A_prime: float
    v_s: float
    v_p: float
    v_s_prime: float
    kappa_s: float
    kappa_p: float
    kappa_d_bound: float
    eta: complex
    beta: float
    phi: float
    phi_eq: float
    phi_approx: float
    F: float
    z_loc: float
    amplitude_boost: float
    t_int: float
    delta_omega_p_max: float
    optical_depth_A: float
    signal_bandwidth: float
    eit_bandwidth: float
    cross_absorption_significant: bool

    @property
    def cos2_A(self):
        return math.cos(self.theta_A) ** 2

    @property
    def cos2_B(self):
        return math.cos(self.theta_B) ** 2

    @property
    def equations(self):
        """The equation-of-motion coefficients in physical units."""
        return PolaritonRates(
            v_s=self.v_s,
            v_p=self.v_p,
            eta=self.eta,
            beta=self.beta,
            kappa_s=self.kappa_s,
            kappa_p=self.kappa_p,
            L=self.L,
        )

    def desk_rates(self, max_signal_velocity=None, max_bragg_rate=None):
        """Coefficients in desk units, for tractable numerical runs.

        The length unit is the medium length and the time unit is the
        interaction time ``L/v_p``, so the probe velocity is 1 and the phase
        ``ηL/v_p`` is kept. The signal velocity and the Bragg rate can be
        capped, which leaves the probe phase unchanged as long as the signal
        stays trapped.

        Arguments:
            max_signal_velocity: Cap on the signal velocity, in medium
                lengths per interaction time.
            max_bragg_rate: Cap on the Bragg rate, in radians per
                interaction time.
        """
        t = self.t_int
        v_s = self.v_s * t / self.L
        beta = self.beta * t
        if max_signal_velocity is not None:
            v_s = min(v_s, max_signal_velocity)
        if max_bragg_rate is not None:
            beta = min(beta, max_bragg_rate)
        return PolaritonRates(
            v_s=v_s,
            v_p=1.0,
            eta=self.eta * t,
            beta=beta,
            kappa_s=self.kappa_s * t,
            kappa_p=self.kappa_p * t,
            L=1.0,
        )

    def to_dict(self):
        data = asdict(self)
        data["eta"] = [self.eta.real, self.eta.imag]
        return data


@dataclass(frozen=True)
class ApproxPhase:
    """Approximate conditional phase and the regime it assumes.

    Attributes:
        phi: The approximate phase [rad].
        coupling_ratio: ``g_A² N_A / Ω_dA²``, which must be large.
        regime_holds: Whether ``coupling_ratio`` reaches the threshold.
    """

    phi: float
    coupling_ratio: float
    regime_holds: bool


def coupling_constant(gamma, k, S, L, c=SPEED_OF_LIGHT):
    """Atom-field coupling from a decay rate, ``g² = 3πcγ/(2k²SL)``.

    Arguments:
        gamma: Decay rate of the transition [s⁻¹]. Zero gives zero coupling.
        k: Wavevector of the field [cm⁻¹].
        S: Beam cross-section [cm²].
        L: Medium length [cm].
        c: Light speed [cm/s].

    Returns:
        The coupling constant g [rad/s].
    """
    failed = require_positive(k=k, S=S, L=L, c=c)
    if not (math.isfinite(gamma) and gamma >= 0):
        failed.insert(0, "gamma")
    if failed:
        raise DomainError(
            f"coupling_constant needs positive inputs: {', '.join(failed)}"
        )
    return math.sqrt(3 * math.pi * c * gamma / (2 * k ** 2 * S * L))


def _tan2(g, N_atoms, Omega_d):
    if Omega_d == 0:
        raise DegenerateDriveError(
            "A vanishing drive leaves a purely atomic excitation"
        )
    if Omega_d < 0 or g < 0 or not N_atoms >= 1:
        raise DomainError(
            f"mixing_angle needs g >= 0, N >= 1, Omega_d > 0,"
            f" got g={g}, N={N_atoms}, Omega_d={Omega_d}"
        )
    return g * g * N_atoms / (Omega_d * Omega_d)


def mixing_angle(g, N_atoms, Omega_d):
    """Mixing angle ``θ = atan(g√N/Ω_d)`` of a dark-state polariton."""
    return math.atan(math.sqrt(_tan2(g, N_atoms, Omega_d)))


def approx_phase(params, ratio_threshold=DEFAULT_RATIO_THRESHOLD):
    """Approximate conditional phase, valid when ``g_A² N_A ≫ Ω_dA²``.

    The formula is ``3πγ_d/(2k_p²Δ_B S)·(Ω_dA/Ω_dB)²·(ρ_B/ρ_A)``.
    """
    p = params
    phi = (
        3
        * math.pi
        * p.gamma_d
        / (2 * p.k_p ** 2 * p.Delta_B * p.S)
        * (p.Omega_dA / p.Omega_dB) ** 2
        * (p.rho_B / p.rho_A)
    )
    g_A = coupling_constant(p.gamma_a, p.k_signal, p.S, p.L, p.c)
    ratio = g_A ** 2 * p.rho_A * p.S * p.L / p.Omega_dA ** 2
    return ApproxPhase(
        phi=phi, coupling_ratio=ratio, regime_holds=ratio >= ratio_threshold
    )


def distortion_rate_bound(v_s, L, delta_omega_PBG, c=SPEED_OF_LIGHT):
    """Largest spreading rate ``2v_s³/(πcL²δω_PBG)`` of a trapped signal.

    It is the per-mode rate at the edge ``δq = v_s/(cL)`` of the signal
    spectrum, with ``β`` written through the photonic bandgap.
    """
    return 2 * v_s ** 3 / (math.pi * c * L ** 2 * delta_omega_PBG)


def derive_rates(params):
    """Compute every :class:`DerivedRates` field from ``params``.

    Raises:
        ValidationError: If ``params`` violates an invariant.
        NumericalError: If the two forms of the conditional phase disagree.
    """
    p = params.validate()
    k_s = p.k_signal
    k_p = p.k_p

    g_A = coupling_constant(p.gamma_a, k_s, p.S, p.L, p.c)
    g_B = coupling_constant(p.gamma_a, k_p, p.S, p.L, p.c)
    g_Bp = coupling_constant(p.gamma_a, k_s, p.S, p.L, p.c)
    N_A = p.rho_A * p.S * p.L
    N_B = p.rho_B * p.S * p.L

    tan2_A = _tan2(g_A, N_A, p.Omega_dA)
    tan2_B = _tan2(g_B, N_B, p.Omega_dB)
    tan2_Ap = _tan2(g_A, N_A, p.Omega_dA_prime)
    cos2_A, sin2_A = 1 / (1 + tan2_A), tan2_A / (1 + tan2_A)
    cos2_B, sin2_B = 1 / (1 + tan2_B), tan2_B / (1 + tan2_B)
    cos2_Ap = 1 / (1 + tan2_Ap)

    v_s = p.c * cos2_A
    v_p = p.c * cos2_B
    v_s_prime = p.c * cos2_Ap
    kappa_s = p.gamma_bc * sin2_A
    kappa_p = p.gamma_bc * sin2_B
    eta = (
        (1 + 1j * p.gamma_d / (2 * p.Delta_B))
        * cos2_A
        * sin2_B
        * g_Bp ** 2
        / p.Delta_B
    )
    beta = 0.5 * p.delta_omega_PBG * cos2_A
    t_int = p.L / v_p

    phi = eta.real * t_int
    phi_eq = g_Bp ** 2 * p.L * cos2_A * tan2_B / (p.c * p.Delta_B)
    if abs(phi - phi_eq) > 1e-12 * max(abs(phi), abs(phi_eq)):
        raise NumericalError(
            f"Conditional phase forms disagree: {phi} != {phi_eq}"
        )

    kappa_d_bound = distortion_rate_bound(v_s, p.L, p.delta_omega_PBG, p.c)
    F = math.exp(-(kappa_d_bound + kappa_s + kappa_p) * t_int)

    significant = abs(p.Delta_B) <= p.gamma_d
    if significant:
        warnings.warn(
            f"|Delta_B| = {abs(p.Delta_B)} does not exceed gamma_d ="
            f" {p.gamma_d}: cross-absorption is not negligible",
            CrossAbsorptionWarning,
        )

    rates = DerivedRates(
        L=p.L,
        g_A=g_A,
        g_B=g_B,
        g_B_prime=g_Bp,
        N_A=N_A,
        N_B=N_B,
        theta_A=math.atan(math.sqrt(tan2_A)),
        theta_B=math.atan(math.sqrt(tan2_B)),
        theta_A_prime=math.atan(math.sqrt(tan2_Ap)),
        v_s=v_s,
        v_p=v_p,
        v_s_prime=v_s_prime,
        kappa_s=kappa_s,
        kappa_p=kappa_p,
        kappa_d_bound=kappa_d_bound,
        eta=eta,
        beta=beta,
        phi=phi,
        phi_eq=phi_eq,
        phi_approx=approx_phase(p).phi,
        F=F,
        z_loc=p.T_in * v_s_prime,
        amplitude_boost=math.sqrt(v_s / v_s_prime),
        t_int=t_int,
        delta_omega_p_max=(
            p.Omega_dB ** 2
            * k_p
            / (p.gamma_a * math.sqrt(1.5 * math.pi * p.rho_B * p.L))
        ),
        optical_depth_A=p.sigma_abs_A * p.rho_A * p.L,
        signal_bandwidth=v_s / (p.c * p.L),
        eit_bandwidth=p.Omega_dA ** 2 / (p.gamma_a * p.c),
        cross_absorption_significant=significant,
    )
    give(event="derive_rates", phi=phi, F=F, v_p=v_p, v_s=v_s)
    return rates


@dataclass(frozen=True)
class Constraint:
    """One validity inequality of the scheme.

    ``value`` is compared to ``bound`` in the direction given by ``sense``
    (``">"`` or ``"<"``). ``margin`` is the factor by which the inequality is
    satisfied (above 1 when it holds) and is None when ``value`` is zero.
    Advisory constraints raise warnings but never fail a run.
    """

    name: str
    description: str
    value: float
    bound: float
    sense: str
    passed: bool
    margin: Optional[float]
    advisory: bool = False


def _constraint(name, description, value, bound, sense, advisory=False):
    if sense == ">":
        passed = value > bound
        margin = value / bound
    else:
        passed = value < bound
        margin = bound / value if value != 0 else None
    return Constraint(
        name=name,
        description=description,
        value=value,
        bound=bound,
        sense=sense,
        passed=passed,
        margin=margin,
        advisory=advisory,
    )


@dataclass(frozen=True)
class ConstraintReport:
    """Outcome of :func:`validate_constraints`."""

    constraints: Tuple[Constraint, ...]
    ratio_threshold: float

    def __getitem__(self, name):
        for c in self.constraints:
            if c.name == name:
                return c
        raise KeyError(name)

    def __iter__(self):
        return iter(self.constraints)

    @property
    def failed(self):
        """Names of the failed non-advisory constraints."""
        return [
            c.name
            for c in self.constraints
            if not c.passed and not c.advisory
        ]

    @property
    def all_passed(self):
        return not self.failed

    @property
    def margins(self):
        return {c.name: c.margin for c in self.constraints}

    def to_dict(self):
        return {
            "ratio_threshold": self.ratio_threshold,
            "all_passed": self.all_passed,
            "constraints": [asdict(c) for c in self.constraints],
        }


def validate_constraints(
    params,
    rates,
    ratio_threshold=DEFAULT_RATIO_THRESHOLD,
    bragg_tolerance=DEFAULT_BRAGG_TOLERANCE,
):
    """Check every validity inequality of the trapping scheme.

    Strong inequalities (``≪``, ``≫``) are read as a ratio of at least
    ``ratio_threshold``. A report is always produced.
    """
    p, r = params, rates
    th = ratio_threshold
    kappa_max = max(r.kappa_d_bound, r.kappa_s, r.kappa_p)
    constraints = (
        _constraint(
            "optically_thick",
            "sigma_A rho_A L >> 1",
            r.optical_depth_A,
            th,
            ">",
        ),
        _constraint(
            "signal_fits_medium", "z_loc < L", r.z_loc, p.L, "<"
        ),
        _constraint(
            "long_probe", "v_p T_p > z_loc", r.v_p * p.T_p, r.z_loc, ">"
        ),
        _constraint(
            "interaction_time",
            "t_int max(kappa) << 1",
            r.t_int * kappa_max,
            1 / th,
            "<",
        ),
        _constraint(
            "trapping_bandwidth",
            "dq << beta/v_s",
            r.signal_bandwidth,
            r.beta / r.v_s / th,
            "<",
        ),
        _constraint(
            "signal_bandwidth_eit",
            "dq < Omega_dA^2/(gamma_a c)",
            r.signal_bandwidth,
            r.eit_bandwidth,
            "<",
        ),
        _constraint(
            "probe_bandwidth",
            "1/T_p < domega_p_max",
            1 / p.T_p,
            r.delta_omega_p_max,
            "<",
        ),
        _constraint(
            "adiabatic_storage",
            "Omega_dA' T_in > 1",
            p.Omega_dA_prime * p.T_in,
            1.0,
            ">",
        ),
        _constraint(
            "pulse_compression", "v_s > v_s'", r.v_s, r.v_s_prime, ">"
        ),
        _constraint(
            "cross_absorption",
            "|Delta_B| > gamma_d",
            abs(p.Delta_B),
            p.gamma_d,
            ">",
            advisory=True,
        ),
        _constraint(
            "bragg_condition",
            "|k - pi/p_s|/(pi/p_s) < tolerance",
            p.bragg_mismatch,
            bragg_tolerance,
            "<",
            advisory=True,
        ),
    )
    for c in constraints:
        give(
            event="constraint", name=c.name, passed=c.passed, margin=c.margin
        )
    if not constraints[-1].passed:
        warnings.warn(
            f"Signal carrier is {p.bragg_mismatch:.3g} away from the Bragg"
            " wavevector pi/p_s",
            BraggMismatchWarning,
        )
    return ConstraintReport(constraints=constraints, ratio_threshold=th)
