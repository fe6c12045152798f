"""Two-photon spectral state of a multi-period crystal.

Monochromatic-pump picture: the pair amplitude is one-dimensional in the
signal (H-photon) angular frequency omega, with the partner slaved to
omega_p - omega. Each poling segment j contributes

    A_j(omega) = scale_j * L_j * sinc(dk_j L_j / 2)
                 * exp(i [kappa(omega) z_j + dk_j L_j / 2 + S(omega) L_tot]),

with kappa = k_p - k_s - k_i, S = k_s + k_i, z_j the segment start and
L_tot the crystal length: the grating of each segment starts fresh at its
own boundary, the pump phase is carried to the segment, and both daughter
fields propagate to the common exit face. sinc(x) = sin(x)/x.

At the two segments' phase-matched centers kappa = 2 pi / Lambda_j exactly,
so the relative phase between the processes collapses to the closed form

    2 pi L1/Lambda_2 + 2 pi (1/Lambda_1 - 1/Lambda_2) L_tot
        = 2 pi L1/Lambda_1 + 2 pi (1/Lambda_1 - 1/Lambda_2) L2   (mod 2 pi)

independently of the dispersion model; with L1 an integer number of poling
periods this is the textbook 2 pi (1/Lambda_1 - 1/Lambda_2) L2.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dispersion import Polarization, group_index
from .errors import (BinReductionError, GridResolutionError,
                     PhysicalityError)
from .qpm import (C_UM_PER_S, CrystalSpec, TWO_PI, _k_um,
                  solve_signal_idler)

C_M_PER_S = 2.99792458e8


def _sinc(x):
    """sin(x)/x with sinc(0) = 1 (numpy's np.sinc is the normalized variant)."""
    return np.sinc(np.asarray(x) / np.pi)


@dataclass(frozen=True)
class SpectralAmplitude:
    """Sampled biphoton amplitude on a signal-frequency grid.

    ``omega`` is the H-photon angular frequency [rad/s], symmetric about
    omega_p/2 so that the signal<->idler exchange omega -> omega_p - omega
    is exactly an array reversal. ``per_segment[j]`` holds segment j's
    complex amplitude; ``total`` their coherent sum, normalized so that
    sum(|total|^2) * d_omega = 1.
    """

    omega: np.ndarray
    per_segment: np.ndarray
    total: np.ndarray
    grid_meta: dict
    segment_points: tuple = field(default=(), repr=False)

    @property
    def d_omega(self) -> float:
        return float(self.omega[1] - self.omega[0])

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.total) ** 2


@dataclass(frozen=True)
class BiphotonState:
    """Reduced two-bin description {p, V, phi, delta_omega, tau_c}.

    p is the population of the process whose H photon sits in the
    high-frequency bin; V the magnitude of the exchange coherence scaled by
    2 sqrt(p(1-p)); phi the relative phase of the two processes at their
    phase-matched centers; delta_omega = omega_1 - omega_2 > 0 the bin
    splitting; tau_c the half-base of the triangular group-delay envelope.
    ``compensation_delay`` is the V-photon delay that maximizes the exchange
    overlap (the delay an interferometer must supply to erase the two
    processes' which-half-of-the-crystal timing).
    """

    p: float
    V: float
    phi: float
    delta_omega: float
    tau_c: float
    bin_centers: tuple
    compensation_delay: float | None = None
    spectrum: SpectralAmplitude | None = None

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise PhysicalityError(f"p = {self.p} outside [0, 1]")
        bound = min(1.0, 2.0 * np.sqrt(self.p * (1.0 - self.p)))
        if not -1e-12 <= self.V <= bound + 1e-9:
            raise PhysicalityError(
                f"V = {self.V} violates 0 <= V <= 2 sqrt(p(1-p)) = {bound:.6f}")
        if not self.delta_omega > 0.0:
            raise PhysicalityError("delta_omega must be > 0")
        if not self.tau_c > 0.0:
            raise PhysicalityError("tau_c must be > 0")


def _segment_geometry(spec: CrystalSpec, index: int):
    seg = spec.segments[index]
    return seg, spec.segment_start(index), spec.total_length


def _phase_sets(spec: CrystalSpec, signal_pol):
    signal_pol = Polarization(signal_pol)
    idler_pol = (Polarization.V if signal_pol is Polarization.H
                 else Polarization.H)
    return (signal_pol, idler_pol, spec.sellmeier_for(signal_pol),
            spec.sellmeier_for(idler_pol),
            spec.sellmeier_for(spec.pump_polarization))


def segment_amplitude(spec: CrystalSpec, segment_index: int, omega_s,
                      signal_pol=Polarization.H):
    """Complex emission amplitude of one segment at H-photon frequency(ies).

    Follows the exit-face convention in the module docstring; magnitude is
    amplitude_scale * L * |sinc(dk L/2)| (meters), so at exact phase match
    |A| = scale * L.
    """
    seg, z_j, l_tot = _segment_geometry(spec, segment_index)
    _, _, s_set, i_set, p_set = _phase_sets(spec, signal_pol)
    omega = np.asarray(omega_s, dtype=float)
    scalar = omega.ndim == 0
    omega = np.atleast_1d(omega)

    t = spec.temperature
    lam_p_um = spec.pump_wavelength * 1e6
    lam_s_um = TWO_PI * C_UM_PER_S / omega
    lam_i_um = 1.0 / (1.0 / lam_p_um - 1.0 / lam_s_um)
    s_set.check_range(lam_s_um.min(), t)
    s_set.check_range(lam_s_um.max(), t)
    i_set.check_range(lam_i_um.min(), t)
    i_set.check_range(lam_i_um.max(), t)

    # rad/m wavevectors
    from . import _kernels
    kp = _k_um(lam_p_um, t, p_set) * 1e6
    ks = TWO_PI * 1e6 * _kernels.index_n_many(lam_s_um, t, s_set._pack) / lam_s_um
    ki = TWO_PI * 1e6 * _kernels.index_n_many(lam_i_um, t, i_set._pack) / lam_i_um
    kappa = kp - ks - ki
    dk = kappa - TWO_PI / seg.period
    big_s = ks + ki

    amp = seg.amplitude_scale * seg.length * _sinc(0.5 * dk * seg.length)
    phase = kappa * z_j + 0.5 * dk * seg.length + big_s * l_tot
    out = amp * np.exp(1j * phase)
    return complex(out[0]) if scalar else out


def design_phase(spec: CrystalSpec, first: int = 0, second: int = 1) -> float:
    """Closed-form inter-process phase 2 pi (1/Lambda_a - 1/Lambda_b) L_b mod 2 pi."""
    sa, sb = spec.segments[first], spec.segments[second]
    phi = TWO_PI * (1.0 / sa.period - 1.0 / sb.period) * sb.length
    return float(np.mod(phi, TWO_PI))


def _lobe_width(spec, point):
    """Full sinc main-lobe width (rad/s) and rect width W = dng*L/c (s)."""
    t = spec.temperature
    ng_s = group_index(spec.field(point.signal_wavelength, point.signal_pol),
                       spec.sellmeier_for(point.signal_pol), method="analytic")
    ng_i = group_index(spec.field(point.idler_wavelength, point.idler_pol),
                       spec.sellmeier_for(point.idler_pol), method="analytic")
    return abs(ng_i - ng_s)


def joint_spectrum(spec: CrystalSpec, n_points: int = 4097,
                   lobes: float = 6.0, signal_pol=Polarization.H,
                   branch=None) -> SpectralAmplitude:
    """Coherent per-segment amplitudes on a shared exchange-symmetric grid.

    The grid is built symmetric about omega_p/2 (including the midpoint),
    spanning every segment's phase-matched peak plus ``lobes`` sinc lobes of
    margin, with at least 20 points per main lobe enforced.
    """
    points = [solve_signal_idler(spec, j, signal_pol=signal_pol,
                                 branch=branch)
              for j in range(len(spec.segments))]
    omega_p = TWO_PI * C_M_PER_S / spec.pump_wavelength
    centers = [TWO_PI * C_M_PER_S / p.signal_wavelength for p in points]

    lobe_w = []
    for p, seg in zip(points, spec.segments):
        dng = _lobe_width(spec, p)
        lobe_w.append(2.0 * TWO_PI * C_M_PER_S / (dng * seg.length))
    half_span = max(abs(c - 0.5 * omega_p) + lobes * lw
                    for c, lw in zip(centers, lobe_w))

    m = max(int(n_points) // 2, 8)
    dx = half_span / m
    min_lobe = min(lobe_w)
    if min_lobe / dx < 20.0:
        raise GridResolutionError(
            f"{2*m+1} points across {2*half_span:.3e} rad/s give "
            f"{min_lobe/dx:.1f} samples per sinc main lobe (< 20); "
            "increase n_points or decrease lobes")
    pos = np.arange(1, m + 1) * dx
    x = np.concatenate([-pos[::-1], [0.0], pos])
    omega = 0.5 * omega_p + x

    per = np.vstack([segment_amplitude(spec, j, omega, signal_pol=signal_pol)
                     for j in range(len(spec.segments))])
    total = per.sum(axis=0)
    norm = np.sqrt(np.sum(np.abs(total) ** 2) * dx)
    per = per / norm
    total = total / norm
    meta = {"span_rad_s": 2.0 * half_span, "resolution_rad_s": dx,
            "points": int(2 * m + 1), "lobes_margin": float(lobes),
            "points_per_lobe": float(min_lobe / dx)}
    return SpectralAmplitude(omega=omega, per_segment=per, total=total,
                             grid_meta=meta, segment_points=tuple(points))


def reduce_to_bins(sa: SpectralAmplitude, spec: CrystalSpec,
                   tau_scan_points: int = 801) -> BiphotonState:
    """Collapse a two-process spectrum to the bin-qubit parameters.

    Preconditions: exactly two segments, exchange-symmetric grid, and peaks
    separated by more than five bandwidths — otherwise BinReductionError.
    The exchange coherence is maximized over the V-photon compensation delay
    (the two processes emit from different crystal halves, so their raw
    temporal overlap is negligible; an interferometer removes that group
    delay before any interference is observed).
    """
    if sa.per_segment.shape[0] != 2:
        raise BinReductionError(
            "two-bin reduction requires exactly two emission processes "
            f"(got {sa.per_segment.shape[0]} segments)")
    omega = sa.omega
    omega_p = TWO_PI * C_M_PER_S / spec.pump_wavelength
    sym_err = np.max(np.abs((omega + omega[::-1]) - omega_p))
    if sym_err > 1e-6 * omega_p:
        raise BinReductionError(
            f"grid is not exchange-symmetric about omega_p/2 "
            f"(max asymmetry {sym_err:.3e} rad/s)")

    points = sa.segment_points or tuple(
        solve_signal_idler(spec, j) for j in range(2))
    centers = np.array([TWO_PI * C_M_PER_S / p.signal_wavelength
                        for p in points])
    hi = int(np.argmax(centers))        # process with H photon in bin 1
    lo = 1 - hi

    # bin centers: average the in-bin sub-peaks (identical at the crossing)
    w1 = 0.5 * (centers[hi] + (omega_p - centers[lo]))
    w2 = 0.5 * (centers[lo] + (omega_p - centers[hi]))
    delta_omega = w1 - w2

    dng = [_lobe_width(spec, p) for p in points]
    widths = [dng[j] * spec.segments[j].length / C_M_PER_S for j in range(2)]
    fwhm = [2.0 * 2.783115 / w for w in widths]   # sinc^2 FWHM in rad/s
    if delta_omega <= 5.0 * max(fwhm):
        raise BinReductionError(
            f"bin separation {delta_omega:.3e} rad/s below 5x bandwidth "
            f"{max(fwhm):.3e} rad/s; peaks unresolved")

    d_om = sa.d_omega
    a_hi = sa.per_segment[hi]
    a_lo = sa.per_segment[lo]
    weight_hi = np.sum(np.abs(a_hi) ** 2) * d_om
    weight_lo = np.sum(np.abs(a_lo) ** 2) * d_om
    p = float(weight_hi / (weight_hi + weight_lo))

    # exchange overlap, maximized over the compensation delay
    cross = np.conj(a_hi) * a_lo[::-1] * d_om / np.sqrt(weight_hi * weight_lo)
    theta = 2.0 * omega - omega_p

    def overlap_mag(tau):
        return np.abs(np.sum(cross * np.exp(1j * np.outer(
            np.atleast_1d(tau), theta)), axis=1))

    t_span = 1.2 * (sum(widths) + abs(spec.segment_start(hi)
                                      - spec.segment_start(lo))
                    * max(dng) / C_M_PER_S)
    taus = np.linspace(-t_span, t_span, int(tau_scan_points))
    mags = overlap_mag(taus)
    k = int(np.argmax(mags))
    lo_t = taus[max(k - 1, 0)]
    hi_t = taus[min(k + 1, len(taus) - 1)]
    gr = 0.5 * (np.sqrt(5.0) - 1.0)
    a, b = lo_t, hi_t
    c1 = b - gr * (b - a)
    c2 = a + gr * (b - a)
    f1, f2 = overlap_mag(c1)[0], overlap_mag(c2)[0]
    for _ in range(80):
        if f1 < f2:
            a, c1, f1 = c1, c2, f2
            c2 = a + gr * (b - a)
            f2 = overlap_mag(c2)[0]
        else:
            b, c2, f2 = c2, c1, f1
            c1 = b - gr * (b - a)
            f1 = overlap_mag(c1)[0]
    tau_star = 0.5 * (a + b)
    o_mag = float(overlap_mag(tau_star)[0])

    vis = 2.0 * np.sqrt(p * (1.0 - p)) * o_mag

    # relative phase of the two processes at their phase-matched centers
    amp_hi = segment_amplitude(spec, hi, centers[hi])
    amp_lo = segment_amplitude(spec, lo, centers[lo])
    phi = float(np.mod(np.angle(amp_lo) - np.angle(amp_hi), TWO_PI))

    tau_c = 0.5 * sum(widths)
    return BiphotonState(p=p, V=float(min(vis, 1.0)), phi=phi,
                         delta_omega=float(delta_omega), tau_c=float(tau_c),
                         bin_centers=(float(w1), float(w2)),
                         compensation_delay=float(tau_star), spectrum=sa)


@dataclass(frozen=True)
class NModeState:
    """Ideal n-bin descriptor: sum_j amplitudes[j] |w_j>|w_(n-j+1)>.

    centers strictly ascending [rad/s]; amplitudes default to 1/sqrt(n).
    ``pairing`` lists the (j, n-1-j) index pairs of the anti-diagonal
    correlation structure.
    """

    centers: tuple
    amplitudes: tuple

    @property
    def n(self) -> int:
        return len(self.centers)

    @property
    def pairing(self) -> tuple:
        return tuple((j, self.n - 1 - j) for j in range(self.n))

    def as_biphoton(self) -> BiphotonState:
        """n = 2 view: the equivalent BiphotonState."""
        if self.n != 2:
            raise ValueError("as_biphoton is defined for n = 2 only")
        a1, a2 = self.amplitudes
        tot = abs(a1) ** 2 + abs(a2) ** 2
        p = abs(a2) ** 2 / tot     # amplitude pairing (w2, w1) = bin-1-H term
        vis = 2.0 * abs(a1 * a2) / tot
        phi = float(np.mod(np.angle(a1) - np.angle(a2), TWO_PI))
        dw = self.centers[1] - self.centers[0]
        return BiphotonState(p=p, V=vis, phi=phi, delta_omega=float(dw),
                             tau_c=np.inf, bin_centers=(self.centers[1],
                                                        self.centers[0]))


def n_mode_state(centers, amplitudes=None) -> NModeState:
    """Equal-amplitude (by default) n-mode frequency-bin state descriptor."""
    centers = tuple(float(c) for c in centers)
    if len(centers) < 2:
        raise ValueError("need at least two bin centers")
    diffs = np.diff(centers)
    if np.any(diffs <= 0.0):
        raise ValueError("centers must be strictly ascending (no duplicates)")
    n = len(centers)
    if amplitudes is None:
        amplitudes = tuple(1.0 / np.sqrt(n) for _ in range(n))
    else:
        amplitudes = tuple(complex(a) for a in amplitudes)
        if len(amplitudes) != n:
            raise ValueError("amplitudes length must match centers")
        norm = np.sqrt(sum(abs(a) ** 2 for a in amplitudes))
        amplitudes = tuple(a / norm for a in amplitudes)
    return NModeState(centers=centers, amplitudes=amplitudes)
