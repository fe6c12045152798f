"""Shared fixtures: the default crystal, its reduced state, and toy models.

Toy crystals use the constant/linear/quadratic index forms so solver results
have closed-form oracles (see individual tests for the arithmetic).
"""
import pytest

from freqbin import _kernels
from freqbin.biphoton import joint_spectrum, reduce_to_bins
from freqbin.dispersion import Axis, SellmeierSet
from freqbin.qpm import CrystalSpec, PolingSegment, load_crystal


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # compile (or no-op) before anything is timed
    _kernels.warm_up()


@pytest.fixture(scope="session")
def default_spec():
    """Bundled two-period crystal at its shipped operating temperature."""
    return load_crystal("default")


@pytest.fixture(scope="session")
def default_state(default_spec):
    """Reduced two-bin state of the default crystal (shared; expensive-ish)."""
    sa = joint_spectrum(default_spec)
    return reduce_to_bins(sa, default_spec)


def const_set(name, axis, n0, lam_range=(0.2, 6.0), t_range=(-50.0, 500.0)):
    return SellmeierSet(name=name, axis=axis, form="constant",
                        coefficients={"n0": n0}, temperature_form="none",
                        valid_wavelength_um=lam_range,
                        valid_temperature_C=t_range)


@pytest.fixture(scope="session")
def const_crystal():
    """Constant n_e=2.2 / n_o=2.3: the root is lam_s = Lambda*(n_o - n_e)."""
    e = const_set("const_e", Axis.EXTRAORDINARY, 2.2)
    o = const_set("const_o", Axis.ORDINARY, 2.3)
    return CrystalSpec(segments=(PolingSegment(15.0e-6, 20e-3),),
                       temperature=25.0, pump_wavelength=775e-9,
                       axis_map={"H": "extraordinary", "V": "ordinary"},
                       sellmeier={"extraordinary": e, "ordinary": o})


@pytest.fixture(scope="session")
def quad_crystal():
    """Pump-centered parabolic index, shared by both polarizations.

    n = 2.2 - 0.05 (lam - lam_p)^2 makes the mismatch exactly symmetric
    under signal<->idler exchange with its minimum at degeneracy, so a
    suitable period puts one mirrored root pair in the bracket.
    """
    quad = SellmeierSet(name="quad", axis=Axis.EXTRAORDINARY,
                        form="quadratic",
                        coefficients={"n0": 2.2, "n1": -0.05, "n2": 0.775},
                        temperature_form="none",
                        valid_wavelength_um=(0.3, 3.0),
                        valid_temperature_C=(-50.0, 500.0))
    return CrystalSpec(segments=(PolingSegment(22.0e-6, 20e-3),),
                       temperature=25.0, pump_wavelength=775e-9,
                       axis_map={"H": "extraordinary", "V": "extraordinary"},
                       sellmeier={"extraordinary": quad})


@pytest.fixture(scope="session")
def symmetric_toy():
    """Two-segment dispersionless toy built for perfect indistinguishability.

    Peaks at 1.5 um (Lambda_1 = 15 um) and 1.8 um (Lambda_2 = 18 um) with
    the pump chosen so the two processes populate the same two bins
    (1/1.5 + 1/1.8 = 1/lam_p); L_1 = 134 poling periods exactly, so the
    realized inter-process phase equals the closed-form design phase.
    """
    e = const_set("toy_e", Axis.EXTRAORDINARY, 2.2)
    o = const_set("toy_o", Axis.ORDINARY, 2.3)
    lam_p = 1.0 / (1.0 / 1.5 + 1.0 / 1.8)
    return CrystalSpec(segments=(PolingSegment(15.0e-6, 2.010e-3),
                                 PolingSegment(18.0e-6, 2.010e-3)),
                       temperature=25.0, pump_wavelength=lam_p * 1e-6,
                       axis_map={"H": "extraordinary", "V": "ordinary"},
                       sellmeier={"extraordinary": e, "ordinary": o})
