"""Registered benchmark problems."""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Dict

from . import jets
from .errors import InvalidSpec
from .jets import OdeProblem


def _ode1() -> OdeProblem:
    return OdeProblem(
        1,
        lambda y, t, ctx: [-y[0]],
        0,
        1,
        [1],
        exact=lambda t, ctx: [ctx.exp(-t)],
        name="ode1",
    )


def wave(kappa: int, name: str, T=1) -> OdeProblem:
    def rhs(y, t, ctx):
        return [y[0] * ctx.complex(0, 2 * kappa * ctx.pi)]

    def exact(t, ctx):
        return [ctx.exp(ctx.complex(0, 2 * kappa * ctx.pi * t))]

    return OdeProblem(1, rhs, 0, T, [complex(1, 0)], exact=exact, name=name, is_complex=True)


def _ode3a() -> OdeProblem:
    return OdeProblem(
        1,
        lambda y, t, ctx: [jets.exp(t) * y[0] * y[0]],
        0,
        1,
        [Fraction(-1, 2)],
        exact=lambda t, ctx: [-1 / (1 + ctx.exp(t))],
        name="ode3a",
    )


def _ode3b() -> OdeProblem:
    return OdeProblem(
        1,
        lambda y, t, ctx: [y[0] * (1 - y[0])],
        -10,
        0,
        lambda ctx: [1 / (1 + ctx.exp(ctx.real(10)))],
        exact=lambda t, ctx: [1 / (1 + ctx.exp(-t))],
        name="ode3b",
    )


def _ode3c() -> OdeProblem:
    # phi(0) = 1 so that the solution is 1/(1-t); phi(0.95) = 20
    return OdeProblem(
        1,
        lambda y, t, ctx: [y[0] * y[0]],
        0,
        Fraction(95, 100),
        [1],
        exact=lambda t, ctx: [1 / (1 - t)],
        name="ode3c",
    )


def plane_wave(alpha: Fraction, name: str) -> OdeProblem:
    def rhs(y, t, ctx):
        a = ctx.real(alpha) * ctx.pi
        return [y[1] * a, y[0] * (-a)]

    def exact(t, ctx):
        a = ctx.real(alpha) * ctx.pi
        return [ctx.cos(a * t), -ctx.sin(a * t)]

    return OdeProblem(2, rhs, 0, 1, [1, 0], exact=exact, name=name, components=("phi", "psi"))


# Van der Pol: x' = y, y' = mu (1 - x^2) y - x from the limit-cycle start
# (2, 0). The final time is fitted to the published N=480 error table.
VDP_SETUP = {"T": Fraction(6657, 1000), "x0": 2, "y0": 0}


def van_der_pol(mu, name: str) -> OdeProblem:
    def rhs(y, t, ctx):
        x, v = y
        return [v, (1 - x * x) * v * ctx.real(mu) - x]

    return OdeProblem(
        2, rhs, 0, VDP_SETUP["T"], [VDP_SETUP["x0"], VDP_SETUP["y0"]], name=name, components=("x", "y")
    )


# Chen system with the conventional chaotic parameters. T = 5 covers a few
# lobes of the attractor but stays resolvable in ext256.
CHEN = {"a": 35, "b": 3, "c": 28, "T": Fraction(5), "y0": (-10, 0, 37)}


def chen(name: str = "ode7") -> OdeProblem:
    a, b, c = CHEN["a"], CHEN["b"], CHEN["c"]

    def rhs(y, t, ctx):
        x, v, z = y
        return [(v - x) * a, x * (c - a) - x * z + v * c, x * v - z * b]

    return OdeProblem(3, rhs, 0, CHEN["T"], list(CHEN["y0"]), name=name, components=("x", "y", "z"))


REGISTRY: Dict[str, Callable[[], OdeProblem]] = {
    "ode1": _ode1,
    "ode2a": lambda: wave(1, "ode2a"),
    # the minimal-grid tables correspond to kappa*T = 9.4
    "ode2b": lambda: wave(10, "ode2b", Fraction(94, 100)),
    "ode3a": _ode3a,
    "ode3b": _ode3b,
    "ode3c": _ode3c,
    "ode4": lambda: plane_wave(Fraction(21, 10), "ode4"),
    "ode4a": lambda: plane_wave(Fraction(21, 10), "ode4a"),
    "ode4b": lambda: plane_wave(Fraction(101, 10), "ode4b"),
    "ode5a": lambda: van_der_pol(1, "ode5a"),
    "ode5b": lambda: van_der_pol(50, "ode5b"),
    "ode7": chen,
}

SELF_REFERENCE = {"ode5a", "ode5b", "ode7"}


def get_problem(name: str) -> OdeProblem:
    try:
        return REGISTRY[name]()
    except KeyError:
        raise InvalidSpec(f"unknown problem {name!r}; choose from {sorted(REGISTRY)}") from None
