"""Exception hierarchy shared by every hamlab module."""

from __future__ import annotations


class HamlabError(Exception):
    """Base class for all errors raised by hamlab."""


class InvalidParamsError(HamlabError, ValueError):
    """Model parameters violate one or more domain constraints."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        super().__init__("invalid model parameters: " + "; ".join(self.violations))


class UnstableMarketError(HamlabError, ArithmeticError):
    """A stationary quantity was requested for a market that is not stable."""


class DegenerateDenominatorError(UnstableMarketError):
    """q_f * k * (q_f + k - q_c) is exactly zero, so the closed forms are undefined."""


class UnstableThetaError(HamlabError, ValueError):
    """The drift matrix has an eigenvalue with non-positive real part."""


class SingularSystemError(HamlabError, ArithmeticError):
    """The Lyapunov linear system is singular or too ill-conditioned to trust."""


class ZeroNoiseError(HamlabError, ArithmeticError):
    """The noise-trader variance is zero, so the benchmark variance is zero."""


class InvalidConfigError(HamlabError, ValueError):
    """Simulation, sweep or file configuration is malformed or inconsistent."""


class NumericOverflowError(HamlabError, ArithmeticError):
    """A simulated path left the representable region (|u| or |m| above threshold)."""

    def __init__(self, path_index: int, step: int, t: float):
        self.path_index = path_index
        self.step = step
        self.t = t
        super().__init__(
            f"path {path_index} overflowed at step {step} (t={t:.6g} years)"
        )


class PathsOverflowedError(HamlabError, ArithmeticError):
    """One or more paths of a Monte-Carlo run overflowed.

    ``failures`` holds one :class:`NumericOverflowError` per failed path, in
    path order. ``n_paths`` is the total number of paths attempted.
    """

    def __init__(self, failures, n_paths: int):
        self.failures = tuple(failures)
        self.n_paths = n_paths
        idx = ", ".join(str(f.path_index) for f in self.failures)
        super().__init__(f"{len(self.failures)}/{n_paths} paths overflowed: [{idx}]")

    @property
    def path_indices(self) -> tuple[int, ...]:
        return tuple(f.path_index for f in self.failures)


class DelayBufferUnderflowError(HamlabError, RuntimeError):
    """Internal consistency failure of the delay ring buffer."""
