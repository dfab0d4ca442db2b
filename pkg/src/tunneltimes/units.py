"""Unit system shared by every computation.

Internally hbar = 1 is *not* assumed; instead all quantities are carried in a
single consistent system (energies in eV, lengths in nm, times in ps) with the
particle mass expressed through the kinetic constant C = hbar^2 / (2 m).  A
``UnitSystem`` with ``natural=True`` switches to hbar = m = 1 for analytic
checks in dimensionless units.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# hbar in eV * ps
HBAR_EV_PS = 6.582119569e-4

# hbar^2 / (2 m_e) in eV * nm^2 (CODATA-derived); the single place this
# constant lives.
KINETIC_EV_NM2 = 0.0380998


@dataclass(frozen=True)
class UnitSystem:
    """Physical constants and the particle mass.

    Parameters
    ----------
    mass:
        Particle mass as a multiplier of the free-electron mass (ignored when
        ``natural`` is set).
    natural:
        If true, use hbar = 1 and m = 1 (dimensionless units for analytic
        test points); otherwise eV / nm / ps.
    """

    mass: float = 1.0
    natural: bool = False
    hbar: float = field(init=False)
    kinetic: float = field(init=False)  # hbar^2 / (2 m)

    def __post_init__(self) -> None:
        if self.mass <= 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if self.natural:
            object.__setattr__(self, "hbar", 1.0)
            object.__setattr__(self, "kinetic", 0.5)
        else:
            object.__setattr__(self, "hbar", HBAR_EV_PS)
            object.__setattr__(self, "kinetic", KINETIC_EV_NM2 / self.mass)

    @property
    def m(self) -> float:
        """Mass in internal units (eV * ps^2 / nm^2, or 1 in natural units)."""
        return self.hbar**2 / (2.0 * self.kinetic)

    def energy(self, k: float) -> float:
        """Kinetic energy E(k) = hbar^2 k^2 / (2 m)."""
        return self.kinetic * k * k

    def wavenumber(self, energy: float) -> float:
        """Inverse of :meth:`energy` for positive-momentum states."""
        if energy <= 0:
            raise ValueError(f"energy must be positive, got {energy}")
        return (energy / self.kinetic) ** 0.5

    def velocity(self, k: float) -> float:
        """Group velocity hbar k / m."""
        return self.hbar * k / self.m
