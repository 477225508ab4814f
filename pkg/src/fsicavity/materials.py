"""Material parameters for the solid shell and the fluid cavity."""

from dataclasses import dataclass


@dataclass(frozen=True)
class MaterialParams:
    """Densities, Lame constants and viscosity; all strictly positive.

    rho_solid, rho_fluid : mass densities of the elastic shell and the fluid
    lam, mu_hat          : first and second Lame constants of the solid
    mu                   : dynamic viscosity of the fluid
    """

    rho_solid: float = 1.0
    rho_fluid: float = 1.0
    lam: float = 1.0
    mu_hat: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        for name in ("rho_solid", "rho_fluid", "lam", "mu_hat", "mu"):
            value = getattr(self, name)
            if not value > 0.0:
                raise ValueError(f"{name} must be strictly positive, got {value}")

    @property
    def pressure_wave_speed(self):
        """Speed of the fastest elastic wave, sqrt((lam + 2 mu_hat)/rho)."""
        return ((self.lam + 2.0 * self.mu_hat) / self.rho_solid) ** 0.5
