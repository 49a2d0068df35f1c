"""Figure generation from tcgp experiment CSVs; no shared code with the simulator."""

__version__ = "0.1.0"

from .figures import plot_regret_curves, plot_satisfaction, plot_zeta_tradeoff

__all__ = ["plot_regret_curves", "plot_satisfaction", "plot_zeta_tradeoff"]
