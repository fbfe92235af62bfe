"""Gene duplication diffusions: curves of equilibria, projections, limiting
one-dimensional diffusions, exit times, and the discrete models behind them."""

__version__ = "0.1.0"
