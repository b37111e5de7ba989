"""Fractional perimeters, nonlocal Massari functionals and rescaled fractional
Allen-Cahn energies on 1D/2D grids, with the experiments that probe their
asymptotics."""

__version__ = "0.1.0"
