"""Numerical toolkit for dilute Bose gases in Neumann boxes: scattering
lengths, image-charge Green functions, two-body ground states, correlation
kernels, energy expansions, a Fock-space sandbox and cell lower bounds."""

__version__ = "0.1.0"
