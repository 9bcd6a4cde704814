"""airylab: a desk-scale spectral laboratory for Fourier-Lebesgue norms,
Airy-flow estimates and the mKdV contraction scheme."""

__version__ = "0.1.0"
