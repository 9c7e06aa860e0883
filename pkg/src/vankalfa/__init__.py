"""Local Fourier analysis and two-grid validation of additive Vanka relaxation
for P2-P1 and Q2-Q1 discretizations of the Stokes equations."""

__version__ = "0.1.0"
