"""Blind unmixing of terahertz absorption spectra of mixtures.

The main entry points are :func:`thzunmix.hyperion.hyperion_unmix` for blind
signature recovery, :func:`thzunmix.composition.estimate_composition` for
proportions against a known library, and :mod:`thzunmix.synth` for synthetic
THz-TDS datasets with known ground truth.
"""

__version__ = "0.1.0"
