"""Quantum principal bundles at bounded degree: Cuntz-type classifying algebras, the flip-over
crossproduct, and universal characteristic classes, all in exact arithmetic over Q(q^(1/2))."""

__version__ = "0.1.0"
