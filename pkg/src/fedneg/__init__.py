"""fedneg: a deterministic federated-unlearning simulator built around
weight negation, with the measurement suite needed to check its claims
at desk scale.
"""

__version__ = "0.1.0"
