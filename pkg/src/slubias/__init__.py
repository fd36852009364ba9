"""Demographic bias auditing for spoken language understanding systems.

Scores utterances (Exact Match, WER), fits dummy-coded logistic regressions
by maximum likelihood and runs Wald, likelihood-ratio adjustment,
chi-squared contingency and one-way ANOVA tests over demographic groups.
"""

__version__ = "0.1.0"
