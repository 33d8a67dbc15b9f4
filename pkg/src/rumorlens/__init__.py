"""Rumor veracity analytics: factuality cues, certainty regression, trend discontinuities, boosted classifiers."""

__version__ = "0.1.0"
