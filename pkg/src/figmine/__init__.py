"""figmine: mine labeled image datasets from scientific-article figures.

The pipeline turns a search query into a set of open-access articles, pulls
their figures and captions, splits compound figures into master images with
dependents and insets, distributes caption text to subfigure identifiers,
resolves scale bars into physical pixel sizes, and emits a single JSON
document describing the resulting dataset.
"""

__version__ = "0.1.0"
