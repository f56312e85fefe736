"""Bot detection and behaviour analysis for event-scoped microblog corpora."""

__version__ = "0.1.0"
