"""Multi-view graph encoder and metric meta-learning for cross-domain few-shot graph classification."""

__version__ = "0.1.0"
