"""Unsupervised semantic frame and role induction toolkit."""

__version__ = "0.1.0"
