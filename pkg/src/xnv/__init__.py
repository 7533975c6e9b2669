"""Correlated Nystrom Views and related semi-supervised regression tools."""

__version__ = "0.1.0"
