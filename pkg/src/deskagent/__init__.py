"""Behavior-grounded computer-using agent: scaffold, ETL, and workspace."""

__version__ = "0.1.0"
