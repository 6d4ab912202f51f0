"""Diagnostics domain package: checks of the analysis against simulated ground truth."""
