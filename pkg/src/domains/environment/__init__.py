"""
Environment domain package.

Synthetic sparse linear worlds, batch sampling, noisy feedback and the
ground-truth oracle used for regret accounting.
"""
