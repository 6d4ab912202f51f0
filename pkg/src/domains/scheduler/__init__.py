"""
Scheduler domain package.

Deterministic teamwork/selfish epoch schedule and the constants of the
regret analysis derived from a world specification.
"""
