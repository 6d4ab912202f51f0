"""Harness domain package: episode runner, replication grids and result files."""
