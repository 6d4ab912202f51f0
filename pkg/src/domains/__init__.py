"""Domain packages: lasso, environment, scheduler, agent, diagnostics and harness."""
