"""Agent domain package: the Teamwork LASSO Bandit policy and its sample store."""
