"""Cost accounting, baselines and graph metrics."""
