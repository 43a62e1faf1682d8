"""Information items, replicas, requirements and the injection trigger."""
