"""Injection flows between cliques and the backbone, and the backbone-side registry."""
