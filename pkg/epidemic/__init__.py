"""Clique dissemination by push gossip."""
