"""Injection Point scoring, election, maintenance and multi-point planning."""
