"""Scenario files, the run loop, trace audit and the command line."""
