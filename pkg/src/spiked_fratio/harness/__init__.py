"""Experiment runner, statistical summaries, verification suites and CLI."""
