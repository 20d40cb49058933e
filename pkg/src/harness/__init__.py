"""
Experiment harness: run configuration, presets, runs, studies and the CLI
"""
