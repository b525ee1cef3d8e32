"""
Utils Package

Supporting modules for the harness: logging setup and tabular export.
"""
