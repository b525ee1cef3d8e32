"""
Extremes Package

The space-time cylinder minimum process and the pooled-minima benchmark
forecast built from it.
"""
