"""
Preprocess Package

Seasonal mean estimation, anomalies and trend diagnostics, and the monthly
missing-data masks with the validation set drawn from them.
"""
