"""
Simulation Package

Covariance models, Gaussian random field simulation and the synthetic
SST-like dataset generator.
"""
