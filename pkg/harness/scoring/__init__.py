"""
Scoring Package

Threshold-weighted CRPS on the design grid, submission files and their
validation, and the leaderboard.
"""
