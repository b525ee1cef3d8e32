"""
Fields Package

The competition calendar and the binary storage of gridded space-time
fields, plus the CSV tables (validation index, truth) that travel with them.
"""
