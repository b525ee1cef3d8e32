"""
Geometry Package

Sea-cell grids, great-circle distances and the fixed-radius disk neighbor
tables used by the space-time cylinder.
"""
