"""Dyadic cubes, Haar bases and dyadic function-space checks on finite quasi-metric measure spaces."""
