"""Contour-integral interior eigensolvers for A x = lambda B x."""
