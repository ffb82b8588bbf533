"""Obstacle problem FEM solver with a guaranteed functional error majorant."""
