"""Ant foraging chemotaxis simulator - Elliptic and time-stepping solvers module"""
