"""Ant foraging chemotaxis simulator - Rectangular mesh and discrete operators module"""
