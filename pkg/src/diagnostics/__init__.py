"""Ant foraging chemotaxis simulator - Estimate diagnostics module"""
