"""Ant foraging chemotaxis simulator - Heat kernel oracle and bound evaluation module"""
