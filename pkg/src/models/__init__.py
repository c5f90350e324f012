"""Ant foraging chemotaxis simulator - Coupled model orchestration module"""
