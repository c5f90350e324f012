"""Ant foraging chemotaxis simulator - Snapshot and time series storage module"""
