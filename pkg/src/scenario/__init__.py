"""Ant foraging chemotaxis simulator - Scenario configuration module"""
