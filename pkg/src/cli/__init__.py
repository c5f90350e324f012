"""Ant foraging chemotaxis simulator - Command line interface module"""
