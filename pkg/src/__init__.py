"""Ant foraging chemotaxis simulator - Main package"""
