"""Ant foraging chemotaxis simulator - ODE comparison module"""
