"""Schottky Cusp Counting Lab - command-line engine package"""
__version__ = "1.0.0"
