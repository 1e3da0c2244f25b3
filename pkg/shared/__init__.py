"""Shared utilities package"""
