"""Business logic and services"""
