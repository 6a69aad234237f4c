"""API routes and endpoints"""
