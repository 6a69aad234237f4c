"""Pydantic models and schemas"""
