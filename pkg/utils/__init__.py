"""Numerical core of the vMF toolkit"""
